#pragma once

// Coefficient-wise action of T(t), S(t), F, Delta(tau) = T(tau) + S(tau)F and
// their resolvents on a truncated Riesz-spectral system.

#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sdstab/errors.hpp"
#include "sdstab/numeric.hpp"
#include "sdstab/system.hpp"

namespace sdstab {

struct Tolerances {
    double separation = 1e-12;       ///< absolute, on |z - e^{tau lambda_n}|
    double smw_denominator = 1e-12;  ///< absolute, on |1 - F R(z,T) S|
};

struct NormBounds {
    double lower;
    double upper;
};

/// M_a sum|a_n|^2 <= ||x||^2 <= M_b sum|a_n|^2.
inline NormBounds norm_sq_bounds(const CoeffVector& x, const RieszSystem& sys) {
    require_length(x, sys, "norm_sq_bounds");
    const double s = x.norm_sq();
    return {sys.riesz_Ma() * s, sys.riesz_Mb() * s};
}

inline CoeffVector apply_semigroup(const RieszSystem& sys, double t, const CoeffVector& x) {
    if (!(t >= 0.0)) throw std::invalid_argument("apply_semigroup: t must be nonnegative");
    require_length(x, sys, "apply_semigroup");
    const auto& lam = sys.eigenvalues();
    CoeffVector out(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) out[n] = std::exp(t * lam[n]) * x[n];
    return out;
}

/// S(t)1 = sum (e^{t lambda_n} - 1)/lambda_n b_n phi_n.
inline CoeffVector apply_hold(const RieszSystem& sys, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("apply_hold: t must be nonnegative");
    const auto& lam = sys.eigenvalues();
    const auto& b = sys.b();
    CoeffVector out(sys.truncation());
    for (std::size_t n = 0; n < sys.support_b(); ++n) {
        if (b[n] == cplx{0.0, 0.0}) continue;
        out[n] = t * numeric::phi1(t * lam[n]) * b[n];
    }
    return out;
}

/// Fx = sum a_n f_n.
inline cplx apply_F(const RieszSystem& sys, const CoeffVector& x) {
    require_length(x, sys, "apply_F");
    cplx acc{0.0, 0.0};
    const auto& f = sys.f();
    for (std::size_t n = 0; n < x.size(); ++n) acc += x[n] * f[n];
    return acc;
}

/// Sampled closed-loop operator Delta(tau), with T(tau) and S(tau) cached.
class DeltaOperator {
public:
    DeltaOperator(RieszSystem sys, double tau) : sys_(std::move(sys)), tau_(tau) {
        if (!(tau_ > 0.0) || !std::isfinite(tau_)) throw std::invalid_argument("DeltaOperator: tau must be positive");
        const auto& lam = sys_.eigenvalues();
        transition_.resize(lam.size());
        for (std::size_t n = 0; n < lam.size(); ++n) transition_[n] = std::exp(tau_ * lam[n]);
        hold_ = apply_hold(sys_, tau_).coeffs();
    }

    const RieszSystem& system() const noexcept { return sys_; }
    double tau() const noexcept { return tau_; }

    /// e^{tau lambda_n}
    const std::vector<cplx>& transition() const noexcept { return transition_; }
    /// S(tau)1 in coefficients
    const std::vector<cplx>& hold() const noexcept { return hold_; }

private:
    RieszSystem sys_;
    double tau_;
    std::vector<cplx> transition_;
    std::vector<cplx> hold_;
};

inline CoeffVector apply_delta(const DeltaOperator& op, const CoeffVector& x) {
    require_length(x, op.system(), "apply_delta");
    const cplx u = apply_F(op.system(), x);
    const auto& d = op.transition();
    const auto& s = op.hold();
    CoeffVector out(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) out[n] = d[n] * x[n] + s[n] * u;
    return out;
}

inline CoeffVector apply_delta_power(const DeltaOperator& op, long long k, const CoeffVector& x) {
    if (k < 0) throw std::invalid_argument("apply_delta_power: k must be nonnegative");
    require_length(x, op.system(), "apply_delta_power");
    CoeffVector cur = x;
    for (long long i = 0; i < k; ++i) cur = apply_delta(op, cur);
    return cur;
}

namespace detail {

inline void check_separation(std::span<const cplx> diag, cplx z, bool has_cluster_at_one, double tol) {
    for (std::size_t n = 0; n < diag.size(); ++n) {
        const double dist = std::abs(z - diag[n]);
        if (!(dist > tol)) {
            std::ostringstream os;
            os << "resolvent: z = " << z << " is within " << dist << " of spectral point " << diag[n]
               << " (mode position " << n << ")";
            throw SpectrumTooClose(n, dist, os.str());
        }
    }
    if (has_cluster_at_one) {
        const double dist = std::abs(z - 1.0);
        if (!(dist > tol)) {
            std::ostringstream os;
            os << "resolvent: z = " << z << " is within " << dist << " of the tail cluster point 1";
            throw SpectrumTooClose(SpectrumTooClose::cluster_point, dist, os.str());
        }
    }
}

/// (zI - D - u v^T)^{-1} x for diagonal D, via Sherman-Morrison-Woodbury.
/// Separation from diag(D) must be checked by the caller.
inline std::vector<cplx> diag_rank_one_solve(std::span<const cplx> diag, std::span<const cplx> u,
                                             std::span<const cplx> v, cplx z, std::span<const cplx> x,
                                             double denom_tol) {
    const std::size_t n = diag.size();
    std::vector<cplx> rx(n);
    cplx v_rx{0.0, 0.0};
    cplx v_ru{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const cplx r = 1.0 / (z - diag[i]);
        rx[i] = r * x[i];
        v_rx += v[i] * rx[i];
        v_ru += v[i] * r * u[i];
    }
    const cplx denom = 1.0 - v_ru;
    if (!(std::abs(denom) > denom_tol)) {
        std::ostringstream os;
        os << "resolvent: SMW denominator " << denom << " at z = " << z << " (z is near the spectrum of Delta)";
        throw SmwSingular(denom, os.str());
    }
    const cplx scale = v_rx / denom;
    for (std::size_t i = 0; i < n; ++i) {
        if (u[i] != cplx{0.0, 0.0}) rx[i] += scale * u[i] / (z - diag[i]);
    }
    return rx;
}

} // namespace detail

/// R(z, T(tau)) x, entry n = a_n / (z - e^{tau lambda_n}).
inline CoeffVector resolvent_T(const RieszSystem& sys, double tau, cplx z, const CoeffVector& x,
                               const Tolerances& tol = {}) {
    if (!(tau > 0.0)) throw std::invalid_argument("resolvent_T: tau must be positive");
    require_length(x, sys, "resolvent_T");
    const auto& lam = sys.eigenvalues();
    std::vector<cplx> d(lam.size());
    for (std::size_t n = 0; n < lam.size(); ++n) d[n] = std::exp(tau * lam[n]);
    detail::check_separation(d, z, sys.spectrum().has_tail(), tol.separation);
    CoeffVector out(x.size());
    for (std::size_t n = 0; n < x.size(); ++n) out[n] = x[n] / (z - d[n]);
    return out;
}

/// R(z, Delta(tau)) x = R(z,T)x + R(z,T)S (1 - F R(z,T) S)^{-1} F R(z,T) x.
inline CoeffVector resolvent_delta(const DeltaOperator& op, cplx z, const CoeffVector& x,
                                   const Tolerances& tol = {}) {
    require_length(x, op.system(), "resolvent_delta");
    detail::check_separation(op.transition(), z, op.system().spectrum().has_tail(), tol.separation);
    return CoeffVector(
        detail::diag_rank_one_solve(op.transition(), op.hold(), op.system().f(), z, x.span(), tol.smw_denominator));
}

/// R(z, Delta(tau))^* y = R(conj z, Delta^*) y with Delta^* = diag(conj e^{tau lambda}) + conj(f) conj(s)^T.
inline CoeffVector resolvent_delta_adjoint(const DeltaOperator& op, cplx z, const CoeffVector& y,
                                           const Tolerances& tol = {}) {
    require_length(y, op.system(), "resolvent_delta_adjoint");
    const auto& d = op.transition();
    const auto& s = op.hold();
    const auto& f = op.system().f();
    const std::size_t n = d.size();
    std::vector<cplx> dc(n), u(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        dc[i] = std::conj(d[i]);
        u[i] = std::conj(f[i]);
        v[i] = std::conj(s[i]);
    }
    const cplx zc = std::conj(z);
    detail::check_separation(dc, zc, op.system().spectrum().has_tail(), tol.separation);
    return CoeffVector(detail::diag_rank_one_solve(dc, u, v, zc, y.span(), tol.smw_denominator));
}

} // namespace sdstab
