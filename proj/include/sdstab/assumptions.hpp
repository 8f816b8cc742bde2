#pragma once

// Verdicts for the standing assumptions (A1)-(A6) and the explicit constants
// that bound the dropped series tails uniformly in lambda, z and tau.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdstab/errors.hpp"
#include "sdstab/numeric.hpp"
#include "sdstab/system.hpp"

namespace sdstab {

/// Lambda in C_{-alpha} intersected with the sector |arg| < pi/2 + delta.
inline bool in_sector(cplx lambda, double alpha, double delta) {
    if (lambda == cplx{0.0, 0.0}) throw std::invalid_argument("in_sector: argument of 0 is undefined");
    return lambda.real() > -alpha && std::abs(std::arg(lambda)) < pi / 2 + delta;
}

enum class A3Status { certified, uncertifiable };

inline const char* to_string(A3Status s) { return s == A3Status::certified ? "certified" : "uncertifiable"; }

struct AssumptionReport {
    std::size_t a1_count = 0;
    bool a1_certified = false;
    bool a2_ok = false;
    A3Status a3 = A3Status::uncertifiable;
    bool a3_ok = false;
    std::optional<std::size_t> a2_offender;
    double a2_min_abs_real = 0.0;

    bool a4_ok = false;
    double a4_sup_estimate = std::numeric_limits<double>::quiet_NaN();

    bool a5_ok = false;
    double a5_value = 0.0;

    bool a6_ok = false;
    cplx a6_value{0.0, 0.0};
    double a6_margin_value = 0.0;  ///< |a6_value + 1|

    std::vector<std::string> notes;
};

/// (A1), (A2), (A3) from the materialized head and the analytic tail law.
///
/// A reciprocal tail lies on the negative real axis (arg = pi), hence outside
/// every sector with delta <= pi/2, off iR, and clusters at 0.
inline AssumptionReport check_A1_A2_A3(const RieszSystem& sys, double imag_axis_tol = 1e-12) {
    AssumptionReport rep;
    const auto& spec = sys.spectrum();
    for (const auto& l : spec.head())
        if (in_sector(l, sys.alpha(), sys.delta())) ++rep.a1_count;
    rep.a1_certified = true;
    if (!spec.has_tail()) rep.notes.push_back("A1: spectrum is the explicit finite list");

    rep.a2_ok = true;
    rep.a2_min_abs_real = std::numeric_limits<double>::infinity();
    const auto& lam = spec.eigenvalues();
    for (std::size_t n = 0; n < lam.size(); ++n) {
        const double re = std::abs(lam[n].real());
        if (re < rep.a2_min_abs_real) rep.a2_min_abs_real = re;
        if (re <= imag_axis_tol * std::max(1.0, std::abs(lam[n])) && rep.a2_ok) {
            rep.a2_ok = false;
            rep.a2_offender = n;
        }
    }

    if (spec.has_tail()) {
        rep.a3 = A3Status::certified;
        rep.a3_ok = true;
    } else {
        rep.a3 = A3Status::uncertifiable;
        rep.a3_ok = false;
        rep.notes.push_back("A3: no tail law, a finite list cannot witness 0 as a cluster point");
    }
    return rep;
}

struct A5Result {
    double value;
    bool ok;
};

/// sum_{n < support_b} |b_n / lambda_n|^2; exact under finite support.
inline A5Result check_A5(const RieszSystem& sys) {
    double s = 0.0;
    for (std::size_t n = 0; n < sys.support_b(); ++n) s += std::norm(sys.b()[n] / sys.eigenvalues()[n]);
    return {s, true};
}

struct A6Result {
    cplx value;  ///< F A^{-1} B
    bool ok;
};

inline cplx feedback_times_inverse_generator(const RieszSystem& sys) {
    cplx s{0.0, 0.0};
    for (std::size_t n = 0; n < sys.support_b(); ++n) s += sys.b()[n] * sys.f()[n] / sys.eigenvalues()[n];
    return s;
}

inline A6Result check_A6(const RieszSystem& sys, double margin = 1e-6) {
    const cplx v = feedback_times_inverse_generator(sys);
    return {v, std::abs(v + 1.0) > margin};
}

/// Constants from the tail estimates, plus the tail bounds at the truncation.
struct TailCertificate {
    double gamma1 = 0.0;    ///< 2/alpha
    double gamma2 = 0.0;    ///< 1/sin(delta)
    double m1 = 0.0;        ///< bound on |(1-e^l)/l| over -1 <= Re l <= 0, |Im l| <= pi
    double upsilon1 = 0.0;  ///< max(e m1/alpha, 2/((1-1/e) alpha))
    double upsilon2 = 0.0;  ///< max(e m1 (1 + 1/tan delta), 2/(1-1/e))
    std::size_t tail_start = 0;  ///< first position from which no eigenvalue lies in the sector
    double cont_tail_bound = 0.0;
    double disc_tail_bound = 0.0;
    // sums over positions >= truncation used by the two bounds above
    double tail_b_sq = 0.0;
    double tail_b_over_lambda_sq = 0.0;
    int m1_grid = 0;
    double m1_grid_max = 0.0;
};

inline constexpr double m1_safety_factor = 1.05;

/// Maximum of |(1-e^l)/l| on the boundary of [-1,0] x [-pi,pi], sampled at
/// `grid` points per edge. |g| <= 1 on Re l <= 0 with equality at 0.
inline double m1_boundary_max(int grid) {
    auto g = [](cplx l) { return std::abs(numeric::phi1(l)); };  // |(1-e^l)/l| == |(e^l-1)/l|
    double best = g(cplx{0.0, 0.0});
    const auto ims = numeric::linspace(-pi, pi, static_cast<std::size_t>(grid));
    const auto res = numeric::linspace(-1.0, 0.0, static_cast<std::size_t>(grid));
    for (double y : ims) {
        best = std::max(best, g({-1.0, y}));
        best = std::max(best, g({0.0, y}));
    }
    for (double x : res) {
        best = std::max(best, g({x, pi}));
        best = std::max(best, g({x, -pi}));
    }
    return best;
}

inline TailCertificate tail_constants(double alpha, double delta, int m1_grid = 256) {
    if (!(alpha > 0.0)) throw std::invalid_argument("tail_constants: alpha must be positive");
    if (!(delta > 0.0) || delta > pi / 2 + 1e-15) throw std::invalid_argument("tail_constants: delta must lie in (0, pi/2]");
    if (m1_grid < 64) throw std::invalid_argument("tail_constants: m1_grid must be >= 64");
    TailCertificate c;
    const double e = std::exp(1.0);
    const double one_m_inv_e = 1.0 - std::exp(-1.0);
    c.gamma1 = 2.0 / alpha;
    c.gamma2 = 1.0 / std::sin(delta);
    c.m1_grid = m1_grid;
    c.m1_grid_max = m1_boundary_max(m1_grid);
    c.m1 = m1_safety_factor * c.m1_grid_max;
    c.upsilon1 = std::max(e * c.m1 / alpha, 2.0 / (one_m_inv_e * alpha));
    const double cot = (delta >= pi / 2) ? 0.0 : 1.0 / std::tan(delta);
    c.upsilon2 = std::max(e * c.m1 * (1.0 + cot), 2.0 / one_m_inv_e);
    return c;
}

/// First position N_1 such that no materialized eigenvalue at position >= N_1
/// lies in C_{-alpha} cap Sigma_{pi/2+delta}.
inline std::size_t sector_tail_start(const RieszSystem& sys) {
    const auto& lam = sys.eigenvalues();
    std::size_t start = 0;
    for (std::size_t n = 0; n < lam.size(); ++n)
        if (in_sector(lam[n], sys.alpha(), sys.delta())) start = n + 1;
    return start;
}

namespace detail {

struct TailSums {
    double b_sq = 0.0;
    double b_over_lambda_sq = 0.0;
};

inline TailSums tail_sums(const RieszSystem& sys, std::size_t first_dropped) {
    TailSums s;
    for (std::size_t n = first_dropped; n < sys.support_b(); ++n) {
        s.b_sq += std::norm(sys.b()[n]);
        s.b_over_lambda_sq += std::norm(sys.b()[n] / sys.eigenvalues()[n]);
    }
    return s;
}

inline void check_dropped_range(const RieszSystem& sys, const TailCertificate& cert, std::size_t first_dropped,
                                const char* who) {
    if (first_dropped > sys.truncation())
        throw std::invalid_argument(std::string(who) + ": first dropped position exceeds truncation");
    if (first_dropped < cert.tail_start)
        throw std::invalid_argument(std::string(who) + ": dropped modes must lie outside the sector (N >= tail_start)");
}

} // namespace detail

/// sqrt(M_b (G1^2 sum_{n>=N}|b_n|^2 + G2^2 sum_{n>=N}|b_n/lambda_n|^2)), bounding
/// ||sum_{n>=N} b_n/(lambda - lambda_n) phi_n|| on the closed right half-plane minus 0.
inline double tail_bound_continuous(const RieszSystem& sys, const TailCertificate& cert, std::size_t first_dropped) {
    detail::check_dropped_range(sys, cert, first_dropped, "tail_bound_continuous");
    const auto s = detail::tail_sums(sys, first_dropped);
    return std::sqrt(sys.riesz_Mb() *
                     (cert.gamma1 * cert.gamma1 * s.b_sq + cert.gamma2 * cert.gamma2 * s.b_over_lambda_sq));
}

/// Same structure with Upsilon_1, Upsilon_2; uniform in z in the closed exterior
/// of the unit disk minus 1, and in tau in (0, 1).
inline double tail_bound_discrete(const RieszSystem& sys, const TailCertificate& cert, std::size_t first_dropped,
                                  double tau) {
    if (!(tau > 0.0) || !(tau < 1.0)) throw std::invalid_argument("tail_bound_discrete: tau must lie in (0, 1)");
    detail::check_dropped_range(sys, cert, first_dropped, "tail_bound_discrete");
    const auto s = detail::tail_sums(sys, first_dropped);
    return std::sqrt(sys.riesz_Mb() * (cert.upsilon1 * cert.upsilon1 * s.b_sq +
                                       cert.upsilon2 * cert.upsilon2 * s.b_over_lambda_sq));
}

/// Constants plus the bounds for everything beyond the materialized modes.
inline TailCertificate make_tail_certificate(const RieszSystem& sys, int m1_grid = 256) {
    auto c = tail_constants(sys.alpha(), sys.delta(), m1_grid);
    c.tail_start = sector_tail_start(sys);
    const std::size_t n = sys.truncation();
    const auto s = detail::tail_sums(sys, n);
    c.tail_b_sq = s.b_sq;
    c.tail_b_over_lambda_sq = s.b_over_lambda_sq;
    if (n >= c.tail_start) {
        c.cont_tail_bound = tail_bound_continuous(sys, c, n);
        c.disc_tail_bound = std::sqrt(sys.riesz_Mb() * (c.upsilon1 * c.upsilon1 * s.b_sq +
                                                        c.upsilon2 * c.upsilon2 * s.b_over_lambda_sq));
    }
    return c;
}

struct A4Result {
    double sup_estimate = 0.0;            ///< sup over grid |omega| > 1 of ||R(i omega, A+BF)||
    double low_frequency_weighted = 0.0;  ///< sup over grid 0 < |omega| <= 1 of |omega| ||R(i omega, A+BF)||
    bool ok = false;
    std::vector<double> omega;
    std::vector<double> resolvent_norm;
    std::vector<cplx> closed_loop_coupled_eigs;
};

/// Resolvent norm of A + BF on iR for diagonal-plus-rank-one systems.
///
/// Modes outside supp(b) cup supp(f) decouple and contribute 1/|i omega - lambda_n|;
/// the coupled block is dense and small. For a reciprocal tail the modes past
/// the truncation contribute sup_n 1/|i omega + c/n| = 1/|omega|.
inline A4Result check_A4_example(const RieszSystem& sys, const std::vector<double>& omega_grid) {
    const auto& lam = sys.eigenvalues();
    const auto& b = sys.b();
    const auto& f = sys.f();
    const std::size_t n = lam.size();
    // A mode with b_n = f_n = 0 has an empty row and column in b f^T.
    std::vector<std::size_t> coupled;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
        const bool touches = (b[i] != cplx{0.0, 0.0}) || (f[i] != cplx{0.0, 0.0});
        (touches ? coupled : rest).push_back(i);
    }

    const auto m = static_cast<Eigen::Index>(coupled.size());
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        block(r, r) = lam[coupled[r]];
        for (Eigen::Index c = 0; c < m; ++c) block(r, c) += b[coupled[r]] * f[coupled[c]];
    }

    A4Result res;
    if (m > 0) {
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(block, false);
        for (Eigen::Index i = 0; i < m; ++i) res.closed_loop_coupled_eigs.push_back(es.eigenvalues()(i));
    }
    for (const auto& e : res.closed_loop_coupled_eigs) {
        if (!(e.real() < 0.0)) throw HeadNotStabilized("check_A4_example: closed-loop coupled block is not Hurwitz");
    }
    for (std::size_t i : rest) {
        if (!(lam[i].real() < 0.0))
            throw HeadNotStabilized("check_A4_example: an unstable mode is not reached by the feedback");
    }

    res.ok = true;
    for (double w : omega_grid) {
        if (w == 0.0) continue;
        const cplx iw{0.0, w};
        double norm = 0.0;
        if (m > 0) {
            Eigen::MatrixXcd shifted = -block;
            shifted.diagonal().array() += iw;
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
            const double smin = svd.singularValues()(m - 1);
            norm = smin > 0.0 ? 1.0 / smin : std::numeric_limits<double>::infinity();
        }
        for (std::size_t i : rest) norm = std::max(norm, 1.0 / std::abs(iw - lam[i]));
        if (sys.spectrum().has_tail()) norm = std::max(norm, 1.0 / std::abs(w));
        res.omega.push_back(w);
        res.resolvent_norm.push_back(norm);
        if (!std::isfinite(norm)) res.ok = false;
        if (std::abs(w) > 1.0)
            res.sup_estimate = std::max(res.sup_estimate, norm);
        else
            res.low_frequency_weighted = std::max(res.low_frequency_weighted, std::abs(w) * norm);
    }
    return res;
}

/// Default frequency grid for the (A4) check: log-spaced |omega| in [1e-3, 1e3], both signs.
inline std::vector<double> default_a4_grid(std::size_t per_side = 256) {
    auto pos = numeric::logspace(1e-3, 1e3, per_side);
    std::vector<double> out;
    out.reserve(2 * per_side);
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
    out.insert(out.end(), pos.begin(), pos.end());
    return out;
}

} // namespace sdstab
