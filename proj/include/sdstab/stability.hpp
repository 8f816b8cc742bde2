#pragma once

// Discrete stability diagnostics for Delta(tau): unit-circle spectrum test,
// the resolvent-integral power-boundedness probe, decay experiments and
// intra-sample trajectories.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdstab/assumptions.hpp"
#include "sdstab/errors.hpp"
#include "sdstab/numeric.hpp"
#include "sdstab/spectral_core.hpp"
#include "sdstab/system.hpp"
#include "sdstab/transfer.hpp"

namespace sdstab {

struct UnitCircleVerdict {
    bool passed = false;
    double min_mode_to_circle = std::numeric_limits<double>::infinity();  ///< min_n ||e^{tau l_n}| - 1|
    double min_mode_distance = std::numeric_limits<double>::infinity();   ///< min over grid z, n of |z - e^{tau l_n}|
    double min_abs_one_minus_transfer = std::numeric_limits<double>::infinity();
    double truncation_slack = 0.0;
    double one_margin = 0.0;  ///< |1 + F A^{-1} B|
    std::size_t grid_points = 0;
    std::string reason;
};

/// sigma(Delta(tau)) cap T = {1} on the grid: every grid z on the unit circle
/// outside the exclusion arc is in rho(T(tau)) with 1 - F R(z,T) S != 0 net of
/// the tail slack, and 1 is not an eigenvalue (|1 + F A^{-1} B| > margin).
inline UnitCircleVerdict unit_circle_test(const RieszSystem& sys, double tau, const ScanGrid& grid,
                                          const TailCertificate& cert, double a6_margin = 1e-6,
                                          const Tolerances& tol = {}) {
    grid.validate();
    if (!(tau > 0.0) || !(tau < 1.0)) throw std::invalid_argument("unit_circle_test: tau must lie in (0, 1)");
    UnitCircleVerdict v;
    const auto& lam = sys.eigenvalues();
    std::vector<cplx> d(lam.size());
    for (std::size_t n = 0; n < lam.size(); ++n) {
        d[n] = std::exp(tau * lam[n]);
        v.min_mode_to_circle = std::min(v.min_mode_to_circle, std::abs(std::abs(d[n]) - 1.0));
    }
    v.truncation_slack = tail_bound_discrete(sys, cert, sys.truncation(), tau) * sys.f_norm_bound();
    v.one_margin = std::abs(1.0 + feedback_times_inverse_generator(sys));

    bool ok = true;
    if (!(v.min_mode_to_circle > tol.separation)) {
        ok = false;
        v.reason = "an eigenvalue of T(tau) lies on the unit circle";
    }
    const double arc = grid.exclusion_arc;
    for (double th : numeric::linspace(arc, 2 * pi - arc, grid.n_theta)) {
        const cplx z = std::polar(1.0, th);
        ++v.grid_points;
        double dist = std::numeric_limits<double>::infinity();
        for (const auto& dn : d) dist = std::min(dist, std::abs(z - dn));
        v.min_mode_distance = std::min(v.min_mode_distance, dist);
        if (!(dist > tol.separation)) {
            if (ok) v.reason = "grid point within separation tolerance of sigma(T(tau))";
            ok = false;
            continue;
        }
        const double m = std::abs(1.0 - transfer_discrete(sys, tau, z, tol));
        v.min_abs_one_minus_transfer = std::min(v.min_abs_one_minus_transfer, m);
    }
    if (!(v.min_abs_one_minus_transfer - v.truncation_slack > 0.0)) {
        if (ok) v.reason = "1 - F R(z,T) S vanishes on the circle";
        ok = false;
    }
    if (!(v.one_margin > a6_margin)) {
        if (ok) v.reason = "1 + F A^{-1} B = 0: 1 is an eigenvalue of Delta(tau)";
        ok = false;
    }
    v.passed = ok;
    return v;
}

struct PowerBoundProbe {
    std::vector<double> r_values{1.1, 1.01, 1.001};
    std::size_t n_theta = 256;
    /// Quadrature nodes per circle are max(n_theta, points_per_width / (r - 1)),
    /// which resolves poles of the integrand at distance ~ r - 1 from the circle.
    double points_per_width = 24.0;

    bool operator==(const PowerBoundProbe&) const = default;

    void validate() const {
        if (r_values.empty()) throw std::invalid_argument("PowerBoundProbe: no radii");
        for (std::size_t i = 0; i < r_values.size(); ++i) {
            if (!(r_values[i] > 1.0)) throw std::invalid_argument("PowerBoundProbe: radii must exceed 1");
            if (i > 0 && !(r_values[i] < r_values[i - 1]))
                throw std::invalid_argument("PowerBoundProbe: radii must be strictly descending");
        }
        if (n_theta < 256) throw std::invalid_argument("PowerBoundProbe: n_theta must be >= 256");
        if (!(points_per_width > 0.0)) throw std::invalid_argument("PowerBoundProbe: points_per_width must be positive");
    }

    std::size_t nodes_for(double r) const {
        const double want = std::ceil(points_per_width / (r - 1.0));
        return std::max<std::size_t>(n_theta, static_cast<std::size_t>(want));
    }
};

struct PowerBoundValue {
    double r = 0.0;
    double value = std::numeric_limits<double>::quiet_NaN();  ///< (r-1) int_0^{2pi} ||R(r e^{i theta}) x||^2 d theta
    std::size_t nodes = 0;
    bool ok = false;
    std::string error;
};

/// (r - 1) times the periodic trapezoid rule for int_0^{2 pi} ||R(r e^{i theta}, Delta) x||^2,
/// or with R^* when `adjoint` is set.
inline std::vector<PowerBoundValue> power_bound_integral(const DeltaOperator& op, const PowerBoundProbe& probe,
                                                         const CoeffVector& x, bool adjoint,
                                                         const Tolerances& tol = {}) {
    probe.validate();
    require_length(x, op.system(), "power_bound_integral");
    std::vector<PowerBoundValue> out;
    out.reserve(probe.r_values.size());
    for (double r : probe.r_values) {
        PowerBoundValue pv;
        pv.r = r;
        pv.nodes = probe.nodes_for(r);
        const double h = 2 * pi / static_cast<double>(pv.nodes);
        double sum = 0.0;
        try {
            for (std::size_t j = 0; j < pv.nodes; ++j) {
                const cplx z = std::polar(r, h * static_cast<double>(j));
                const auto y = adjoint ? resolvent_delta_adjoint(op, z, x, tol) : resolvent_delta(op, z, x, tol);
                sum += y.norm_sq();
            }
            pv.value = (r - 1.0) * h * sum;
            pv.ok = std::isfinite(pv.value);
        } catch (const SpectrumTooClose& e) {
            pv.error = e.what();
        } catch (const SmwSingular& e) {
            pv.error = e.what();
        }
        out.push_back(pv);
    }
    return out;
}

/// max_r value(r) / value(r_max); infinity if any radius failed.
inline double power_bound_growth(const std::vector<PowerBoundValue>& values) {
    if (values.empty()) return std::numeric_limits<double>::infinity();
    double top = 0.0;
    for (const auto& v : values) {
        if (!v.ok) return std::numeric_limits<double>::infinity();
        top = std::max(top, v.value);
    }
    const double base = values.front().value;
    if (!(base > 0.0)) return top > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
    return top / base;
}

struct DecayRecord {
    std::vector<double> norms;
    double sup_ratio = 0.0;
    std::optional<long long> k_hit;

    /// Reached the threshold, or norms[k_max] < norms[k_max/2].
    bool decays() const {
        if (k_hit) return true;
        if (norms.size() < 3) return false;
        const std::size_t k_max = norms.size() - 1;
        return norms[k_max] < norms[k_max / 2];
    }
};

/// Iterates Delta(tau) and records ||Delta^k x0|| in the orthonormal realization.
inline DecayRecord decay_test(const DeltaOperator& op, const CoeffVector& x0, long long k_max, double threshold) {
    if (k_max < 1) throw std::invalid_argument("decay_test: k_max must be >= 1");
    if (!(threshold > 0.0) || !(threshold < 1.0)) throw std::invalid_argument("decay_test: threshold must lie in (0, 1)");
    require_length(x0, op.system(), "decay_test");
    DecayRecord rec;
    rec.norms.reserve(static_cast<std::size_t>(k_max) + 1);
    CoeffVector x = x0;
    const double n0 = x0.norm();
    rec.norms.push_back(n0);
    double sup = n0;
    for (long long k = 1; k <= k_max; ++k) {
        x = apply_delta(op, x);
        const double nk = x.norm();
        rec.norms.push_back(nk);
        sup = std::max(sup, nk);
        if (!rec.k_hit && nk < threshold * n0) rec.k_hit = k;
    }
    rec.sup_ratio = n0 > 0.0 ? sup / n0 : 0.0;
    return rec;
}

struct TrajectoryPoint {
    double t;
    double norm;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    std::vector<CoeffVector> sample_states;  ///< x(k tau), k = 0..k_max
};

/// Zero-order-hold evolution between samples: x(k tau + t) = Delta(t) x(k tau),
/// evaluated at t = j tau / m, j = 0..m-1, plus the final sample instant.
inline Trajectory sampled_trajectory(const DeltaOperator& op, const CoeffVector& x0, std::size_t samples_per_period,
                                     std::size_t k_max) {
    if (samples_per_period < 1) throw std::invalid_argument("sampled_trajectory: need at least one sample per period");
    require_length(x0, op.system(), "sampled_trajectory");
    const std::size_t m = samples_per_period;
    const double tau = op.tau();
    std::vector<DeltaOperator> partial;
    partial.reserve(m);
    for (std::size_t j = 1; j < m; ++j)
        partial.emplace_back(op.system(), tau * (static_cast<double>(j) / static_cast<double>(m)));

    Trajectory tr;
    tr.points.reserve(k_max * m + 1);
    tr.sample_states.reserve(k_max + 1);
    CoeffVector x = x0;
    tr.sample_states.push_back(x);
    for (std::size_t k = 0; k < k_max; ++k) {
        const double t0 = tau * static_cast<double>(k);
        tr.points.push_back({t0, x.norm()});
        for (std::size_t j = 1; j < m; ++j) {
            const auto& pj = partial[j - 1];
            tr.points.push_back({t0 + pj.tau(), apply_delta(pj, x).norm()});
        }
        x = apply_delta(op, x);
        tr.sample_states.push_back(x);
    }
    tr.points.push_back({tau * static_cast<double>(k_max), x.norm()});
    return tr;
}

/// State at k tau + j tau/m for j in [0, m], given x(k tau); j = m reproduces apply_delta.
inline CoeffVector intra_sample_state(const DeltaOperator& op, const CoeffVector& xk, std::size_t j, std::size_t m) {
    if (m < 1 || j > m) throw std::invalid_argument("intra_sample_state: need 0 <= j <= m, m >= 1");
    if (j == 0) return xk;
    if (j == m) return apply_delta(op, xk);
    return apply_delta(DeltaOperator(op.system(), op.tau() * (static_cast<double>(j) / static_cast<double>(m))), xk);
}

} // namespace sdstab
