#pragma once

// Continuous and sampled transfer functions G(lambda) = F(lambda - A)^{-1}B and
// F(z - T(tau))^{-1}S(tau), their uniform lower bounds, and the search for an
// admissible sampling period.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdstab/assumptions.hpp"
#include "sdstab/errors.hpp"
#include "sdstab/numeric.hpp"
#include "sdstab/spectral_core.hpp"
#include "sdstab/system.hpp"

namespace sdstab {

struct ScanGrid {
    double omega_max = 1e3;
    std::size_t n_omega = 4096;
    double eta = 0.5;
    std::size_t n_theta = 2048;
    double exclusion_arc = 0.05;

    bool operator==(const ScanGrid&) const = default;

    void validate() const {
        if (!(omega_max >= 1.0)) throw std::invalid_argument("ScanGrid: omega_max must be >= 1");
        if (n_omega < 4) throw std::invalid_argument("ScanGrid: n_omega too small");
        if (n_theta < 8) throw std::invalid_argument("ScanGrid: n_theta too small");
        if (!(eta > 0.0)) throw std::invalid_argument("ScanGrid: eta must be positive");
        if (!(exclusion_arc > 0.0) || exclusion_arc > pi / 8)
            throw std::invalid_argument("ScanGrid: exclusion_arc must lie in (0, pi/8]");
    }

    /// Defaults with eta = half the smallest |lambda| among head eigenvalues (capped at 0.5).
    static ScanGrid defaults_for(const RieszSystem& sys) {
        ScanGrid g;
        double smallest = 1.0;
        for (const auto& l : sys.spectrum().head()) smallest = std::min(smallest, std::abs(l));
        g.eta = 0.5 * smallest;
        return g;
    }
};

enum class SampleKind { imaginary_axis, semicircle, origin_limit, large_modulus_floor, unit_circle, arc_approach, ring, one_limit };

inline const char* to_string(SampleKind k) {
    switch (k) {
    case SampleKind::imaginary_axis: return "imaginary_axis";
    case SampleKind::semicircle: return "semicircle";
    case SampleKind::origin_limit: return "origin_limit";
    case SampleKind::large_modulus_floor: return "large_modulus_floor";
    case SampleKind::unit_circle: return "unit_circle";
    case SampleKind::arc_approach: return "arc_approach";
    case SampleKind::ring: return "ring";
    case SampleKind::one_limit: return "one_limit";
    }
    return "?";
}

struct ScanSample {
    SampleKind kind;
    double param;  ///< omega, theta, or radius depending on kind
    cplx point;
    double value;  ///< |1 - transfer|
};

struct LowerBoundResult {
    double epsilon = 0.0;  ///< net of truncation_slack
    cplx argmin_point{0.0, 0.0};
    SampleKind argmin_kind = SampleKind::imaginary_axis;
    double raw_min = 0.0;
    double truncation_slack = 0.0;
    double limit_margin = 0.0;  ///< |1 + F A^{-1} B|
    std::size_t evaluations = 0;
    std::vector<ScanSample> samples;
};

class NegativeMargin : public std::runtime_error {
public:
    NegativeMargin(LowerBoundResult result, const std::string& what)
        : std::runtime_error(what), result_(std::move(result)) {}
    const LowerBoundResult& result() const noexcept { return result_; }

private:
    LowerBoundResult result_;
};

/// G(lambda) = sum b_n f_n / (lambda - lambda_n) over modes with b_n f_n != 0.
inline cplx transfer_continuous(const RieszSystem& sys, cplx lambda, const Tolerances& tol = {}) {
    const auto& lam = sys.eigenvalues();
    cplx acc{0.0, 0.0};
    for (std::size_t n = 0; n < sys.support_b(); ++n) {
        const cplx w = sys.b()[n] * sys.f()[n];
        if (w == cplx{0.0, 0.0}) continue;
        const cplx d = lambda - lam[n];
        if (!(std::abs(d) > tol.separation)) {
            std::ostringstream os;
            os << "transfer_continuous: lambda = " << lambda << " within " << std::abs(d) << " of eigenvalue " << lam[n];
            throw SpectrumTooClose(n, std::abs(d), os.str());
        }
        acc += w / d;
    }
    return acc;
}

/// F(zI - T(tau))^{-1} S(tau) = sum (e^{tau l_n} - 1)/(z - e^{tau l_n}) b_n f_n / l_n.
inline cplx transfer_discrete(const RieszSystem& sys, double tau, cplx z, const Tolerances& tol = {}) {
    if (!(tau > 0.0)) throw std::invalid_argument("transfer_discrete: tau must be positive");
    const auto& lam = sys.eigenvalues();
    if (sys.spectrum().has_tail() && !(std::abs(z - 1.0) > tol.separation))
        throw SpectrumTooClose(SpectrumTooClose::cluster_point, std::abs(z - 1.0),
                               "transfer_discrete: z is at the tail cluster point 1");
    cplx acc{0.0, 0.0};
    for (std::size_t n = 0; n < sys.support_b(); ++n) {
        const cplx w = sys.b()[n] * sys.f()[n];
        if (w == cplx{0.0, 0.0}) continue;
        const cplx tl = tau * lam[n];
        const cplx d = z - std::exp(tl);
        if (!(std::abs(d) > tol.separation)) {
            std::ostringstream os;
            os << "transfer_discrete: z = " << z << " within " << std::abs(d) << " of e^{tau lambda_" << n << "}";
            throw SpectrumTooClose(n, std::abs(d), os.str());
        }
        // (e^{tl} - 1)/l = tau * phi1(tl)
        acc += tau * numeric::phi1(tl) * w / d;
    }
    return acc;
}

namespace detail {

/// Certified lower bound of |1 - G| on {Re lambda >= 0, |lambda| >= R}.
inline double large_modulus_floor(const RieszSystem& sys, double radius) {
    double s = 0.0;
    for (std::size_t n = 0; n < sys.support_b(); ++n) {
        const double w = std::abs(sys.b()[n] * sys.f()[n]);
        if (w == 0.0) continue;
        const double gap = radius - std::abs(sys.eigenvalues()[n]);
        if (!(gap > 0.0)) return -std::numeric_limits<double>::infinity();
        s += w / gap;
    }
    return 1.0 - s;
}

inline std::vector<double> omega_samples(const RieszSystem& sys, const ScanGrid& grid) {
    const std::size_t n_log = grid.n_omega / 2;
    const std::size_t n_lin = grid.n_omega - n_log;
    std::vector<double> pos = numeric::logspace(1e-3, grid.omega_max, n_log);
    const auto lin = numeric::linspace(0.0, grid.omega_max, n_lin + 1);
    pos.insert(pos.end(), lin.begin() + 1, lin.end());
    for (const auto& l : sys.spectrum().head()) {
        const double w = std::abs(l.imag());
        if (w > 0.0 && w <= grid.omega_max) pos.push_back(w);
    }
    std::vector<double> out;
    out.reserve(2 * pos.size());
    for (double w : pos) {
        out.push_back(w);
        out.push_back(-w);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

inline void record(LowerBoundResult& r, SampleKind kind, double param, cplx point, double value, bool keep) {
    ++r.evaluations;
    if (value < r.raw_min) {
        r.raw_min = value;
        r.argmin_point = point;
        r.argmin_kind = kind;
    }
    if (keep) r.samples.push_back({kind, param, point, value});
}

} // namespace detail

/// epsilon_c: min of |1 - G| over i[-omega_max, omega_max], the right half of the
/// circle |lambda| = eta, the lambda -> 0 limit |1 + F A^{-1} B|, and the
/// certified large-|lambda| floor; net of cont_tail_bound * ||f||.
inline LowerBoundResult scan_epsilon_c(const RieszSystem& sys, const ScanGrid& grid, const TailCertificate& cert,
                                       bool keep_samples = true, const Tolerances& tol = {}) {
    grid.validate();
    LowerBoundResult r;
    r.raw_min = std::numeric_limits<double>::infinity();

    for (double w : detail::omega_samples(sys, grid)) {
        const cplx l{0.0, w};
        detail::record(r, SampleKind::imaginary_axis, w, l, std::abs(1.0 - transfer_continuous(sys, l, tol)), keep_samples);
    }
    for (double th : numeric::linspace(-pi / 2, pi / 2, grid.n_theta)) {
        const cplx l = std::polar(grid.eta, th);
        detail::record(r, SampleKind::semicircle, th, l, std::abs(1.0 - transfer_continuous(sys, l, tol)), keep_samples);
    }
    r.limit_margin = std::abs(1.0 + feedback_times_inverse_generator(sys));
    detail::record(r, SampleKind::origin_limit, 0.0, cplx{0.0, 0.0}, r.limit_margin, keep_samples);
    const double floor = detail::large_modulus_floor(sys, grid.omega_max);
    detail::record(r, SampleKind::large_modulus_floor, grid.omega_max, cplx{grid.omega_max, 0.0}, floor, keep_samples);

    r.truncation_slack = cert.cont_tail_bound * sys.f_norm_bound();
    r.epsilon = r.raw_min - r.truncation_slack;
    if (!(r.epsilon > 0.0)) {
        std::ostringstream os;
        os << "scan_epsilon_c: net lower bound " << r.epsilon << " <= 0 near lambda = " << r.argmin_point << " ("
           << to_string(r.argmin_kind) << ")";
        throw NegativeMargin(r, os.str());
    }
    return r;
}

/// epsilon_d(tau): min of |1 - F R(z,T(tau)) S(tau)| over the unit circle outside
/// the exclusion arc around 1, a geometric approach into the arc, rings
/// r in {1.01, 1.1, 2}, and the z -> 1 limit |1 + F A^{-1} B|; net of
/// disc_tail_bound * ||f||.
inline LowerBoundResult scan_epsilon_d(const RieszSystem& sys, double tau, const ScanGrid& grid,
                                       const TailCertificate& cert, bool keep_samples = true,
                                       const Tolerances& tol = {}) {
    grid.validate();
    if (!(tau > 0.0) || !(tau < 1.0)) throw std::invalid_argument("scan_epsilon_d: tau must lie in (0, 1)");
    LowerBoundResult r;
    r.raw_min = std::numeric_limits<double>::infinity();

    auto eval = [&](SampleKind kind, double param, cplx z) {
        try {
            detail::record(r, kind, param, z, std::abs(1.0 - transfer_discrete(sys, tau, z, tol)), keep_samples);
        } catch (const SpectrumTooClose&) {
            // pole of the transfer function: |1 - F R S| is unbounded there
        }
    };

    const double arc = grid.exclusion_arc;
    for (double th : numeric::linspace(arc, 2 * pi - arc, grid.n_theta)) {
        const double t = th > pi ? th - 2 * pi : th;
        eval(SampleKind::unit_circle, t, std::polar(1.0, t));
    }
    for (int k = 1; k <= 30; ++k) {
        const double t = arc * std::ldexp(1.0, -k);
        eval(SampleKind::arc_approach, t, std::polar(1.0, t));
        eval(SampleKind::arc_approach, -t, std::polar(1.0, -t));
    }
    const std::size_t ring_pts = std::max<std::size_t>(grid.n_theta / 4, 8);
    for (double radius : {1.01, 1.1, 2.0}) {
        for (double th : numeric::linspace(-pi, pi, ring_pts + 1)) {
            if (th == pi) continue;
            eval(SampleKind::ring, radius, std::polar(radius, th));
        }
    }
    r.limit_margin = std::abs(1.0 + feedback_times_inverse_generator(sys));
    detail::record(r, SampleKind::one_limit, 0.0, cplx{1.0, 0.0}, r.limit_margin, keep_samples);

    r.truncation_slack = tail_bound_discrete(sys, cert, std::max(sys.truncation(), cert.tail_start), tau) *
                         sys.f_norm_bound();
    r.epsilon = r.raw_min - r.truncation_slack;
    if (!(r.epsilon > 0.0)) {
        std::ostringstream os;
        os << "scan_epsilon_d: net lower bound " << r.epsilon << " <= 0 near z = " << r.argmin_point << " ("
           << to_string(r.argmin_kind) << "), tau = " << tau;
        throw NegativeMargin(r, os.str());
    }
    return r;
}

/// tau (lambda_n - lambda_m) != 2 l pi i (l != 0) for unstable head pairs.
inline bool check_sampling_nonpathological(const RieszSystem& sys, double tau, double tol = 1e-9) {
    const auto& head = sys.spectrum().head();
    for (std::size_t i = 0; i < head.size(); ++i) {
        if (!(head[i].real() > 0.0)) continue;
        for (std::size_t j = i + 1; j < head.size(); ++j) {
            if (!(head[j].real() > 0.0)) continue;
            const cplx d = tau * (head[i] - head[j]);
            if (std::abs(d.real()) > tol) continue;
            if (numeric::distance_to_nonzero_multiple(d.imag(), 2 * pi) <= tol) return false;
        }
    }
    return true;
}

struct TauRow {
    double tau = 0.0;
    std::optional<double> epsilon_d;
    bool nonpathological = false;
    bool admissible = false;
    std::string reason;
};

struct TauStarResult {
    double tau_star = 0.0;
    double epsilon_c = 0.0;
    double target_ratio = 0.0;
    std::vector<TauRow> table;
};

class NoAdmissibleTau : public std::runtime_error {
public:
    NoAdmissibleTau(TauStarResult result, const std::string& what)
        : std::runtime_error(what), result_(std::move(result)) {}
    const TauStarResult& result() const noexcept { return result_; }

private:
    TauStarResult result_;
};

/// Largest grid tau such that every grid tau' <= tau has
/// epsilon_d(tau') >= target_ratio * epsilon_c and non-pathological sampling.
inline TauStarResult find_tau_star(const RieszSystem& sys, double epsilon_c, double target_ratio,
                                   const std::vector<double>& tau_grid, const ScanGrid& grid,
                                   const TailCertificate& cert, const Tolerances& tol = {}) {
    if (!(epsilon_c > 0.0)) throw std::invalid_argument("find_tau_star: epsilon_c must be positive");
    if (!(target_ratio > 0.0) || !(target_ratio < 1.0))
        throw std::invalid_argument("find_tau_star: target_ratio must lie in (0, 1)");
    if (tau_grid.empty()) throw std::invalid_argument("find_tau_star: empty tau grid");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
        if (!(tau_grid[i] > 0.0) || !(tau_grid[i] < 1.0))
            throw std::invalid_argument("find_tau_star: tau grid values must lie in (0, 1)");
        if (i > 0 && !(tau_grid[i] > tau_grid[i - 1]))
            throw std::invalid_argument("find_tau_star: tau grid must be strictly ascending");
    }

    TauStarResult res;
    res.epsilon_c = epsilon_c;
    res.target_ratio = target_ratio;
    const double threshold = target_ratio * epsilon_c;
    bool prefix_ok = true;
    for (double tau : tau_grid) {
        TauRow row;
        row.tau = tau;
        row.nonpathological = check_sampling_nonpathological(sys, tau);
        try {
            row.epsilon_d = scan_epsilon_d(sys, tau, grid, cert, false, tol).epsilon;
        } catch (const NegativeMargin& e) {
            row.epsilon_d = e.result().epsilon;
            row.reason = "negative margin";
        }
        row.admissible = row.nonpathological && row.epsilon_d && *row.epsilon_d >= threshold;
        if (!row.nonpathological) row.reason = "pathological sampling";
        else if (!row.admissible && row.reason.empty()) row.reason = "epsilon_d below target";
        if (row.admissible && prefix_ok) res.tau_star = tau;
        else prefix_ok = false;
        res.table.push_back(row);
    }
    if (res.tau_star == 0.0) {
        std::ostringstream os;
        os << "find_tau_star: smallest grid tau " << tau_grid.front() << " is not admissible ("
           << res.table.front().reason << ")";
        throw NoAdmissibleTau(res, os.str());
    }
    return res;
}

} // namespace sdstab
