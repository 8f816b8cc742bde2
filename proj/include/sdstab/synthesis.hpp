#pragma once

// Unstable/stable splitting, rank-one pole placement on the unstable head, and
// assembly of diagonal systems with a reciprocal tail and perturbed feedback.

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

#include <Eigen/Dense>

#include "sdstab/assumptions.hpp"
#include "sdstab/errors.hpp"
#include "sdstab/numeric.hpp"
#include "sdstab/system.hpp"

namespace sdstab {

struct Decomposition {
    std::vector<std::size_t> plus_indices;   ///< Re lambda_n > 0
    std::vector<std::size_t> minus_indices;
};

inline Decomposition decompose(const RieszSystem& sys, double tol = 1e-12) {
    Decomposition d;
    const auto& lam = sys.eigenvalues();
    for (std::size_t n = 0; n < lam.size(); ++n) {
        if (std::abs(lam[n].real()) <= tol * std::max(1.0, std::abs(lam[n]))) {
            std::ostringstream os;
            os << "decompose: eigenvalue " << lam[n] << " at position " << n << " is on the imaginary axis";
            throw AmbiguousSplit(os.str());
        }
        if (sys.spectrum().is_tail(n) || lam[n].real() < 0.0)
            d.minus_indices.push_back(n);
        else
            d.plus_indices.push_back(n);
    }
    return d;
}

class PlacementFailed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PlacementResult {
    std::vector<cplx> f_plus;
    std::vector<cplx> achieved_eigs;  ///< ordered to match the targets
    double max_error = 0.0;
};

inline std::vector<cplx> eigenvalues_of(const Eigen::MatrixXcd& m) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(m, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("eigenvalue solver did not converge");
    std::vector<cplx> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return out;
}

/// Pairs each target with a distinct computed eigenvalue, closest pairs first.
inline std::vector<cplx> match_to_targets(std::vector<cplx> computed, const std::vector<cplx>& targets) {
    const std::size_t n = targets.size();
    std::vector<cplx> out(n);
    std::vector<bool> used_t(n, false), used_c(computed.size(), false);
    for (std::size_t round = 0; round < n; ++round) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t bt = 0, bc = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (used_t[i]) continue;
            for (std::size_t j = 0; j < computed.size(); ++j) {
                if (used_c[j]) continue;
                const double d = std::abs(targets[i] - computed[j]);
                if (d < best) {
                    best = d;
                    bt = i;
                    bc = j;
                }
            }
        }
        used_t[bt] = used_c[bc] = true;
        out[bt] = computed[bc];
    }
    return out;
}

/// f with det(sI - diag(lambda) - b f^T) = prod (s - mu_j):
/// f_n = -prod_j (lambda_n - mu_j) / (b_n prod_{j != n} (lambda_n - lambda_j)).
inline PlacementResult place_poles(const std::vector<cplx>& lambdas, const std::vector<cplx>& b,
                                   const std::vector<cplx>& targets, double tolerance = 1e-9) {
    const std::size_t h = lambdas.size();
    if (b.size() != h || targets.size() != h)
        throw std::invalid_argument("place_poles: lambdas, b and targets must have equal lengths");
    for (std::size_t i = 0; i < h; ++i) {
        if (b[i] == cplx{0.0, 0.0}) {
            std::ostringstream os;
            os << "place_poles: b is zero on mode " << i << " (uncontrollable)";
            throw UncontrollableMode(os.str());
        }
        if (!(targets[i].real() < 0.0)) throw std::invalid_argument("place_poles: targets must lie in Re < 0");
        for (std::size_t j = 0; j < h; ++j) {
            if (j > i && lambdas[i] == lambdas[j]) throw CoincidentEigenvalues("place_poles: eigenvalues must be distinct");
            if (j > i && targets[i] == targets[j]) throw CoincidentEigenvalues("place_poles: targets must be distinct");
            if (targets[i] == lambdas[j]) throw CoincidentEigenvalues("place_poles: targets must differ from eigenvalues");
        }
    }

    PlacementResult res;
    res.f_plus.resize(h);
    for (std::size_t n = 0; n < h; ++n) {
        cplx num{1.0, 0.0};
        cplx den{1.0, 0.0};
        for (std::size_t j = 0; j < h; ++j) {
            num *= lambdas[n] - targets[j];
            if (j != n) den *= lambdas[n] - lambdas[j];
        }
        res.f_plus[n] = -num / (b[n] * den);
    }

    const auto hh = static_cast<Eigen::Index>(h);
    Eigen::MatrixXcd m(hh, hh);
    for (Eigen::Index r = 0; r < hh; ++r)
        for (Eigen::Index c = 0; c < hh; ++c)
            m(r, c) = b[static_cast<std::size_t>(r)] * res.f_plus[static_cast<std::size_t>(c)] +
                      (r == c ? lambdas[static_cast<std::size_t>(r)] : cplx{0.0, 0.0});
    res.achieved_eigs = match_to_targets(eigenvalues_of(m), targets);
    for (std::size_t i = 0; i < h; ++i) res.max_error = std::max(res.max_error, std::abs(res.achieved_eigs[i] - targets[i]));
    if (!(res.max_error <= tolerance)) {
        std::ostringstream os;
        os << "place_poles: achieved eigenvalues miss the targets by " << res.max_error;
        throw PlacementFailed(os.str());
    }
    return res;
}

struct A6Nudge {
    std::size_t position;
    cplx shift;  ///< added to f at `position`
    cplx value_before;
    cplx value_after;
};

/// If |F A^{-1} B + 1| <= margin, shift f on one stable support mode by the
/// smallest amount that moves |F A^{-1} B + 1| to 2 * margin.
inline std::optional<A6Nudge> nudge_for_A6(std::vector<cplx>& f, const RieszSystem& sys, double margin) {
    const cplx before = feedback_times_inverse_generator(sys.with_feedback(f));
    const cplx gap = before + 1.0;
    if (std::abs(gap) > margin) return std::nullopt;

    std::optional<std::size_t> pos;
    const auto& lam = sys.eigenvalues();
    for (std::size_t n = sys.spectrum().head_size(); n < sys.support_b() && !pos; ++n)
        if (sys.b()[n] != cplx{0.0, 0.0}) pos = n;
    for (std::size_t n = 0; n < sys.support_b() && !pos; ++n)
        if (sys.b()[n] != cplx{0.0, 0.0} && lam[n].real() < 0.0) pos = n;
    if (!pos) throw std::invalid_argument("nudge_for_A6: no stable mode with nonzero b to perturb");

    const cplx dir = std::abs(gap) > 0.0 ? gap / std::abs(gap) : cplx{1.0, 0.0};
    const cplx wanted = 2.0 * margin * dir;
    // F A^{-1} B changes by b_p shift / lambda_p
    const cplx shift = (wanted - gap) * lam[*pos] / sys.b()[*pos];
    f[*pos] += shift;
    const cplx after = feedback_times_inverse_generator(sys.with_feedback(f));
    return A6Nudge{*pos, shift, before, after};
}

struct SparseEntry {
    std::size_t position;  ///< 0-based
    cplx value;

    bool operator==(const SparseEntry&) const = default;
};

inline std::vector<cplx> densify(const std::vector<SparseEntry>& entries, std::size_t n, const char* who) {
    std::vector<cplx> out(n, cplx{0.0, 0.0});
    for (const auto& e : entries) {
        if (e.position >= n) {
            std::ostringstream os;
            os << who << ": position " << e.position << " outside truncation " << n;
            throw std::invalid_argument(os.str());
        }
        out[e.position] += e.value;
    }
    return out;
}

struct FeedbackDesign {
    RieszSystem system;  ///< with f = f1 + f2 (+ nudge)
    Decomposition split;
    PlacementResult placement;
    std::vector<cplx> f1;
    std::vector<cplx> f2;
    double f2_norm = 0.0;
    std::optional<double> kappa;
    std::optional<A6Nudge> nudge;

    bool f2_within_kappa() const { return !kappa || f2_norm < *kappa; }
};

/// f1 places the unstable modes at `targets` and vanishes on the stable part;
/// f = f1 + f2, nudged for (A6) if needed.
inline FeedbackDesign design_feedback(const RieszSystem& open_loop, const std::vector<cplx>& targets,
                                      const std::vector<cplx>& f2, std::optional<double> kappa,
                                      double a6_margin = 1e-6) {
    const auto n = open_loop.truncation();
    if (f2.size() != n) throw std::invalid_argument("design_feedback: f2 length differs from truncation");
    auto split = decompose(open_loop);
    if (split.plus_indices.size() != targets.size())
        throw std::invalid_argument("design_feedback: need one target per unstable eigenvalue");
    std::vector<cplx> lp, bp;
    for (auto i : split.plus_indices) {
        lp.push_back(open_loop.eigenvalues()[i]);
        bp.push_back(open_loop.b()[i]);
    }
    auto placement = place_poles(lp, bp, targets);
    std::vector<cplx> f1(n, cplx{0.0, 0.0});
    for (std::size_t k = 0; k < split.plus_indices.size(); ++k) f1[split.plus_indices[k]] = placement.f_plus[k];

    std::vector<cplx> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = f1[i] + f2[i];
    auto nudge = nudge_for_A6(f, open_loop, a6_margin);
    std::vector<cplx> f2_final = f2;
    if (nudge) f2_final[nudge->position] += nudge->shift;

    FeedbackDesign d{open_loop.with_feedback(f), std::move(split), std::move(placement), std::move(f1), f2_final,
                     0.0, kappa, nudge};
    d.f2_norm = std::sqrt(numeric::norm2_sq(f2_final) / open_loop.riesz_Ma());
    return d;
}

/// Inputs for a diagonal system with unstable head lambda_1..lambda_{Ns-1} and
/// tail lambda_n = -c/n, n >= Ns.
struct ExampleSpec {
    std::vector<cplx> unstable_eigs;
    std::vector<cplx> targets;
    std::size_t tail_start = 2;  ///< N_s (1-based mode index of the first tail mode)
    std::size_t truncation = 200;
    double tail_coefficient = 1.0;
    std::vector<cplx> b_head;
    std::vector<SparseEntry> b_tail;  ///< positions are 0-based into the full mode list
    std::vector<SparseEntry> f2;
    std::optional<double> kappa;
    double alpha = 0.5;
    double delta = pi / 4;
    double a6_margin = 1e-6;
};

inline FeedbackDesign build_example_system(const ExampleSpec& spec) {
    const std::size_t h = spec.unstable_eigs.size();
    if (spec.tail_start != h + 1) throw std::invalid_argument("build_example_system: tail_start must equal head size + 1");
    for (const auto& l : spec.unstable_eigs)
        if (!(l.real() > 0.0)) throw std::invalid_argument("build_example_system: head eigenvalues must be unstable");
    if (spec.b_head.size() != h) throw std::invalid_argument("build_example_system: need one b value per head mode");
    for (std::size_t i = 0; i < h; ++i)
        if (spec.b_head[i] == cplx{0.0, 0.0}) throw UncontrollableMode("build_example_system: b vanishes on an unstable mode");
    for (const auto& e : spec.b_tail)
        if (e.position < h) throw std::invalid_argument("build_example_system: b_tail entry inside the head");

    SpectrumSpec spectrum(spec.unstable_eigs, ReciprocalTail{spec.tail_coefficient, spec.tail_start}, spec.truncation);
    auto b = densify(spec.b_tail, spec.truncation, "build_example_system");
    for (std::size_t i = 0; i < h; ++i) b[i] = spec.b_head[i];
    RieszSystem open_loop(std::move(spectrum), std::move(b), std::vector<cplx>(spec.truncation), 1.0, 1.0, spec.alpha,
                          spec.delta);
    return design_feedback(open_loop, spec.targets, densify(spec.f2, spec.truncation, "build_example_system"),
                           spec.kappa, spec.a6_margin);
}

struct BDomainResult {
    bool ok = true;
    double a5_value = 0.0;          ///< sum |b_n / lambda_n|^2
    double weighted_tail_sum = 0.0; ///< sum over stable support of n^2 |b_n|^2 (n = mode index)
    double last_half_share = 0.0;   ///< fraction of the weighted sum from the upper half of the support
    bool weighted_sum_stabilizing = true;
};

/// b in D(A^{-1}) for the diagonal example: both sums are finite under finite
/// support; the partial-sum growth of sum n^2 |b_n|^2 is reported as a
/// divergence indicator for the untruncated sequence.
inline BDomainResult verify_b_in_domain(const RieszSystem& sys, double stabilizing_share = 0.25) {
    BDomainResult r;
    r.a5_value = check_A5(sys).value;
    const auto& spec = sys.spectrum();
    std::vector<double> terms;
    std::vector<std::size_t> idx;
    for (std::size_t n = spec.head_size(); n < sys.support_b(); ++n) {
        const double m = static_cast<double>(spec.mode_index(n));
        const double t = m * m * std::norm(sys.b()[n]);
        if (t == 0.0) continue;
        terms.push_back(t);
        idx.push_back(spec.mode_index(n));
        r.weighted_tail_sum += t;
    }
    if (!terms.empty() && r.weighted_tail_sum > 0.0) {
        const std::size_t lo = idx.front(), hi = idx.back();
        const std::size_t mid = lo + (hi - lo) / 2;
        double upper = 0.0;
        for (std::size_t k = 0; k < terms.size(); ++k)
            if (idx[k] > mid) upper += terms[k];
        r.last_half_share = upper / r.weighted_tail_sum;
        r.weighted_sum_stabilizing = r.last_half_share <= stabilizing_share;
    }
    r.ok = std::isfinite(r.a5_value) && std::isfinite(r.weighted_tail_sum);
    return r;
}

} // namespace sdstab
