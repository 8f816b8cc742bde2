#pragma once

// Truncated spectral representation of a Riesz-spectral control system.
//
// Modes are stored by 0-based position. Position n < H holds head eigenvalue
// n, position H + j holds the tail eigenvalue -c/(start_index + j). The
// "mode index" (1-based, as in the diagonal model x' = sum lambda_n <x,psi_n> phi_n)
// is reported by SpectrumSpec::mode_index.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdstab/numeric.hpp"

namespace sdstab {

/// lambda_n = -coefficient / n for n = start_index, start_index + 1, ...
struct ReciprocalTail {
    double coefficient = 1.0;
    std::size_t start_index = 1;

    bool operator==(const ReciprocalTail&) const = default;
};

class SpectrumSpec {
public:
    SpectrumSpec(std::vector<cplx> head, std::optional<ReciprocalTail> tail, std::size_t truncation)
        : head_(std::move(head)), tail_(tail), truncation_(truncation) {
        if (truncation_ < head_.size())
            throw std::invalid_argument("SpectrumSpec: truncation must be >= number of head eigenvalues");
        if (!tail_ && truncation_ != head_.size())
            throw std::invalid_argument("SpectrumSpec: without a tail law the truncation must equal the head size");
        if (tail_) {
            if (!(tail_->coefficient > 0.0) || !std::isfinite(tail_->coefficient))
                throw std::invalid_argument("SpectrumSpec: reciprocal tail coefficient must be positive");
            if (tail_->start_index < 1)
                throw std::invalid_argument("SpectrumSpec: tail start_index must be >= 1");
        }
        for (const auto& l : head_) {
            if (!std::isfinite(l.real()) || !std::isfinite(l.imag()))
                throw std::invalid_argument("SpectrumSpec: non-finite head eigenvalue");
            if (l == cplx{0.0, 0.0})
                throw std::invalid_argument("SpectrumSpec: zero eigenvalue in head");
        }

        eigenvalues_ = head_;
        eigenvalues_.reserve(truncation_);
        for (std::size_t n = head_.size(); n < truncation_; ++n) eigenvalues_.emplace_back(tail_value(n), 0.0);

        check_distinct();
    }

    const std::vector<cplx>& head() const noexcept { return head_; }
    const std::optional<ReciprocalTail>& tail() const noexcept { return tail_; }
    bool has_tail() const noexcept { return tail_.has_value(); }
    std::size_t truncation() const noexcept { return truncation_; }
    std::size_t head_size() const noexcept { return head_.size(); }

    /// Materialized eigenvalues, length truncation().
    const std::vector<cplx>& eigenvalues() const noexcept { return eigenvalues_; }
    cplx operator[](std::size_t n) const { return eigenvalues_.at(n); }

    bool is_tail(std::size_t n) const noexcept { return n >= head_.size(); }

    std::size_t mode_index(std::size_t n) const noexcept {
        if (!is_tail(n) || !tail_) return n + 1;
        return tail_->start_index + (n - head_.size());
    }

    bool operator==(const SpectrumSpec& o) const {
        return head_ == o.head_ && tail_ == o.tail_ && truncation_ == o.truncation_;
    }

private:
    double tail_value(std::size_t n) const {
        return -tail_->coefficient / static_cast<double>(tail_->start_index + (n - head_.size()));
    }

    static bool same(cplx a, cplx b) {
        return std::abs(a - b) <= 1e-13 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
    }

    void check_distinct() const {
        for (std::size_t i = 0; i < head_.size(); ++i) {
            for (std::size_t j = i + 1; j < head_.size(); ++j) {
                if (same(head_[i], head_[j])) {
                    std::ostringstream os;
                    os << "SpectrumSpec: duplicate head eigenvalues at positions " << i << " and " << j;
                    throw std::invalid_argument(os.str());
                }
            }
        }
        if (!tail_ || truncation_ == head_.size()) return;
        // The tail is strictly monotone on the negative real axis; only head
        // values near it can collide.
        const double c = tail_->coefficient;
        const double first = static_cast<double>(tail_->start_index);
        const double last = first + static_cast<double>(truncation_ - head_.size() - 1);
        for (std::size_t i = 0; i < head_.size(); ++i) {
            const cplx l = head_[i];
            if (l.real() >= 0.0) continue;
            const double m = std::round(-c / l.real());
            if (m < first || m > last) continue;
            if (same(l, cplx{-c / m, 0.0})) {
                std::ostringstream os;
                os << "SpectrumSpec: head eigenvalue at position " << i << " coincides with tail mode " << m;
                throw std::invalid_argument(os.str());
            }
        }
    }

    std::vector<cplx> head_;
    std::optional<ReciprocalTail> tail_;
    std::size_t truncation_;
    std::vector<cplx> eigenvalues_;
};

/// Biorthogonal coordinates a_n = <x, psi_n> of a state.
class CoeffVector {
public:
    CoeffVector() = default;
    explicit CoeffVector(std::size_t n) : c_(n, cplx{0.0, 0.0}) {}
    explicit CoeffVector(std::vector<cplx> c) : c_(std::move(c)) {}
    CoeffVector(std::initializer_list<cplx> il) : c_(il) {}

    std::size_t size() const noexcept { return c_.size(); }
    cplx& operator[](std::size_t n) { return c_[n]; }
    cplx operator[](std::size_t n) const { return c_[n]; }
    std::span<const cplx> span() const noexcept { return c_; }
    const std::vector<cplx>& coeffs() const noexcept { return c_; }
    std::vector<cplx>& coeffs() noexcept { return c_; }

    /// Sum of |a_n|^2 (squared norm in the orthonormal realization).
    double norm_sq() const { return numeric::norm2_sq(c_); }
    double norm() const { return std::sqrt(norm_sq()); }

    auto begin() const noexcept { return c_.begin(); }
    auto end() const noexcept { return c_.end(); }

    bool operator==(const CoeffVector&) const = default;

private:
    std::vector<cplx> c_;
};

inline CoeffVector operator-(const CoeffVector& a, const CoeffVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("CoeffVector: length mismatch");
    CoeffVector out(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) out[n] = a[n] - b[n];
    return out;
}

inline CoeffVector operator+(const CoeffVector& a, const CoeffVector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("CoeffVector: length mismatch");
    CoeffVector out(a.size());
    for (std::size_t n = 0; n < a.size(); ++n) out[n] = a[n] + b[n];
    return out;
}

/// Spectrum plus rank-one input/feedback data and the Riesz/sector constants.
///
/// b[n] = <b, psi_n>, f[n] = <phi_n, f>. Operators act in coefficient space
/// (orthonormal realization); riesz_Ma/riesz_Mb only enter norm brackets.
class RieszSystem {
public:
    RieszSystem(SpectrumSpec spectrum, std::vector<cplx> b, std::vector<cplx> f, double riesz_Ma, double riesz_Mb,
                double alpha, double delta)
        : spectrum_(std::move(spectrum)), b_(std::move(b)), f_(std::move(f)), Ma_(riesz_Ma), Mb_(riesz_Mb),
          alpha_(alpha), delta_(delta) {
        const auto n = spectrum_.truncation();
        if (b_.size() != n) throw std::invalid_argument("RieszSystem: b length differs from truncation");
        if (f_.size() != n) throw std::invalid_argument("RieszSystem: f length differs from truncation");
        if (!(Ma_ > 0.0) || !(Mb_ >= Ma_))
            throw std::invalid_argument("RieszSystem: need 0 < riesz_Ma <= riesz_Mb");
        if (!(alpha_ > 0.0)) throw std::invalid_argument("RieszSystem: alpha must be positive");
        if (!(delta_ > 0.0) || delta_ > pi / 2 + 1e-15)
            throw std::invalid_argument("RieszSystem: delta must lie in (0, pi/2]");
        support_b_ = 0;
        for (std::size_t i = n; i-- > 0;) {
            if (b_[i] != cplx{0.0, 0.0}) {
                support_b_ = i + 1;
                break;
            }
        }
    }

    const SpectrumSpec& spectrum() const noexcept { return spectrum_; }
    const std::vector<cplx>& eigenvalues() const noexcept { return spectrum_.eigenvalues(); }
    const std::vector<cplx>& b() const noexcept { return b_; }
    const std::vector<cplx>& f() const noexcept { return f_; }
    double riesz_Ma() const noexcept { return Ma_; }
    double riesz_Mb() const noexcept { return Mb_; }
    double alpha() const noexcept { return alpha_; }
    double delta() const noexcept { return delta_; }
    std::size_t truncation() const noexcept { return spectrum_.truncation(); }

    /// Number of leading positions that may carry nonzero b; b[n] == 0 for n >= support_b().
    std::size_t support_b() const noexcept { return support_b_; }

    /// Upper bound on ||f|| from the biorthogonal sequence's Riesz bracket.
    double f_norm_bound() const { return std::sqrt(numeric::norm2_sq(f_) / Ma_); }

    RieszSystem with_feedback(std::vector<cplx> f) const {
        return RieszSystem(spectrum_, b_, std::move(f), Ma_, Mb_, alpha_, delta_);
    }

private:
    SpectrumSpec spectrum_;
    std::vector<cplx> b_;
    std::vector<cplx> f_;
    double Ma_;
    double Mb_;
    double alpha_;
    double delta_;
    std::size_t support_b_ = 0;
};

inline void require_length(const CoeffVector& x, const RieszSystem& sys, const char* who) {
    if (x.size() != sys.truncation()) {
        std::ostringstream os;
        os << who << ": coefficient vector has length " << x.size() << ", system truncation is "
           << sys.truncation();
        throw std::invalid_argument(os.str());
    }
}

} // namespace sdstab
