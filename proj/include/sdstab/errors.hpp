#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace sdstab {

/// A resolvent was requested at a point too close to the spectrum of T(tau).
class SpectrumTooClose : public std::runtime_error {
public:
    SpectrumTooClose(std::size_t index, double distance, const std::string& what)
        : std::runtime_error(what), index_(index), distance_(distance) {}

    /// Offending mode position (0-based), or npos for the tail cluster point.
    std::size_t index() const noexcept { return index_; }
    double distance() const noexcept { return distance_; }

    static constexpr std::size_t cluster_point = static_cast<std::size_t>(-1);

private:
    std::size_t index_;
    double distance_;
};

/// The Sherman-Morrison-Woodbury denominator 1 - F R(z,T) S vanished numerically.
class SmwSingular : public std::runtime_error {
public:
    SmwSingular(std::complex<double> denominator, const std::string& what)
        : std::runtime_error(what), denominator_(denominator) {}

    std::complex<double> denominator() const noexcept { return denominator_; }

private:
    std::complex<double> denominator_;
};

class UncontrollableMode : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class CoincidentEigenvalues : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class AmbiguousSplit : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class HeadNotStabilized : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

} // namespace sdstab
