#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace sdstab {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

namespace numeric {

/// e^z - 1 without cancellation for small |z|.
inline cplx expm1(cplx z) {
    const double x = z.real();
    const double y = z.imag();
    const double half_sin = std::sin(0.5 * y);
    const double cos_m1 = -2.0 * half_sin * half_sin;
    return {std::expm1(x) * std::cos(y) + cos_m1, std::exp(x) * std::sin(y)};
}

/// (e^z - 1)/z, continuous through z = 0.
///
/// Below |z| = 1e-4 a six-term Taylor series is used; the remainder is
/// below |z|^6/5040 and therefore invisible in double precision.
inline cplx phi1(cplx z) {
    if (std::abs(z) < 1e-4) {
        return 1.0 + z * (1.0 / 2.0 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z * (1.0 / 120.0 + z / 720.0))));
    }
    return expm1(z) / z;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = a;
        return out;
    }
    const double step = (b - a) / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) out[i] = a + step * static_cast<double>(i);
    out.back() = b;
    return out;
}

inline std::vector<double> logspace(double a, double b, std::size_t n) {
    if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("logspace: endpoints must be positive");
    auto exps = linspace(std::log(a), std::log(b), n);
    for (auto& e : exps) e = std::exp(e);
    if (n > 0) {
        exps.front() = a;
        exps.back() = b;
    }
    return exps;
}

inline double norm2_sq(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const auto& c : v) s += std::norm(c);
    return s;
}

/// Distance of x to the nearest nonzero integer multiple of period.
inline double distance_to_nonzero_multiple(double x, double period) {
    double k = std::round(x / period);
    if (k == 0.0) k = (x >= 0.0) ? 1.0 : -1.0;
    return std::abs(x - k * period);
}

/// Seeded generator whose draws are identical on every platform:
/// mt19937_64 output mapped to [0, 1) by its top 53 bits.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double a, double b) { return a + (b - a) * unit(); }
    cplx complex_uniform(double a, double b) { return {uniform(a, b), uniform(a, b)}; }

private:
    std::mt19937_64 engine_;
};

} // namespace numeric
} // namespace sdstab
