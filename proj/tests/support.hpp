#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "sdstab/sdstab.hpp"

namespace testing_support {

using sdstab::cplx;

inline sdstab::RieszSystem make_system(std::vector<cplx> head, std::optional<sdstab::ReciprocalTail> tail,
                                       std::size_t n, std::vector<cplx> b, std::vector<cplx> f,
                                       double alpha = 0.5, double delta = sdstab::pi / 4, double ma = 1.0,
                                       double mb = 1.0) {
    if (b.size() < n) b.resize(n);
    if (f.size() < n) f.resize(n);
    return sdstab::RieszSystem(sdstab::SpectrumSpec(std::move(head), tail, n), std::move(b), std::move(f), ma, mb,
                               alpha, delta);
}

/// lambda = -1, b = 1, f = -1, no tail.
inline sdstab::RieszSystem stable_scalar() { return make_system({{-1.0, 0.0}}, std::nullopt, 1, {1.0}, {-1.0}); }

/// Random head in the annulus 0.2 <= |l| <= 3 (both half-planes), reciprocal
/// tail from mode head+1, b and f dense random.
inline sdstab::RieszSystem random_system(std::uint64_t seed, std::size_t n, std::size_t head, bool stable_head = false) {
    sdstab::numeric::Rng rng(seed);
    std::vector<cplx> h;
    while (h.size() < head) {
        const double r = rng.uniform(0.2, 3.0);
        const double th = rng.uniform(0.0, 2 * sdstab::pi);
        cplx l = std::polar(r, th);
        if (std::abs(l.real()) < 0.05) continue;
        if (stable_head && l.real() > 0.0) l = -std::conj(l);
        h.push_back(l);
    }
    std::vector<cplx> b(n), f(n);
    for (auto& v : b) v = rng.complex_uniform(-1.0, 1.0);
    for (auto& v : f) v = rng.complex_uniform(-1.0, 1.0) * 0.3;
    std::optional<sdstab::ReciprocalTail> tail;
    if (n > head) tail = sdstab::ReciprocalTail{rng.uniform(0.5, 2.0), head + 1};
    return make_system(std::move(h), tail, n, std::move(b), std::move(f));
}

inline sdstab::CoeffVector random_vector(std::uint64_t seed, std::size_t n) {
    sdstab::numeric::Rng rng(seed);
    std::vector<cplx> v(n);
    for (auto& c : v) c = rng.complex_uniform(-1.0, 1.0);
    return sdstab::CoeffVector(std::move(v));
}

} // namespace testing_support
