#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "support.hpp"

using namespace sdstab;
using testing_support::make_system;

namespace {

RieszSystem example44(std::size_t n, std::vector<cplx> b, std::vector<cplx> f) {
    return make_system({{1.0, 0.0}}, ReciprocalTail{1.0, 2}, n, std::move(b), std::move(f));
}

}  // namespace

TEST(InSector, Examples) {
    EXPECT_TRUE(in_sector({1.0, 0.0}, 0.5, pi / 4));
    EXPECT_FALSE(in_sector({-0.1, 0.0}, 0.5, pi / 4));
    EXPECT_FALSE(in_sector({-0.1, 0.0}, 0.5, pi / 2 - 1e-9));
    EXPECT_NEAR(std::arg(cplx(-0.1, 0.2)), 2.0344439357957027, 1e-15);
    EXPECT_TRUE(in_sector({-0.1, 0.2}, 0.5, pi / 4));
    EXPECT_FALSE(in_sector({-0.6, 0.2}, 0.5, pi / 4));
    EXPECT_THROW(in_sector({0.0, 0.0}, 0.5, pi / 4), std::invalid_argument);
}

TEST(CheckA1A2A3, Example44Spectrum) {
    const auto r = check_A1_A2_A3(example44(200, {1.0}, {}));
    EXPECT_EQ(r.a1_count, 1u);
    EXPECT_TRUE(r.a1_certified);
    EXPECT_TRUE(r.a2_ok);
    EXPECT_TRUE(r.a3_ok);
    EXPECT_EQ(r.a3, A3Status::certified);
}

TEST(CheckA1A2A3, ImaginaryAxisEigenvalue) {
    const auto r = check_A1_A2_A3(make_system({{0.0, 1.0}}, ReciprocalTail{1.0, 2}, 4, {}, {}));
    EXPECT_FALSE(r.a2_ok);
    ASSERT_TRUE(r.a2_offender.has_value());
    EXPECT_EQ(*r.a2_offender, 0u);
}

TEST(CheckA1A2A3, FiniteSpectrumUncertifiable) {
    const auto r = check_A1_A2_A3(make_system({{-1.0, 0.0}, {-2.0, 1.0}}, std::nullopt, 2, {}, {}));
    EXPECT_EQ(r.a3, A3Status::uncertifiable);
    EXPECT_FALSE(r.a3_ok);
    EXPECT_TRUE(r.a2_ok);
}

TEST(CheckA5, Values) {
    EXPECT_EQ(check_A5(example44(10, {}, {})).value, 0.0);
    EXPECT_TRUE(check_A5(example44(10, {}, {})).ok);
    EXPECT_DOUBLE_EQ(check_A5(make_system({{-1.0, 0.0}}, std::nullopt, 1, {2.0}, {})).value, 4.0);

    // lambda_n = -1/n, b_n = 1/n^2 for n <= 10: |b/lambda|^2 = 1/n^2
    std::vector<cplx> b(10);
    double want = 0.0;
    for (std::size_t n = 1; n <= 10; ++n) {
        b[n - 1] = 1.0 / static_cast<double>(n * n);
        want += 1.0 / static_cast<double>(n * n);
    }
    auto sys = make_system({}, ReciprocalTail{1.0, 1}, 10, b, {});
    EXPECT_NEAR(check_A5(sys).value, want, 1e-14);
}

TEST(CheckA6, Values) {
    const auto zero = check_A6(example44(10, {}, {}));
    EXPECT_EQ(zero.value, cplx(0.0, 0.0));
    EXPECT_TRUE(zero.ok);
    const auto bad = check_A6(make_system({{-1.0, 0.0}}, std::nullopt, 1, {1.0}, {1.0}));
    EXPECT_EQ(bad.value, cplx(-1.0, 0.0));
    EXPECT_FALSE(bad.ok);
    const auto good = check_A6(make_system({{-1.0, 0.0}}, std::nullopt, 1, {1.0}, {-1.0}));
    EXPECT_EQ(good.value, cplx(1.0, 0.0));
    EXPECT_TRUE(good.ok);
}

TEST(CheckA6, BoundaryFlipsAtMargin) {
    const double margin = 1e-6;
    for (double eps : {2e-7, 5e-7, 9e-7}) {
        auto s = make_system({{-1.0, 0.0}}, std::nullopt, 1, {1.0}, {1.0 + eps});
        EXPECT_FALSE(check_A6(s, margin).ok) << eps;
    }
    for (double eps : {1.1e-6, 2e-6, 1e-3}) {
        auto s = make_system({{-1.0, 0.0}}, std::nullopt, 1, {1.0}, {1.0 + eps});
        EXPECT_TRUE(check_A6(s, margin).ok) << eps;
    }
}

TEST(TailConstants, Values) {
    const auto c = tail_constants(0.5, pi / 2);
    EXPECT_DOUBLE_EQ(c.gamma1, 4.0);
    EXPECT_NEAR(c.gamma2, 1.0, 1e-15);
    EXPECT_GT(c.upsilon1, 0.0);
    EXPECT_GT(c.upsilon2, 0.0);
    EXPECT_GE(c.m1, 1.0);
    EXPECT_LE(c.m1, 2.0);
}

TEST(TailConstants, M1DominatesInteriorSampling) {
    const auto c = tail_constants(0.5, pi / 4);
    double interior = 0.0;
    for (int i = 0; i <= 400; ++i)
        for (int j = 0; j <= 400; ++j) {
            const cplx l(-1.0 + i / 400.0, -pi + 2 * pi * j / 400.0);
            const double g = l == cplx(0.0, 0.0) ? 1.0 : std::abs((1.0 - std::exp(l)) / l);
            interior = std::max(interior, g);
        }
    EXPECT_NEAR(c.m1_grid_max, interior, 1e-12);
    EXPECT_GE(c.m1, interior);
}

TEST(TailConstants, ScaleCovariance) {
    const auto a = tail_constants(0.25, pi / 3);
    const auto b = tail_constants(0.5, pi / 3);
    const auto c = tail_constants(0.5, pi / 6);
    EXPECT_NEAR(a.gamma1, 2.0 * b.gamma1, 1e-15);
    EXPECT_NEAR(a.upsilon1, 2.0 * b.upsilon1, 1e-14);
    EXPECT_EQ(a.gamma2, b.gamma2);
    EXPECT_NE(b.gamma2, c.gamma2);
}

TEST(TailBounds, EmptyTailIsZero) {
    auto sys = example44(20, {1.0, 0.5, 0.25}, {});
    const auto cert = make_tail_certificate(sys);
    EXPECT_EQ(tail_bound_continuous(sys, cert, 5), 0.0);
    EXPECT_EQ(tail_bound_discrete(sys, cert, 5, 0.5), 0.0);
    EXPECT_EQ(cert.cont_tail_bound, 0.0);
    EXPECT_EQ(cert.disc_tail_bound, 0.0);
}

TEST(TailBounds, OneDroppedTerm) {
    // positions: head {1}, then lambda = -1 at the first tail slot (c = 2, start 2)
    auto sys = make_system({{1.0, 0.0}}, ReciprocalTail{2.0, 2}, 2, {0.5, 1.0}, {1.0, 1.0});
    const auto cert = make_tail_certificate(sys);
    ASSERT_EQ(sys.eigenvalues()[1], cplx(-1.0, 0.0));
    EXPECT_NEAR(tail_bound_continuous(sys, cert, 1), std::sqrt(16.0 + 2.0), 1e-13);
    const double want = std::sqrt(cert.upsilon1 * cert.upsilon1 + cert.upsilon2 * cert.upsilon2);
    EXPECT_NEAR(tail_bound_discrete(sys, cert, 1, 0.5), want, 1e-13);
}

TEST(TailBounds, RejectsSectorModes) {
    auto sys = example44(20, {1.0, 0.5, 0.25}, {});
    const auto cert = make_tail_certificate(sys);
    EXPECT_EQ(cert.tail_start, 1u);
    EXPECT_THROW(tail_bound_continuous(sys, cert, 0), std::invalid_argument);
    EXPECT_THROW(tail_bound_discrete(sys, cert, 1, 1.0), std::invalid_argument);
    EXPECT_THROW(tail_bound_discrete(sys, cert, 21, 0.5), std::invalid_argument);
}

TEST(TailBounds, MonotoneInN) {
    std::vector<cplx> b(40);
    for (std::size_t n = 0; n < 40; ++n) b[n] = 1.0 / static_cast<double>((n + 1) * (n + 1));
    auto sys = example44(60, b, {});
    const auto cert = make_tail_certificate(sys);
    double pc = tail_bound_continuous(sys, cert, 1), pd = tail_bound_discrete(sys, cert, 1, 0.3);
    for (std::size_t n = 2; n <= 60; ++n) {
        const double c = tail_bound_continuous(sys, cert, n);
        const double d = tail_bound_discrete(sys, cert, n, 0.3);
        EXPECT_LE(c, pc);
        EXPECT_LE(d, pd);
        pc = c;
        pd = d;
    }
}

TEST(TailBounds, DominateSampledTail) {
    std::vector<cplx> b(40);
    for (std::size_t n = 0; n < 40; ++n) b[n] = cplx(1.0, -0.5) / static_cast<double>(n + 1);
    auto sys = example44(60, b, {});
    const auto cert = make_tail_certificate(sys);
    const std::size_t first = 10;
    const double bc = tail_bound_continuous(sys, cert, first);
    double worst_c = 0.0;
    for (double w : numeric::logspace(1e-4, 1e4, 500))
        for (double sgn : {-1.0, 1.0}) {
            double s = 0.0;
            for (std::size_t n = first; n < 60; ++n) s += std::norm(sys.b()[n] / (cplx(0.0, sgn * w) - sys.eigenvalues()[n]));
            worst_c = std::max(worst_c, std::sqrt(s));
        }
    EXPECT_LE(worst_c, bc);
    for (double tau : {0.1, 0.5, 0.9}) {
        const double bd = tail_bound_discrete(sys, cert, first, tau);
        double worst_d = 0.0;
        for (double th : numeric::linspace(1e-4, 2 * pi - 1e-4, 1000)) {
            const cplx z = std::polar(1.0, th);
            double s = 0.0;
            for (std::size_t n = first; n < 60; ++n) {
                const cplx l = sys.eigenvalues()[n];
                s += std::norm(oracle::hold_entry(l, tau) * sys.b()[n] / (z - std::exp(tau * l)));
            }
            worst_d = std::max(worst_d, std::sqrt(s));
        }
        EXPECT_LE(worst_d, bd) << tau;
    }
}

TEST(CheckA4, ScalarResolvent) {
    auto sys = make_system({{-1.0, 0.0}}, std::nullopt, 1, {}, {});
    const auto r = check_A4_example(sys, default_a4_grid());
    EXPECT_TRUE(r.ok);
    for (std::size_t i = 0; i < r.omega.size(); ++i)
        EXPECT_NEAR(r.resolvent_norm[i], 1.0 / std::abs(cplx(1.0, r.omega[i])), 1e-14);
    EXPECT_LE(r.sup_estimate, 1.0);
}

TEST(CheckA4, Example44MatchesDenseSvd) {
    std::vector<cplx> b(200);
    b[0] = 1.0;
    for (std::size_t n = 2; n <= 50; ++n) b[n - 1] = 1.0 / static_cast<double>(n * n);
    std::vector<cplx> f(200);
    f[0] = -2.0;
    for (std::size_t n = 2; n <= 6; ++n) f[n - 1] = 0.01;
    auto sys = example44(200, b, f);
    const auto r = check_A4_example(sys, {-10.0, 10.0});
    ASSERT_EQ(r.omega.size(), 2u);
    const auto m = oracle::closed_loop_generator(sys.eigenvalues(), sys.b(), sys.f());
    for (std::size_t i = 0; i < 2; ++i) {
        const double want = oracle::resolvent_norm(m, r.omega[i]);
        EXPECT_NEAR(r.resolvent_norm[i], want, 1e-6 * want);
    }
}

TEST(CheckA4, HighFrequencyAsymptote) {
    std::vector<cplx> b(100);
    b[0] = 1.0;
    b[4] = 0.04;
    std::vector<cplx> f(100);
    f[0] = -2.0;
    auto sys = example44(100, b, f);
    const auto r = check_A4_example(sys, default_a4_grid());
    for (std::size_t i = 0; i < r.omega.size(); ++i) {
        const double w = std::abs(r.omega[i]);
        if (w < 100.0) continue;
        EXPECT_LE(r.resolvent_norm[i] * w, 2.0);
        EXPECT_GE(r.resolvent_norm[i] * w, 0.5);
    }
}

TEST(CheckA4, UnstabilizedHeadRejected) {
    auto sys = example44(10, {1.0}, {});
    EXPECT_THROW(check_A4_example(sys, default_a4_grid()), HeadNotStabilized);
}
