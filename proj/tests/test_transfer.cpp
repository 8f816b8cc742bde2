#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <vector>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "support.hpp"

using namespace sdstab;
using testing_support::make_system;
using testing_support::random_system;

namespace {

const double ln2 = std::numbers::ln2;

RieszSystem open_loop_with_tail() {
    return make_system({{-1.0, 0.0}, {-2.0, 3.0}}, ReciprocalTail{1.0, 3}, 30, {}, {});
}

RieszSystem a6_violating() { return make_system({{-1.0, 0.0}}, std::nullopt, 1, {1.0}, {1.0}); }

/// Self-conjugate data: conjugate pairs in the head with conjugate b and f.
RieszSystem conjugate_symmetric() {
    std::vector<cplx> b{cplx(1.0, 0.5), cplx(1.0, -0.5), 0.3, 0.2, -0.1, 0.05};
    std::vector<cplx> f{cplx(-0.4, 0.2), cplx(-0.4, -0.2), 0.1, -0.2, 0.3, 0.0};
    return make_system({{0.5, 1.5}, {0.5, -1.5}}, ReciprocalTail{1.0, 3}, 6, b, f);
}

}  // namespace

TEST(TransferContinuous, ZeroInput) {
    EXPECT_EQ(transfer_continuous(open_loop_with_tail(), {0.3, 2.0}), cplx(0.0, 0.0));
}

TEST(TransferContinuous, A6BoundaryAtOrigin) {
    // G(0) = f b / (0 - (-1)) = 1
    const cplx g = transfer_continuous(a6_violating(), {1e-300, 0.0});
    EXPECT_NEAR(std::abs(1.0 - g), 0.0, 1e-15);
}

TEST(TransferContinuous, MatchesDenseSolve) {
    auto sys = random_system(31, 16, 4);
    const cplx l(0.7, -1.3);
    const cplx got = transfer_continuous(sys, l);
    const oracle::Vec r = oracle::resolvent(oracle::diag(sys.eigenvalues()), l, oracle::to_vec(sys.b()));
    const cplx want = oracle::to_vec(sys.f()).transpose() * r;
    EXPECT_LT(std::abs(got - want), 1e-12 * std::max(1.0, std::abs(want)));
}

TEST(TransferDiscrete, ZeroInput) {
    EXPECT_EQ(transfer_discrete(open_loop_with_tail(), 0.5, {0.3, 2.0}), cplx(0.0, 0.0));
}

TEST(TransferDiscrete, ScalarHandValue) {
    const cplx g = transfer_discrete(a6_violating(), ln2, -1.0);
    EXPECT_NEAR(std::abs(g - (-1.0 / 3.0)), 0.0, 1e-15);
}

TEST(TransferDiscrete, MatchesDenseSolve) {
    auto sys = random_system(32, 16, 4);
    const double tau = 0.45;
    const cplx z(1.1, 0.6);
    std::vector<cplx> d(16), s(16);
    for (std::size_t n = 0; n < 16; ++n) {
        d[n] = std::exp(tau * sys.eigenvalues()[n]);
        s[n] = oracle::hold_entry(sys.eigenvalues()[n], tau) * sys.b()[n];
    }
    const oracle::Vec r = oracle::resolvent(oracle::diag(d), z, oracle::to_vec(s));
    const cplx want = oracle::to_vec(sys.f()).transpose() * r;
    EXPECT_LT(std::abs(transfer_discrete(sys, tau, z) - want), 1e-12 * std::max(1.0, std::abs(want)));
}

TEST(TransferDiscrete, RelationToClosedLoopResolvent) {
    auto sys = random_system(33, 24, 4);
    const double tau = 0.35;
    const cplx z(0.2, 1.4);
    const cplx g = transfer_discrete(sys, tau, z);
    std::vector<cplx> s(24);
    for (std::size_t n = 0; n < 24; ++n) s[n] = oracle::hold_entry(sys.eigenvalues()[n], tau) * sys.b()[n];
    const auto m = oracle::delta_matrix(sys.eigenvalues(), sys.b(), sys.f(), tau);
    const cplx want = oracle::to_vec(sys.f()).transpose() * oracle::resolvent(m, z, oracle::to_vec(s));
    EXPECT_LT(std::abs((1.0 / (1.0 - g) - 1.0) - want), 1e-10 * std::max(1.0, std::abs(want)));
}

TEST(Transfer, ConjugateSymmetry) {
    auto sys = conjugate_symmetric();
    for (cplx l : {cplx(0.3, 0.8), cplx(1.5, -2.0), cplx(0.0, 4.0)}) {
        const cplx a = transfer_continuous(sys, std::conj(l));
        const cplx b = std::conj(transfer_continuous(sys, l));
        EXPECT_LT(std::abs(a - b), 1e-14);
    }
    for (cplx z : {cplx(0.3, 0.8), cplx(-1.2, -0.4), std::polar(1.0, 2.0)}) {
        const cplx a = transfer_discrete(sys, 0.4, std::conj(z));
        const cplx b = std::conj(transfer_discrete(sys, 0.4, z));
        EXPECT_LT(std::abs(a - b), 1e-14);
    }
}

TEST(Transfer, SmallTauConsistency) {
    auto sys = conjugate_symmetric();
    const cplx mu(0.8, 2.5);
    const cplx g = transfer_continuous(sys, mu);
    double prev = 1e300;
    for (double tau : {0.4, 0.2, 0.1, 0.05, 0.025}) {
        const double err = std::abs(transfer_discrete(sys, tau, std::exp(tau * mu)) - g);
        EXPECT_LT(err, prev) << tau;
        prev = err;
    }
    EXPECT_LT(prev, 0.05);
}

TEST(ScanEpsilonC, OpenLoopIsOne) {
    auto sys = open_loop_with_tail();
    const auto r = scan_epsilon_c(sys, ScanGrid{}, make_tail_certificate(sys));
    EXPECT_DOUBLE_EQ(r.epsilon, 1.0);
}

TEST(ScanEpsilonC, StableScalar) {
    auto sys = testing_support::stable_scalar();
    const auto r = scan_epsilon_c(sys, ScanGrid{}, make_tail_certificate(sys));
    // |1 - G(i w)| = |i w + 2| / |i w + 1| decreases to 1; the large-modulus floor is 1 - 1/999
    EXPECT_NEAR(r.epsilon, 1.0 - 1.0 / 999.0, 1e-12);
    EXPECT_EQ(r.argmin_kind, SampleKind::large_modulus_floor);
    double dense_min = 1e300;
    for (double w : numeric::linspace(-1e3, 1e3, 200001))
        dense_min = std::min(dense_min, std::abs(cplx(2.0, w) / cplx(1.0, w)));
    EXPECT_GE(dense_min, r.epsilon);
    EXPECT_LT(dense_min - r.epsilon, 2e-3);
}

TEST(ScanEpsilonC, A6ViolationIsNegativeMargin) {
    auto sys = a6_violating();
    try {
        scan_epsilon_c(sys, ScanGrid{}, make_tail_certificate(sys));
        FAIL() << "expected NegativeMargin";
    } catch (const NegativeMargin& e) {
        EXPECT_LE(e.result().epsilon, 0.0);
        EXPECT_LE(std::abs(e.result().argmin_point), ScanGrid{}.eta);
    }
}

TEST(ScanEpsilonD, OpenLoopIsOne) {
    auto sys = open_loop_with_tail();
    const auto r = scan_epsilon_d(sys, 0.5, ScanGrid{}, make_tail_certificate(sys));
    EXPECT_DOUBLE_EQ(r.epsilon, 1.0);
}

TEST(ScanEpsilonD, StableScalarSmallTau) {
    auto sys = testing_support::stable_scalar();
    const auto cert = make_tail_certificate(sys);
    const double ec = scan_epsilon_c(sys, ScanGrid{}, cert).epsilon;
    const double ed = scan_epsilon_d(sys, 0.1, ScanGrid{}, cert).epsilon;
    EXPECT_LT(std::abs(ed - ec), 0.1 * ec);
    // closed form: |1 - F R(z,T) S| = |z - Delta| / |z - e^{-tau}| is smallest at z = -1
    const double q = std::exp(-0.1);
    const double want = (1.0 + (2.0 * q - 1.0)) / (1.0 + q);
    EXPECT_NEAR(ed, want, 1e-5);
}

TEST(ScanEpsilonD, A6ViolationIsNegativeMargin) {
    auto sys = a6_violating();
    EXPECT_THROW(scan_epsilon_d(sys, 0.5, ScanGrid{}, make_tail_certificate(sys)), NegativeMargin);
}

TEST(ScanEpsilonD, RejectsTauOutsideUnitInterval) {
    auto sys = testing_support::stable_scalar();
    EXPECT_THROW(scan_epsilon_d(sys, 1.0, ScanGrid{}, make_tail_certificate(sys)), std::invalid_argument);
}

TEST(ScanEpsilon, SlackLowersEpsilon) {
    auto sys = testing_support::stable_scalar();
    auto cert = make_tail_certificate(sys);
    double prev = scan_epsilon_c(sys, ScanGrid{}, cert).epsilon;
    for (double slack : {0.01, 0.1, 0.5}) {
        cert.cont_tail_bound = slack;
        const double e = scan_epsilon_c(sys, ScanGrid{}, cert).epsilon;
        EXPECT_LE(e, prev);
        prev = e;
    }
}

TEST(SamplingNonpathological, Examples) {
    EXPECT_TRUE(check_sampling_nonpathological(make_system({{1.0, 0.0}}, std::nullopt, 1, {}, {}), 0.5));
    auto pair = make_system({{1.0, 1.0}, {1.0, -1.0}}, std::nullopt, 2, {}, {});
    EXPECT_FALSE(check_sampling_nonpathological(pair, pi));
    EXPECT_TRUE(check_sampling_nonpathological(pair, 1.0));
}

TEST(FindTauStar, OpenLoopTakesGridMax) {
    auto sys = open_loop_with_tail();
    const auto cert = make_tail_certificate(sys);
    const std::vector<double> grid{0.1, 0.3, 0.5, 0.7, 0.9};
    const auto r = find_tau_star(sys, 1.0, 0.5, grid, ScanGrid{}, cert);
    EXPECT_EQ(r.tau_star, 0.9);
    ASSERT_EQ(r.table.size(), grid.size());
    for (const auto& row : r.table) EXPECT_TRUE(row.admissible);
}

TEST(FindTauStar, StableScalarContinuity) {
    auto sys = testing_support::stable_scalar();
    const auto cert = make_tail_certificate(sys);
    const double ec = scan_epsilon_c(sys, ScanGrid{}, cert).epsilon;
    std::vector<double> grid;
    for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
    const auto r = find_tau_star(sys, ec, 0.5, grid, ScanGrid{}, cert);
    EXPECT_GT(r.tau_star, 0.0);
    for (std::size_t i = 1; i < r.table.size(); ++i) {
        const double a = *r.table[i - 1].epsilon_d, b = *r.table[i].epsilon_d;
        EXPECT_LT(std::max(a, b) / std::min(a, b), 10.0);
    }
}

TEST(FindTauStar, MonotoneInTargetRatio) {
    std::vector<cplx> b(60), f(60);
    b[0] = 1.0;
    f[0] = -2.0;
    for (std::size_t n = 2; n <= 20; ++n) b[n - 1] = 1.0 / static_cast<double>(n * n);
    auto sys = make_system({{1.0, 0.0}}, ReciprocalTail{1.0, 2}, 60, b, f);
    const auto cert = make_tail_certificate(sys);
    const double ec = scan_epsilon_c(sys, ScanGrid{}, cert).epsilon;
    std::vector<double> grid;
    for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
    double prev = 0.0;
    for (double ratio : {0.9, 0.7, 0.5, 0.3, 0.1}) {
        const auto r = find_tau_star(sys, ec, ratio, grid, ScanGrid{}, cert);
        EXPECT_GE(r.tau_star, prev) << ratio;
        prev = r.tau_star;
    }
    EXPECT_GT(prev, 0.0);
}

TEST(FindTauStar, NoAdmissibleTauCarriesTable) {
    auto sys = testing_support::stable_scalar();
    const auto cert = make_tail_certificate(sys);
    try {
        find_tau_star(sys, 1.0, 0.99, {0.5, 0.9}, ScanGrid{}, cert);
        FAIL() << "expected NoAdmissibleTau";
    } catch (const NoAdmissibleTau& e) {
        EXPECT_EQ(e.result().table.size(), 2u);
        EXPECT_FALSE(e.result().table[0].admissible);
    }
}
