#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "gcml/lattice.hpp"
#include "oracles.hpp"

using namespace gcml;

namespace {

const MapParams kCritical{7.5, -0.6773};

std::vector<double> random_cells(std::size_t n, std::mt19937_64& rng, double lo = -0.6773, double hi = 0.3227) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

std::vector<double> cells_of(const LatticeState& s) { return {s.cells().begin(), s.cells().end()}; }

} // namespace

TEST(LatticeStep, BitExactAgainstNaiveOracle) {
    std::mt19937_64 rng(2024);
    for (std::size_t n : {3u, 5u, 64u}) {
        for (int trial = 0; trial < 100; ++trial) {
            const auto x = random_cells(n, rng, -1.5, 1.5);
            const auto ref = oracle::naive_step(x, 0.4, kCritical);
            const auto got = step(LatticeState(x, 0.4, kCritical));
            ASSERT_EQ(cells_of(got), ref) << "N=" << n << " trial " << trial;
        }
    }
}

TEST(LatticeStep, AgreesWithLibmExpToRoundoff) {
    std::mt19937_64 rng(5);
    const auto x = random_cells(257, rng);
    const auto got = cells_of(step(LatticeState(x, 0.4, kCritical)));
    const auto ref = oracle::libm_step(x, 0.4, kCritical);
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(got[i], ref[i], 1e-15);
}

TEST(LatticeStep, FiveSiteHandComputed) {
    const std::vector<double> x{0.0, 0.1, -0.2, 0.3, 1.0};
    std::vector<double> fx(5);
    for (int i = 0; i < 5; ++i) fx[i] = std::exp(-7.5 * x[i] * x[i]) - 0.6773;
    const auto got = cells_of(step(LatticeState(x, 0.4, kCritical)));
    EXPECT_NEAR(got[0], 0.6 * fx[0] + 0.2 * (fx[1] + fx[4]), 1e-15);
    EXPECT_NEAR(got[2], 0.6 * fx[2] + 0.2 * (fx[3] + fx[1]), 1e-15);
    EXPECT_NEAR(got[4], 0.6 * fx[4] + 0.2 * (fx[0] + fx[3]), 1e-15);
}

TEST(LatticeStep, HomogeneousFixedPointIsInvariant) {
    for (double beta : {-0.6773, -0.69, -0.75, -0.9, 0.5}) {
        const MapParams p{7.5, beta};
        const double xs = largest_fixed_point(p).x_star;
        const auto next = step(LatticeState(std::vector<double>(100, xs), 0.4, p));
        for (double x : next.cells()) EXPECT_NEAR(x, xs, 1e-14) << beta;
    }
}

TEST(LatticeStep, StableHomogeneousStateAttracts) {
    const MapParams p{7.5, 0.5};
    const double xs = largest_fixed_point(p).x_star;
    std::mt19937_64 rng(3);
    LatticeState s(random_cells(50, rng, xs - 0.01, xs + 0.01), 0.4, p);
    for (int t = 0; t < 500; ++t) s.advance();
    for (double x : s.cells()) EXPECT_NEAR(x, xs, 1e-12);
}

TEST(LatticeStep, ZeroCouplingDecouplesSites) {
    std::mt19937_64 rng(9);
    const auto x = random_cells(31, rng);
    const auto got = cells_of(step(LatticeState(x, 0.0, kCritical)));
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(got[i], eval_map(x[i], kCritical));
}

TEST(LatticeStep, TranslationEquivariance) {
    std::mt19937_64 rng(17);
    const std::size_t n = 64, k = 17;
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_cells(n, rng);
        auto shifted = x;
        std::rotate(shifted.begin(), shifted.begin() + k, shifted.end());
        auto a = cells_of(step(LatticeState(x, 0.4, kCritical)));
        std::rotate(a.begin(), a.begin() + k, a.end());
        const auto b = cells_of(step(LatticeState(shifted, 0.4, kCritical)));
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-15);
    }
}

TEST(LatticeStep, ReflectionEquivariance) {
    std::mt19937_64 rng(19);
    const std::size_t n = 64;
    for (int trial = 0; trial < 20; ++trial) {
        const auto x = random_cells(n, rng);
        std::vector<double> mirrored(n);
        for (std::size_t i = 0; i < n; ++i) mirrored[i] = x[(n - i) % n];
        const auto a = cells_of(step(LatticeState(x, 0.4, kCritical)));
        const auto b = cells_of(step(LatticeState(mirrored, 0.4, kCritical)));
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[(n - i) % n], b[i], 1e-15);
    }
}

TEST(LatticeStep, StaysInInvariantRange) {
    std::mt19937_64 rng(23);
    LatticeState s(random_cells(200, rng, -5.0, 5.0), 0.4, kCritical);
    for (int t = 0; t < 500; ++t) {
        s.advance();
        for (double x : s.cells()) {
            ASSERT_GE(x, kCritical.beta - 1e-15);
            ASSERT_LE(x, 1.0 + kCritical.beta + 1e-15);
        }
    }
    EXPECT_EQ(s.micro_time(), 500u);
}

TEST(LatticeStep, PairIsTwoSteps) {
    std::mt19937_64 rng(29);
    const LatticeState s(random_cells(40, rng), 0.4, kCritical);
    EXPECT_EQ(step_pair(s), step(step(s)));
    EXPECT_EQ(step_pair(s).micro_time(), 2u);
}

TEST(LatticeState, RejectsInvalidInput) {
    EXPECT_THROW(LatticeState(std::vector<double>(2, 0.0), 0.4, kCritical), Error);
    EXPECT_THROW(LatticeState(std::vector<double>(8, 0.0), 1.5, kCritical), Error);
    EXPECT_THROW(LatticeState(std::vector<double>(8, 0.0), -0.1, kCritical), Error);
    EXPECT_THROW(LatticeState(std::vector<double>(8, 0.0), 0.4, MapParams{0.0, 0.0}), Error);
}

TEST(InitRandom, DeterministicPerConfigIndex) {
    EnsembleSpec spec;
    spec.n_sites = 100;
    spec.n_configs = 4;
    spec.master_seed = 42;
    EXPECT_EQ(init_random(spec, 2), init_random(spec, 2));
    EXPECT_NE(cells_of(init_random(spec, 1)), cells_of(init_random(spec, 2)));
    auto other = spec;
    other.n_configs = 10;
    EXPECT_EQ(init_random(spec, 3), init_random(other, 3));
    other.master_seed = 43;
    EXPECT_NE(cells_of(init_random(spec, 3)), cells_of(init_random(other, 3)));
}

TEST(InitRandom, DrawsInsideInterval) {
    EnsembleSpec spec;
    spec.n_sites = 5000;
    const auto s = init_random(spec, 0);
    const auto [lo, hi] = spec.init_interval();
    EXPECT_DOUBLE_EQ(lo, -0.6773);
    EXPECT_DOUBLE_EQ(hi, 0.3227);
    for (double x : s.cells()) {
        EXPECT_GE(x, lo);
        EXPECT_LT(x, hi);
    }
    spec.init_low = 0.1;
    spec.init_high = 0.2;
    for (double x : init_random(spec, 0).cells()) {
        EXPECT_GE(x, 0.1);
        EXPECT_LT(x, 0.2);
    }
}

TEST(InitRandom, RejectsBadSpec) {
    EnsembleSpec spec;
    spec.init_low = 0.2;
    spec.init_high = 0.2;
    try {
        init_random(spec, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ValidationError);
    }
    spec = {};
    EXPECT_THROW(init_random(spec, 1), Error);
}
