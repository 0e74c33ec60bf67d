#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "gcml/lyapunov.hpp"
#include "oracles.hpp"

using namespace gcml;

namespace {

const MapParams kCritical{7.5, -0.6773};

std::vector<double> uniform_vec(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

} // namespace

TEST(Jacobian, MatchesCentralDifference) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = uniform_vec(16, rng, -0.6773, 0.3227);
        const auto v = uniform_vec(16, rng, -1.0, 1.0);
        const auto jv = jacobian_vector_product(LatticeState(x, 0.4, kCritical), v);
        const auto fd = oracle::fd_directional(x, v, 0.4, kCritical, 1e-6);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < 16; ++i) {
            num += (jv[i] - fd[i]) * (jv[i] - fd[i]);
            den += fd[i] * fd[i];
        }
        EXPECT_LT(std::sqrt(num / den), 1e-5);
    }
}

TEST(Jacobian, IsLinear) {
    std::mt19937_64 rng(37);
    const LatticeState s(uniform_vec(24, rng, -0.6, 0.3), 0.4, kCritical);
    const auto u = uniform_vec(24, rng, -1.0, 1.0);
    const auto v = uniform_vec(24, rng, -1.0, 1.0);
    std::vector<double> comb(24);
    for (std::size_t i = 0; i < 24; ++i) comb[i] = 2.5 * u[i] - 0.75 * v[i];
    const auto ju = jacobian_vector_product(s, u), jv = jacobian_vector_product(s, v);
    const auto jc = jacobian_vector_product(s, comb);
    for (std::size_t i = 0; i < 24; ++i) EXPECT_NEAR(jc[i], 2.5 * ju[i] - 0.75 * jv[i], 1e-13);
    try {
        jacobian_vector_product(s, std::vector<double>(5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
    }
}

TEST(Jacobian, FusedAdvanceMatchesProduct) {
    std::mt19937_64 rng(41);
    LatticeState s(uniform_vec(33, rng, -0.6, 0.3), 0.4, kCritical);
    auto v = uniform_vec(33, rng, -1.0, 1.0);
    const auto expected = jacobian_vector_product(s, v);
    const auto next = step(s);
    s.advance_linearized(v);
    EXPECT_EQ(s, next);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], expected[i], 1e-15);
}

TEST(Lyapunov, UncoupledFixedPointGivesLogSlope) {
    // With eps = 0 on the homogeneous fixed point every direction is
    // stretched by |f'(x*)|. The run is kept short because x* is unstable
    // for most beta and round-off would carry the orbit away.
    for (double beta : {-0.6773, -0.75, -0.9, 0.5}) {
        const MapParams p{7.5, beta};
        const auto fp = largest_fixed_point(p);
        LatticeState base(std::vector<double>(12, fp.x_star), 0.0, p);
        std::mt19937_64 rng(43);
        const double lambda = lyapunov_from(base, uniform_vec(12, rng, -1, 1), 0, 20);
        EXPECT_NEAR(lambda, std::log(std::fabs(fp.derivative_at)), 1e-10) << beta;
    }
}

TEST(Lyapunov, CoupledFixedPointUsesUniformMode) {
    // On the homogeneous state the diffusion leaves the uniform mode
    // unchanged, so it is stretched by |f'(x*)| exactly.
    const auto fp = largest_fixed_point(kCritical);
    LatticeState base(std::vector<double>(16, fp.x_star), 0.4, kCritical);
    const double lambda = lyapunov_from(base, std::vector<double>(16, 1.0), 0, 20);
    EXPECT_NEAR(lambda, std::log(std::fabs(fp.derivative_at)), 1e-10);
}

TEST(Lyapunov, EnsembleIsDeterministicAcrossWorkers) {
    EnsembleSpec spec;
    spec.n_sites = 50;
    spec.n_configs = 5;
    LyapunovOptions opt{200, 500, 1};
    const auto a = largest_lyapunov(spec, -0.6773, opt);
    opt.workers = 8;
    const auto b = largest_lyapunov(spec, -0.6773, opt);
    EXPECT_EQ(a.per_config, b.per_config);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_GT(a.standard_error, 0.0);
    spec.n_configs = 1;
    EXPECT_EQ(largest_lyapunov(spec, -0.6773, opt).standard_error, 0.0);
}

TEST(Lyapunov, Errors) {
    LatticeState base(std::vector<double>(8, 0.1), 0.4, kCritical);
    try {
        TangentState(base, std::vector<double>(8, 0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TangentCollapse);
    }
    EXPECT_THROW(TangentState(base, std::vector<double>(3, 1.0)), Error);
    EXPECT_THROW(lyapunov_from(base, std::vector<double>(8, 1.0), 0, 0), Error);
}
