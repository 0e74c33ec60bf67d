#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "gcml/error.hpp"

namespace gcml {

/// Parameters of the Gauss map f(x) = exp(-nu x^2) + beta.
struct MapParams {
    double nu = 7.5;
    double beta = -0.6773;

    void validate() const {
        detail::require(std::isfinite(nu) && nu > 0.0, ErrorCode::ValidationError, "nu must be positive");
        detail::require(std::isfinite(beta), ErrorCode::ValidationError, "beta must be finite");
    }

    friend bool operator==(const MapParams&, const MapParams&) = default;
};

namespace detail {

/// Branch-free exp accurate to about 1 ulp.
///
/// Written so that GCC can vectorize loops over it; the scalar and vector
/// paths produce identical bits as long as FP contraction is disabled
/// (-ffp-contract=off), which keeps the lattice kernel bit-compatible with
/// per-site evaluation. Arguments are clamped to [-708, 709].
inline double exp_kernel(double y) noexcept {
    constexpr double shifter = 6755399441055744.0; // 1.5 * 2^52
    constexpr double log2e = 1.4426950408889634;
    constexpr double ln2_hi = 6.93147180369123816490e-01;
    constexpr double ln2_lo = 1.90821492927058770002e-10;

    y = y < -708.0 ? -708.0 : y;
    y = y > 709.0 ? 709.0 : y;

    double kd = y * log2e + shifter;
    const std::int64_t ki = std::bit_cast<std::int64_t>(kd);
    kd -= shifter;
    double r = y - kd * ln2_hi;
    r = r - kd * ln2_lo;

    // Taylor series to r^13; |r| <= ln2/2 keeps the truncation below 1e-17.
    double p = 1.0 / 6227020800.0;
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;

    const std::int64_t bits = (ki - std::bit_cast<std::int64_t>(shifter) + 1023) << 52;
    return p * std::bit_cast<double>(bits);
}

/// exp(-nu x^2), the Gaussian part shared by f and f'.
inline double gaussian(double x, double nu) noexcept { return exp_kernel(-nu * x * x); }

} // namespace detail

inline double eval_map(double x, const MapParams& p) noexcept {
    return detail::gaussian(x, p.nu) + p.beta;
}

inline double eval_derivative(double x, const MapParams& p) noexcept {
    return -2.0 * p.nu * x * detail::gaussian(x, p.nu);
}

struct FixedPointResult {
    double x_star = 0.0;
    double residual = 0.0;
    double derivative_at = 0.0;
    bool stable = false;
};

inline constexpr double kDefaultRootTolerance = 1e-12;
inline constexpr int kDefaultBisectionCap = 200;

namespace detail {

inline FixedPointResult make_fixed_point(double x, const MapParams& p) {
    FixedPointResult r;
    r.x_star = x;
    r.residual = std::fabs(eval_map(x, p) - x);
    r.derivative_at = eval_derivative(x, p);
    r.stable = std::fabs(r.derivative_at) < 1.0;
    return r;
}

/// Bisects g(x) = f(x) - x between pos and neg, where g(pos) > 0 >= g(neg),
/// down to machine resolution, then keeps whichever endpoint has the smaller
/// residual. The two endpoints may come in either order.
inline FixedPointResult bisect_fixed_point(double pos, double neg, const MapParams& p, double tol,
                                           int max_iter) {
    auto g = [&](double x) { return eval_map(x, p) - x; };
    bool converged = false;
    for (int it = 0; it < max_iter; ++it) {
        const double mid = 0.5 * (pos + neg);
        if (mid == pos || mid == neg) {
            converged = true;
            break;
        }
        const double gm = g(mid);
        if (gm == 0.0) {
            pos = neg = mid;
            converged = true;
            break;
        }
        if (gm > 0.0)
            pos = mid;
        else
            neg = mid;
    }
    const double best = std::fabs(g(pos)) <= std::fabs(g(neg)) ? pos : neg;
    FixedPointResult r = make_fixed_point(best, p);
    if (r.residual > tol)
        throw Error(ErrorCode::ToleranceNotReached,
                    converged ? "bisection reached machine resolution above tolerance"
                              : "bisection iteration cap hit");
    return r;
}

} // namespace detail

/// Largest fixed point of the map.
///
/// f is decreasing on x >= 0 and bounded above by 1 + beta, so g(x) = f(x) - x
/// has exactly one root in [0, 1 + beta] whenever beta > -1, and no root
/// beyond it.
inline FixedPointResult largest_fixed_point(const MapParams& p, double tol = kDefaultRootTolerance,
                                            int max_iter = kDefaultBisectionCap) {
    p.validate();
    if (!(p.beta > -1.0)) throw Error(ErrorCode::BracketInvalid, "largest_fixed_point needs beta > -1");
    detail::require(tol > 0.0, ErrorCode::ValidationError, "tolerance must be positive");
    return detail::bisect_fixed_point(0.0, 1.0 + p.beta, p, tol, max_iter);
}

/// All fixed points found by scanning f(x) - x on a uniform grid over
/// [beta - 0.1, 1 + beta + 0.1] and bisecting each sign change.
/// Sorted ascending.
inline std::vector<FixedPointResult> find_all_fixed_points(const MapParams& p, int grid = 10000,
                                                           double tol = kDefaultRootTolerance) {
    p.validate();
    detail::require(grid >= 100, ErrorCode::ValidationError, "grid must be at least 100");
    const double a = p.beta - 0.1;
    const double b = 1.0 + p.beta + 0.1;
    const double h = (b - a) / grid;
    auto g = [&](double x) { return eval_map(x, p) - x; };

    std::vector<FixedPointResult> roots;
    double x0 = a;
    double g0 = g(x0);
    for (int i = 1; i <= grid; ++i) {
        const double x1 = (i == grid) ? b : a + i * h;
        const double g1 = g(x1);
        if (g0 == 0.0) {
            roots.push_back(detail::make_fixed_point(x0, p));
        } else if ((g0 > 0.0 && g1 < 0.0) || (g0 < 0.0 && g1 > 0.0)) {
            roots.push_back(g0 > 0.0 ? detail::bisect_fixed_point(x0, x1, p, tol, kDefaultBisectionCap)
                                     : detail::bisect_fixed_point(x1, x0, p, tol, kDefaultBisectionCap));
        }
        x0 = x1;
        g0 = g1;
    }
    if (g0 == 0.0) roots.push_back(detail::make_fixed_point(x0, p));
    return roots;
}

/// Inclusive arithmetic grid lo, lo + step, ..., <= hi.
struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double step = 1.0;

    std::vector<double> points() const {
        detail::require(step > 0.0 && hi >= lo, ErrorCode::ValidationError, "invalid range");
        const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
        std::vector<double> out(count);
        for (std::size_t i = 0; i < count; ++i) out[i] = lo + static_cast<double>(i) * step;
        return out;
    }

    friend bool operator==(const Range&, const Range&) = default;
};

struct BifurcationOptions {
    double x0 = 0.1;
    int transient = 1000;
    int keep = 100;
};

struct BifurcationRow {
    double beta = 0.0;
    std::vector<double> orbit;
};

inline std::vector<double> single_map_orbit(const MapParams& p, const BifurcationOptions& opt) {
    detail::require(opt.transient >= 0 && opt.keep >= 1, ErrorCode::ValidationError,
                    "bifurcation needs transient >= 0 and keep >= 1");
    double x = opt.x0;
    for (int i = 0; i < opt.transient; ++i) x = eval_map(x, p);
    std::vector<double> orbit(static_cast<std::size_t>(opt.keep));
    for (auto& v : orbit) {
        x = eval_map(x, p);
        v = x;
    }
    return orbit;
}

inline std::vector<BifurcationRow> single_map_bifurcation(const Range& betas, double nu,
                                                          const BifurcationOptions& opt = {}) {
    std::vector<BifurcationRow> rows;
    for (double beta : betas.points()) {
        MapParams p{nu, beta};
        p.validate();
        rows.push_back({beta, single_map_orbit(p, opt)});
    }
    return rows;
}

} // namespace gcml
