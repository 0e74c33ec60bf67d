#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gcml/ensemble.hpp"
#include "gcml/error.hpp"
#include "gcml/lattice.hpp"
#include "gcml/map.hpp"
#include "gcml/rng.hpp"

namespace gcml {

/// Linearised update applied to v at the given state:
/// w_i = (1-eps) f'(x_i) v_i + (eps/2) [f'(x_{i-1}) v_{i-1} + f'(x_{i+1}) v_{i+1}].
inline std::vector<double> jacobian_vector_product(const LatticeState& state, std::span<const double> v) {
    detail::require(v.size() == state.size(), ErrorCode::LengthMismatch, "tangent length differs from lattice");
    std::vector<double> u(v.size()), w(v.size());
    const auto x = state.cells();
    for (std::size_t i = 0; i < v.size(); ++i) u[i] = eval_derivative(x[i], state.params()) * v[i];
    detail::diffuse(u, state.epsilon(), w);
    return w;
}

/// A lattice trajectory co-evolved with a unit tangent vector.
class TangentState {
public:
    TangentState(LatticeState base, std::vector<double> tangent) : base_(std::move(base)), tangent_(std::move(tangent)) {
        detail::require(tangent_.size() == base_.size(), ErrorCode::LengthMismatch,
                        "tangent length differs from lattice");
        renormalize();
    }

    const LatticeState& base() const noexcept { return base_; }
    std::span<const double> tangent() const noexcept { return tangent_; }
    double log_sum() const noexcept { return log_sum_; }
    std::int64_t steps_counted() const noexcept { return steps_; }
    double exponent() const noexcept { return steps_ > 0 ? log_sum_ / static_cast<double>(steps_) : 0.0; }

    /// One micro-step of base and tangent; the tangent's stretch is logged
    /// and it is rescaled to unit norm.
    void advance() {
        base_.advance_linearized(tangent_);
        log_sum_ += std::log(renormalize());
        ++steps_;
    }

private:
    double renormalize() {
        double sq = 0.0;
        for (double t : tangent_) sq += t * t;
        const double norm = std::sqrt(sq);
        if (!(norm > 0.0) || !std::isfinite(norm) || !(sq > 0.0))
            throw Error(ErrorCode::TangentCollapse, "tangent norm underflowed or overflowed");
        for (double& t : tangent_) t /= norm;
        return norm;
    }

    LatticeState base_;
    std::vector<double> tangent_;
    double log_sum_ = 0.0;
    std::int64_t steps_ = 0;
};

struct LyapunovOptions {
    std::int64_t transient = 10000;
    std::int64_t measure_steps = 100000;
    std::size_t workers = 0;
};

struct LyapunovEstimate {
    double mean = 0.0;
    /// Standard error of the mean over configurations (0 for one configuration).
    double standard_error = 0.0;
    std::vector<double> per_config;
};

/// Random unit direction drawn from the configuration's tangent stream.
inline std::vector<double> random_unit_vector(std::size_t n, Stream& rng) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

/// Exponent for one trajectory: `transient` plain updates, then
/// `measure_steps` tangent updates.
inline double lyapunov_from(LatticeState base, std::vector<double> tangent, std::int64_t transient,
                            std::int64_t measure_steps) {
    detail::require(transient >= 0 && measure_steps >= 1, ErrorCode::ValidationError,
                    "need transient >= 0 and measure_steps >= 1");
    for (std::int64_t t = 0; t < transient; ++t) base.advance();
    TangentState ts(std::move(base), std::move(tangent));
    for (std::int64_t t = 0; t < measure_steps; ++t) ts.advance();
    return ts.exponent();
}

inline LyapunovEstimate largest_lyapunov(EnsembleSpec spec, double beta, const LyapunovOptions& opt = {}) {
    spec.params.beta = beta;
    spec.validate();
    LyapunovEstimate est;
    est.per_config.resize(spec.n_configs);
    for_each_ordered(
        spec.n_configs, opt.workers,
        [&](std::size_t c) {
            Stream rng(spec.master_seed, c, StreamKind::Tangent);
            return lyapunov_from(init_random(spec, c), random_unit_vector(spec.n_sites, rng), opt.transient,
                                 opt.measure_steps);
        },
        [&](std::size_t c, double lambda) { est.per_config[c] = lambda; });

    const double n = static_cast<double>(spec.n_configs);
    double sum = 0.0;
    for (double l : est.per_config) sum += l;
    est.mean = sum / n;
    if (spec.n_configs > 1) {
        double ss = 0.0;
        for (double l : est.per_config) ss += (l - est.mean) * (l - est.mean);
        est.standard_error = std::sqrt(ss / (n - 1.0) / n);
    }
    return est;
}

} // namespace gcml
