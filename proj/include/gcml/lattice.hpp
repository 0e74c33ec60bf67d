#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gcml/error.hpp"
#include "gcml/map.hpp"
#include "gcml/rng.hpp"

namespace gcml {

namespace detail {

/// out[i] = f(x[i]) for every site.
inline void map_images(std::span<const double> x, const MapParams& p, std::span<double> out) noexcept {
    const double nu = p.nu;
    const double beta = p.beta;
    const std::size_t n = x.size();
    const double* __restrict src = x.data();
    double* __restrict dst = out.data();
    for (std::size_t i = 0; i < n; ++i) dst[i] = gaussian(src[i], nu) + beta;
}

/// Periodic nearest-neighbour mixing: out_i = (1-eps) v_i + (eps/2)(v_{i+1} + v_{i-1}).
inline void diffuse(std::span<const double> v, double epsilon, std::span<double> out) noexcept {
    const std::size_t n = v.size();
    const double self = 1.0 - epsilon;
    const double half = epsilon / 2.0;
    const double* __restrict a = v.data();
    double* __restrict b = out.data();
    b[0] = self * a[0] + half * (a[1] + a[n - 1]);
    for (std::size_t i = 1; i + 1 < n; ++i) b[i] = self * a[i] + half * (a[i + 1] + a[i - 1]);
    b[n - 1] = self * a[n - 1] + half * (a[0] + a[n - 2]);
}

} // namespace detail

/// Site values of a periodic ring of diffusively coupled Gauss maps.
class LatticeState {
public:
    static constexpr std::size_t kMinSites = 3;

    LatticeState(std::vector<double> cells, double epsilon, MapParams params,
                 std::uint64_t micro_time = 0)
        : cells_(std::move(cells)), epsilon_(epsilon), params_(params), micro_time_(micro_time) {
        detail::require(cells_.size() >= kMinSites, ErrorCode::ValidationError,
                        "lattice needs at least 3 sites");
        detail::require(epsilon_ >= 0.0 && epsilon_ <= 1.0, ErrorCode::ValidationError,
                        "epsilon must lie in [0, 1]");
        params_.validate();
    }

    std::size_t size() const noexcept { return cells_.size(); }
    std::span<const double> cells() const noexcept { return cells_; }
    std::span<double> cells() noexcept { return cells_; }
    double epsilon() const noexcept { return epsilon_; }
    const MapParams& params() const noexcept { return params_; }
    std::uint64_t micro_time() const noexcept { return micro_time_; }

    /// One synchronous update of every site. f is evaluated once per site.
    void advance() {
        images_.resize(cells_.size());
        detail::map_images(cells_, params_, images_);
        detail::diffuse(images_, epsilon_, cells_);
        ++micro_time_;
    }

    /// Two updates: one observable time unit.
    void advance_pair() {
        advance();
        advance();
    }

    /// Advances the state and maps `tangent` through the Jacobian of the
    /// update evaluated at the pre-step state.
    void advance_linearized(std::span<double> tangent) {
        const std::size_t n = cells_.size();
        const double nu = params_.nu;
        const double beta = params_.beta;
        images_.resize(n);
        stretch_.resize(n);
        const double* __restrict x = cells_.data();
        const double* __restrict v = tangent.data();
        double* __restrict fx = images_.data();
        double* __restrict dv = stretch_.data();
        for (std::size_t i = 0; i < n; ++i) {
            const double g = detail::gaussian(x[i], nu);
            fx[i] = g + beta;
            dv[i] = -2.0 * nu * x[i] * g * v[i];
        }
        detail::diffuse(images_, epsilon_, cells_);
        detail::diffuse(stretch_, epsilon_, tangent);
        ++micro_time_;
    }

    friend bool operator==(const LatticeState& a, const LatticeState& b) {
        return a.cells_ == b.cells_ && a.epsilon_ == b.epsilon_ && a.params_ == b.params_ &&
               a.micro_time_ == b.micro_time_;
    }

private:
    std::vector<double> cells_;
    std::vector<double> images_;
    std::vector<double> stretch_;
    double epsilon_;
    MapParams params_;
    std::uint64_t micro_time_;
};

inline LatticeState step(LatticeState s) {
    s.advance();
    return s;
}

inline LatticeState step_pair(LatticeState s) {
    s.advance_pair();
    return s;
}

/// Parameters shared by every configuration of an ensemble.
struct EnsembleSpec {
    std::size_t n_sites = 1000;
    std::size_t n_configs = 1;
    std::uint64_t master_seed = 1;
    double epsilon = 0.4;
    MapParams params{};
    std::int64_t t_max = 1000;
    /// Initial-condition interval; defaults to the invariant range [beta, 1 + beta].
    std::optional<double> init_low;
    std::optional<double> init_high;

    std::pair<double, double> init_interval() const {
        return {init_low.value_or(params.beta), init_high.value_or(1.0 + params.beta)};
    }

    void validate() const {
        params.validate();
        detail::require(n_sites >= LatticeState::kMinSites, ErrorCode::ValidationError,
                        "n_sites must be at least 3");
        detail::require(n_configs >= 1, ErrorCode::ValidationError, "n_configs must be at least 1");
        detail::require(t_max >= 1, ErrorCode::ValidationError, "t_max must be at least 1");
        detail::require(epsilon >= 0.0 && epsilon <= 1.0, ErrorCode::ValidationError,
                        "epsilon must lie in [0, 1]");
        const auto [lo, hi] = init_interval();
        detail::require(std::isfinite(lo) && std::isfinite(hi) && lo < hi, ErrorCode::ValidationError,
                        "init_low must be strictly below init_high");
    }
};

/// Configuration `config_index` of the ensemble: cells i.i.d. uniform on the
/// initial-condition interval, drawn from a stream that depends only on
/// (master_seed, config_index).
inline LatticeState init_random(const EnsembleSpec& spec, std::size_t config_index) {
    spec.validate();
    detail::require(config_index < spec.n_configs, ErrorCode::IndexOutOfRange,
                    "config_index out of range");
    const auto [lo, hi] = spec.init_interval();
    Stream rng(spec.master_seed, config_index, StreamKind::InitialCondition);
    std::vector<double> cells(spec.n_sites);
    for (auto& c : cells) c = rng.uniform(lo, hi);
    return LatticeState(std::move(cells), spec.epsilon, spec.params);
}

} // namespace gcml
