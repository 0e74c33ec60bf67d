#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "gcml/ensemble.hpp"
#include "gcml/error.hpp"
#include "gcml/lattice.hpp"
#include "gcml/map.hpp"
#include "gcml/series.hpp"

namespace gcml {

/// Coarse-grained +-1 view of a lattice: +1 above the largest fixed point.
struct SpinField {
    std::vector<std::int8_t> spins;

    std::size_t size() const noexcept { return spins.size(); }
    friend bool operator==(const SpinField&, const SpinField&) = default;
};

/// Sign of x relative to x*. Ties go to +1.
inline std::int8_t spin_of(double x, double x_star) noexcept { return x >= x_star ? 1 : -1; }

inline void coarse_grain_into(std::span<const double> cells, double x_star, SpinField& out) {
    out.spins.resize(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) out.spins[i] = spin_of(cells[i], x_star);
}

inline SpinField coarse_grain(const LatticeState& state, double x_star) {
    SpinField s;
    coarse_grain_into(state.cells(), x_star, s);
    return s;
}

inline std::size_t count_flips(const SpinField& prev, const SpinField& curr) {
    detail::require(prev.size() == curr.size(), ErrorCode::LengthMismatch, "spin fields differ in length");
    std::size_t n = 0;
    for (std::size_t i = 0; i < prev.size(); ++i) n += prev.spins[i] != curr.spins[i];
    return n;
}

/// Fraction of sites whose spin differs between the two fields.
inline double flip_rate(const SpinField& prev, const SpinField& curr) {
    const std::size_t n = count_flips(prev, curr);
    return static_cast<double>(n) / static_cast<double>(prev.size());
}

/// Tracks which sites have matched their initial spin at every sampled time.
class PersistenceTracker {
public:
    explicit PersistenceTracker(SpinField reference)
        : reference_(std::move(reference)), alive_(reference_.size(), 1), count_alive_(reference_.size()) {}

    /// Marks sites that differ from the reference as no longer persistent.
    /// Returns the persistent fraction.
    double update(const SpinField& curr) {
        detail::require(curr.size() == reference_.size(), ErrorCode::LengthMismatch,
                        "spin field length differs from reference");
        for (std::size_t i = 0; i < curr.size(); ++i) {
            if (alive_[i] && curr.spins[i] != reference_.spins[i]) {
                alive_[i] = 0;
                --count_alive_;
            }
        }
        return fraction();
    }

    const SpinField& reference() const noexcept { return reference_; }
    bool alive(std::size_t i) const { return alive_.at(i) != 0; }
    std::size_t count_alive() const noexcept { return count_alive_; }
    double fraction() const noexcept {
        return static_cast<double>(count_alive_) / static_cast<double>(reference_.size());
    }

private:
    SpinField reference_;
    std::vector<std::uint8_t> alive_;
    std::size_t count_alive_;
};

inline PersistenceTracker update_persistence(PersistenceTracker tracker, const SpinField& curr) {
    tracker.update(curr);
    return tracker;
}

enum class TimeSampling {
    Raw, ///< every observable step
    Log, ///< every step up to 1000, then about 100 log-spaced steps per decade
};

/// Observable steps at which series values are stored.
inline std::vector<std::int64_t> sample_times(std::int64_t t_max, TimeSampling mode) {
    std::vector<std::int64_t> out;
    const std::int64_t dense = mode == TimeSampling::Raw ? t_max : std::min<std::int64_t>(t_max, 1000);
    for (std::int64_t t = 1; t <= dense; ++t) out.push_back(t);
    if (mode == TimeSampling::Log) {
        for (int k = 1;; ++k) {
            const auto t = static_cast<std::int64_t>(std::llround(1000.0 * std::pow(10.0, k / 100.0)));
            if (t > t_max) break;
            if (t > out.back()) out.push_back(t);
        }
        if (out.back() != t_max) out.push_back(t_max);
    }
    return out;
}

struct ObservablesOptions {
    TimeSampling sampling = TimeSampling::Raw;
    std::size_t workers = 0;
};

/// Ensemble-averaged flip rate and persistence, plus per-configuration
/// values at t_max.
struct ObservablesRun {
    ObservableSeries flip_rate;
    ObservableSeries persistence;
    std::vector<double> final_flip_rate;
    std::vector<double> final_persistence;
};

namespace detail {

struct ConfigCounts {
    std::vector<std::int64_t> flips;
    std::vector<std::int64_t> alive;
};

/// Evolves one configuration for t_max observable steps and records raw
/// flip and persistence counts at the sampled times.
inline ConfigCounts run_config_counts(const EnsembleSpec& spec, std::size_t config_index, double x_star,
                                      std::span<const std::int64_t> times) {
    LatticeState state = init_random(spec, config_index);
    const std::size_t n = state.size();
    std::vector<std::int8_t> reference(n), prev(n);
    std::vector<std::uint8_t> alive(n, 1);
    for (std::size_t i = 0; i < n; ++i) reference[i] = prev[i] = spin_of(state.cells()[i], x_star);
    std::int64_t count_alive = static_cast<std::int64_t>(n);

    ConfigCounts out;
    out.flips.reserve(times.size());
    out.alive.reserve(times.size());
    std::size_t next = 0;
    for (std::int64_t t = 1; t <= spec.t_max; ++t) {
        state.advance_pair();
        const auto cells = state.cells();
        std::int64_t flips = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int8_t s = spin_of(cells[i], x_star);
            flips += s != prev[i];
            prev[i] = s;
            if (alive[i] && s != reference[i]) {
                alive[i] = 0;
                --count_alive;
            }
        }
        if (next < times.size() && times[next] == t) {
            out.flips.push_back(flips);
            out.alive.push_back(count_alive);
            ++next;
        }
    }
    return out;
}

} // namespace detail

/// Flip rate F(t) and persistence P(t) at observable steps t = 1..t_max,
/// where step t compares micro-time 2t with 2t-2 (F) and with 0 (P).
///
/// Per-configuration counts are integers, so the ensemble sum is exact and
/// independent of scheduling; each mean is a single division at the end.
inline ObservablesRun run_observables(EnsembleSpec spec, double beta, const ObservablesOptions& opt = {}) {
    spec.params.beta = beta;
    spec.validate();
    const double x_star = largest_fixed_point(spec.params).x_star;
    const auto times = sample_times(spec.t_max, opt.sampling);

    std::vector<std::int64_t> flip_sum(times.size(), 0), alive_sum(times.size(), 0);
    ObservablesRun run;
    run.final_flip_rate.resize(spec.n_configs);
    run.final_persistence.resize(spec.n_configs);
    const double n_sites = static_cast<double>(spec.n_sites);

    for_each_ordered(
        spec.n_configs, opt.workers,
        [&](std::size_t c) { return detail::run_config_counts(spec, c, x_star, times); },
        [&](std::size_t c, detail::ConfigCounts&& counts) {
            for (std::size_t k = 0; k < times.size(); ++k) {
                flip_sum[k] += counts.flips[k];
                alive_sum[k] += counts.alive[k];
            }
            run.final_flip_rate[c] = static_cast<double>(counts.flips.back()) / n_sites;
            run.final_persistence[c] = static_cast<double>(counts.alive.back()) / n_sites;
        });

    const double denom = n_sites * static_cast<double>(spec.n_configs);
    auto make = [&](const std::vector<std::int64_t>& sums, SeriesLabel label) {
        ObservableSeries s{times, std::vector<double>(times.size()), spec.n_configs, label};
        for (std::size_t k = 0; k < times.size(); ++k) s.values[k] = static_cast<double>(sums[k]) / denom;
        return s;
    };
    run.flip_rate = make(flip_sum, SeriesLabel::FlipRate);
    run.persistence = make(alive_sum, SeriesLabel::Persistence);
    return run;
}

// ---------------------------------------------------------------------------
// Spatial and space-time exports

struct ProfileRow {
    std::size_t site;
    double x;
    int spin;
};

struct SpatialProfile {
    double x_star = 0.0;
    std::uint64_t micro_time = 0;
    std::vector<ProfileRow> rows;
};

inline SpatialProfile export_spatial_profile(const LatticeState& state, double x_star) {
    SpatialProfile p;
    p.x_star = x_star;
    p.micro_time = state.micro_time();
    p.rows.reserve(state.size());
    for (std::size_t i = 0; i < state.size(); ++i)
        p.rows.push_back({i, state.cells()[i], spin_of(state.cells()[i], x_star)});
    return p;
}

inline void write_spatial_profile(const std::filesystem::path& path, const SpatialProfile& p) {
    auto out = open_output(path);
    out << "i,x,s\n";
    for (const auto& r : p.rows) out << r.site << ',' << format_double(r.x) << ',' << r.spin << '\n';
    close_output(out, path);
    write_metadata(path.string() + ".meta",
                   {{"x_star", format_double(p.x_star)}, {"micro_time", std::to_string(p.micro_time)}});
}

enum class SpaceTimeKind { Raw, Spins };

/// Site values (or spins) sampled at even micro-times 0, 2, ..., 2 t_max.
struct SpaceTimeMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    SpaceTimeKind kind = SpaceTimeKind::Raw;
    double x_star = 0.0;
    std::vector<double> data;

    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

inline SpaceTimeMatrix export_space_time(EnsembleSpec spec, double beta, std::int64_t t_max,
                                         SpaceTimeKind kind = SpaceTimeKind::Raw) {
    spec.params.beta = beta;
    spec.t_max = t_max;
    spec.validate();
    detail::require(spec.n_configs == 1, ErrorCode::ValidationError, "space-time export needs n_configs = 1");
    SpaceTimeMatrix m;
    m.rows = static_cast<std::size_t>(t_max) + 1;
    m.cols = spec.n_sites;
    m.kind = kind;
    m.x_star = largest_fixed_point(spec.params).x_star;
    m.data.reserve(m.rows * m.cols);
    LatticeState state = init_random(spec, 0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        if (r > 0) state.advance_pair();
        for (double x : state.cells())
            m.data.push_back(kind == SpaceTimeKind::Raw ? x : static_cast<double>(spin_of(x, m.x_star)));
    }
    return m;
}

/// Whitespace-separated matrix, one row per line.
inline void write_matrix(const std::filesystem::path& path, std::size_t rows, std::size_t cols,
                         std::span<const double> data) {
    auto out = open_output(path);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c) out << ' ';
            out << format_double(data[r * cols + c]);
        }
        out << '\n';
    }
    close_output(out, path);
}

inline void write_space_time(const std::filesystem::path& path, const SpaceTimeMatrix& m, const EnsembleSpec& spec,
                             double beta) {
    write_matrix(path, m.rows, m.cols, m.data);
    write_metadata(path.string() + ".meta",
                   {{"N", std::to_string(spec.n_sites)},
                    {"beta", format_double(beta)},
                    {"epsilon", format_double(spec.epsilon)},
                    {"nu", format_double(spec.params.nu)},
                    {"seed", std::to_string(spec.master_seed)},
                    {"rows", std::to_string(m.rows)},
                    {"kind", m.kind == SpaceTimeKind::Raw ? "raw" : "spins"},
                    {"x_star", format_double(m.x_star)},
                    {"time_unit", "observable_step (row r = micro-time 2r)"}});
}

} // namespace gcml
