#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "gcml/ensemble.hpp"
#include "gcml/error.hpp"
#include "gcml/lattice.hpp"
#include "gcml/observables.hpp"
#include "gcml/rng.hpp"
#include "gcml/series.hpp"

namespace gcml {

/// k copies of one lattice; replica 0 is the unperturbed reference.
class ReplicaSet {
public:
    explicit ReplicaSet(std::vector<LatticeState> replicas) : replicas_(std::move(replicas)) {
        if (replicas_.size() < 2) throw Error(ErrorCode::InvalidK, "need at least two replicas");
        const auto& r0 = replicas_.front();
        for (const auto& r : replicas_)
            detail::require(r.size() == r0.size() && r.epsilon() == r0.epsilon() && r.params() == r0.params(),
                            ErrorCode::ValidationError, "replicas must share size and parameters");
    }

    std::size_t k() const noexcept { return replicas_.size(); }
    std::size_t n_pairs() const noexcept { return k() * (k() - 1) / 2; }
    std::size_t n_sites() const noexcept { return replicas_.front().size(); }
    const LatticeState& operator[](std::size_t i) const { return replicas_.at(i); }
    LatticeState& operator[](std::size_t i) { return replicas_.at(i); }
    const std::vector<LatticeState>& replicas() const noexcept { return replicas_; }

    void advance() {
        for (auto& r : replicas_) r.advance();
    }

private:
    std::vector<LatticeState> replicas_;
};

inline ReplicaSet make_replicas(const LatticeState& base, std::size_t k) {
    if (k < 2) throw Error(ErrorCode::InvalidK, "k must be at least 2");
    return ReplicaSet(std::vector<LatticeState>(k, base));
}

/// Adds delta at `sites` in every non-reference replica.
inline void perturb(ReplicaSet& rs, const std::vector<std::size_t>& sites, double delta) {
    detail::require(!sites.empty(), ErrorCode::ValidationError, "perturbation needs at least one site");
    for (std::size_t i : sites)
        if (i >= rs.n_sites()) throw Error(ErrorCode::IndexOutOfRange, "perturbation site out of range");
    for (std::size_t r = 1; r < rs.k(); ++r)
        for (std::size_t i : sites) rs[r].cells()[i] += delta;
}

/// round(p N) distinct sites, drawn by partial Fisher-Yates shuffle.
inline std::vector<std::size_t> choose_fraction_sites(std::size_t n_sites, double fraction, Stream& rng) {
    detail::require(fraction > 0.0 && fraction <= 1.0, ErrorCode::ValidationError,
                    "perturbation fraction must lie in (0, 1]");
    const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n_sites)));
    detail::require(count >= 1, ErrorCode::ValidationError, "perturbation fraction selects no sites");
    std::vector<std::size_t> idx(n_sites);
    for (std::size_t i = 0; i < n_sites; ++i) idx[i] = i;
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(n_sites - i)]);
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// d(t): site-summed absolute difference averaged over replica pairs.
inline double damage_fine(const ReplicaSet& rs) {
    double total = 0.0;
    for (std::size_t l = 0; l + 1 < rs.k(); ++l)
        for (std::size_t m = l + 1; m < rs.k(); ++m) {
            const auto a = rs[l].cells();
            const auto b = rs[m].cells();
            double sum = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) sum += std::fabs(a[i] - b[i]);
            total += sum;
        }
    return total / static_cast<double>(rs.n_pairs());
}

/// D(t): as d(t) but on coarse-grained spins; each disagreeing site adds 2.
inline double damage_coarse(const ReplicaSet& rs, double x_star) {
    std::int64_t total = 0;
    for (std::size_t l = 0; l + 1 < rs.k(); ++l)
        for (std::size_t m = l + 1; m < rs.k(); ++m) {
            const auto a = rs[l].cells();
            const auto b = rs[m].cells();
            for (std::size_t i = 0; i < a.size(); ++i)
                total += 2 * (spin_of(a[i], x_star) != spin_of(b[i], x_star));
        }
    return static_cast<double>(total) / static_cast<double>(rs.n_pairs());
}

struct DamageOptions {
    std::size_t k = 2;
    /// Fraction of sites perturbed in each non-reference replica; unset means
    /// the single central site N/2.
    std::optional<double> fraction;
    double delta = 0.1;
    /// Micro-steps to evolve.
    std::int64_t t_max = 1000;
    /// Record |x_i - y_i| for configuration 0 (k = 2 only), every `field_stride` micro-steps.
    bool record_field = false;
    std::int64_t field_stride = 1;
    std::size_t workers = 0;
};

struct DamageField {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::int64_t stride = 1;
    std::vector<double> data;
};

struct DamageRun {
    /// d and D at micro-steps 0..t_max, ensemble-averaged.
    ObservableSeries fine;
    ObservableSeries coarse;
    std::vector<double> final_fine;
    std::vector<double> final_coarse;
    std::optional<DamageField> field;
};

namespace detail {

struct DamageConfigResult {
    std::vector<double> fine;
    std::vector<double> coarse;
    std::optional<DamageField> field;
};

inline void append_field_row(DamageField& f, const ReplicaSet& rs) {
    const auto a = rs[0].cells();
    const auto b = rs[1].cells();
    for (std::size_t i = 0; i < a.size(); ++i) f.data.push_back(std::fabs(a[i] - b[i]));
    ++f.rows;
}

inline DamageConfigResult run_damage_config(const EnsembleSpec& spec, std::size_t c, double x_star,
                                            const DamageOptions& opt) {
    ReplicaSet rs = make_replicas(init_random(spec, c), opt.k);
    if (opt.fraction) {
        Stream rng(spec.master_seed, c, StreamKind::Perturbation);
        for (std::size_t r = 1; r < rs.k(); ++r) {
            const auto sites = choose_fraction_sites(rs.n_sites(), *opt.fraction, rng);
            for (std::size_t i : sites) rs[r].cells()[i] += opt.delta;
        }
    } else {
        perturb(rs, {rs.n_sites() / 2}, opt.delta);
    }

    DamageConfigResult out;
    const auto len = static_cast<std::size_t>(opt.t_max) + 1;
    out.fine.reserve(len);
    out.coarse.reserve(len);
    const bool want_field = opt.record_field && c == 0 && opt.k == 2;
    if (want_field) out.field = DamageField{0, rs.n_sites(), opt.field_stride, {}};

    for (std::int64_t t = 0; t <= opt.t_max; ++t) {
        if (t > 0) rs.advance();
        out.fine.push_back(damage_fine(rs));
        out.coarse.push_back(damage_coarse(rs, x_star));
        if (want_field && t % opt.field_stride == 0) append_field_row(*out.field, rs);
    }
    return out;
}

} // namespace detail

/// Evolves perturbed replicas with the plain update and records d(t) and
/// D(t) every micro-step.
inline DamageRun run_damage(EnsembleSpec spec, double beta, const DamageOptions& opt) {
    spec.params.beta = beta;
    spec.validate();
    if (opt.k < 2) throw Error(ErrorCode::InvalidK, "k must be at least 2");
    detail::require(opt.t_max >= 0, ErrorCode::ValidationError, "t_max must be non-negative");
    detail::require(opt.field_stride >= 1, ErrorCode::ValidationError, "field_stride must be positive");
    detail::require(std::isfinite(opt.delta), ErrorCode::ValidationError, "delta must be finite");
    const double x_star = largest_fixed_point(spec.params).x_star;

    std::vector<std::int64_t> times(static_cast<std::size_t>(opt.t_max) + 1);
    for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<std::int64_t>(i);
    SeriesAccumulator fine(times, SeriesLabel::DamageFine), coarse(times, SeriesLabel::DamageCoarse);

    DamageRun run;
    run.final_fine.resize(spec.n_configs);
    run.final_coarse.resize(spec.n_configs);
    for_each_ordered(
        spec.n_configs, opt.workers,
        [&](std::size_t c) { return detail::run_damage_config(spec, c, x_star, opt); },
        [&](std::size_t c, detail::DamageConfigResult&& r) {
            fine.add(r.fine);
            coarse.add(r.coarse);
            run.final_fine[c] = r.fine.back();
            run.final_coarse[c] = r.coarse.back();
            if (r.field) run.field = std::move(r.field);
        });
    run.fine = fine.mean();
    run.coarse = coarse.mean();
    return run;
}

} // namespace gcml
