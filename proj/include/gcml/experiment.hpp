#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "gcml/config.hpp"
#include "gcml/damage.hpp"
#include "gcml/ensemble.hpp"
#include "gcml/error.hpp"
#include "gcml/lattice.hpp"
#include "gcml/lyapunov.hpp"
#include "gcml/map.hpp"
#include "gcml/observables.hpp"
#include "gcml/scaling.hpp"
#include "gcml/series.hpp"

namespace gcml {

inline constexpr std::string_view kCodeVersion = "gcml 1.0.0";

inline const std::vector<std::string_view>& experiment_kinds() {
    static const std::vector<std::string_view> kinds = {"bifurcation", "critical-decay", "fss", "off-critical",
                                                         "damage",      "lyapunov",       "snapshot"};
    return kinds;
}

/// Everything needed to reproduce a run, plus what it produced.
struct ExperimentRecord {
    std::string kind;
    Config config;
    /// Output files relative to the output directory, in write order.
    std::vector<std::string> outputs;
    double wall_time_s = 0.0;
    std::string code_version{kCodeVersion};
};

inline std::string serialize_record(const ExperimentRecord& r) {
    std::string out = "kind=" + r.kind + "\n";
    out += "code_version=" + r.code_version + "\n";
    out += "wall_time_s=" + format_double(r.wall_time_s) + "\n";
    out += "outputs=";
    for (std::size_t i = 0; i < r.outputs.size(); ++i) out += (i ? ";" : "") + r.outputs[i];
    out += "\n";
    out += serialize_config(r.config, "config.");
    return out;
}

inline ExperimentRecord parse_record(std::string_view text) {
    ExperimentRecord r;
    std::string config_text;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string line = detail::trim(text.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::ValidationError, "bad record line '" + line + "'");
        const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
        if (key == "kind")
            r.kind = value;
        else if (key == "code_version")
            r.code_version = value;
        else if (key == "wall_time_s")
            r.wall_time_s = parse_double(value);
        else if (key == "outputs")
            r.outputs = value.empty() ? std::vector<std::string>{} : detail::split(value, ';');
        else if (key.starts_with("config."))
            config_text += key.substr(7) + "=" + value + "\n";
        else
            throw Error(ErrorCode::ValidationError, "unknown record key '" + key + "'");
    }
    r.config = parse_config(config_text);
    return r;
}

namespace detail {

/// Collects output files as they are written.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::filesystem::path add(const std::string& name) {
        names_.push_back(name);
        return dir_ / name;
    }
    void add_sidecar(const std::string& name) { names_.push_back(name + ".meta"); }
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> names_;
};

inline void write_series_to(OutputSet& out, const std::string& name, const ObservableSeries& s,
                            std::string_view time_unit, Metadata extra = {}) {
    write_series(out.add(name), s, time_unit, std::move(extra));
    out.add_sidecar(name);
}

inline void write_report(OutputSet& out, const std::string& name, const Metadata& kv) {
    write_metadata(out.add(name), kv);
}

inline std::optional<FitWindow> configured_window(const Config& c, const ObservableSeries& s) {
    if (!c.fit_t_min && !c.fit_t_max) return std::nullopt;
    const FitWindow def = default_window(s);
    return FitWindow{c.fit_t_min.value_or(def.t_min), c.fit_t_max.value_or(def.t_max)};
}

inline void write_rescaled(OutputSet& out, const std::string& name, const CollapseResult& r) {
    const auto path = out.add(name);
    auto f = open_output(path);
    f << "t_rescaled,value_rescaled,curve_id\n";
    for (const auto& c : r.rescaled_curves)
        for (std::size_t i = 0; i < c.t.size(); ++i)
            f << format_double(c.t[i]) << ',' << format_double(c.value[i]) << ',' << c.id << '\n';
    close_output(f, path);
}

inline void write_quality_table(OutputSet& out, const std::string& name, const CollapseOptimum& opt) {
    const auto path = out.add(name);
    auto f = open_output(path);
    f << "exponent,quality\n";
    for (const auto& [e, q] : opt.table) f << format_double(e) << ',' << format_double(q) << '\n';
    close_output(f, path);
}

inline void write_local_slopes(OutputSet& out, const std::string& name, const ObservableSeries& s) {
    const auto path = out.add(name);
    auto f = open_output(path);
    f << "t,exponent\n";
    for (const auto& ls : local_slopes(s)) f << format_double(ls.t) << ',' << format_double(ls.exponent) << '\n';
    close_output(f, path);
}

/// Quality at one grid candidate; candidates whose rescaled curves do not
/// overlap enough score +inf instead of aborting the scan.
template <class Fn>
double quality_or_inf(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        if (e.code() != ErrorCode::InsufficientOverlap) throw;
        return std::numeric_limits<double>::infinity();
    }
}

/// Last time index of the leading run of positive values.
inline double last_positive_time(const ObservableSeries& s) {
    double last = 0.0;
    for (std::size_t i = 0; i < s.size() && s.values[i] > 0.0; ++i) last = static_cast<double>(s.times[i]);
    return last;
}

// --- subcommands -----------------------------------------------------------

inline void run_bifurcation(const Config& c, OutputSet& out) {
    const Range betas{c.beta_min, c.beta_max, c.beta_step};
    const BifurcationOptions opt{c.bif_x0, c.bif_transient, c.bif_keep};
    const auto rows = single_map_bifurcation(betas, c.nu, opt);

    {
        const auto path = out.add("single_map_bifurcation.csv");
        auto f = open_output(path);
        f << "beta,x,x_star\n";
        for (const auto& row : rows) {
            const auto xs = format_double(largest_fixed_point(MapParams{c.nu, row.beta}).x_star);
            const auto b = format_double(row.beta);
            for (double x : row.orbit) f << b << ',' << format_double(x) << ',' << xs << '\n';
        }
        close_output(f, path);
    }
    {
        const auto path = out.add("fixed_points.csv");
        auto f = open_output(path);
        f << "beta,x_star,residual,derivative,stable,n_fixed_points\n";
        for (double beta : betas.points()) {
            const MapParams p{c.nu, beta};
            const auto fp = largest_fixed_point(p);
            f << format_double(beta) << ',' << format_double(fp.x_star) << ',' << format_double(fp.residual) << ','
              << format_double(fp.derivative_at) << ',' << (fp.stable ? 1 : 0) << ','
              << find_all_fixed_points(p).size() << '\n';
        }
        close_output(f, path);
    }
    {
        // Coupled lattice: configuration 0 at every beta, all sites for
        // bif_coupled_keep micro-steps after the transient.
        const auto beta_points = betas.points();
        const auto path = out.add("coupled_bifurcation.csv");
        auto f = open_output(path);
        f << "beta,micro_time,site,x,x_star\n";
        for_each_ordered(
            beta_points.size(), c.workers,
            [&](std::size_t k) {
                Config one = c;
                one.n_configs = 1;
                const auto spec = one.ensemble(beta_points[k], c.bif_sites, 1);
                LatticeState s = init_random(spec, 0);
                for (int t = 0; t < c.bif_transient; ++t) s.advance();
                const auto xs = format_double(largest_fixed_point(spec.params).x_star);
                const auto b = format_double(beta_points[k]);
                std::string text;
                for (int t = 0; t < c.bif_coupled_keep; ++t) {
                    s.advance();
                    for (std::size_t i = 0; i < s.size(); ++i)
                        text += b + ',' + std::to_string(s.micro_time()) + ',' + std::to_string(i) + ',' +
                                format_double(s.cells()[i]) + ',' + xs + '\n';
                }
                return text;
            },
            [&](std::size_t, std::string&& text) { f << text; });
        close_output(f, path);
    }
}

/// Power-law fit on the configured (or default) window, with the upper end
/// pulled back to the last positive sample. A series that has died out
/// too early to fit is reported rather than treated as an error.
inline void fit_into_report(const Config& c, const ObservableSeries& s, const std::string& name, Metadata& report) {
    FitWindow w = configured_window(c, s).value_or(default_window(s));
    const double last_pos = last_positive_time(s);
    const bool clipped = last_pos < w.t_max;
    if (clipped) w.t_max = last_pos;
    try {
        const auto fit = fit_power_law(s, w);
        report.insert(report.end(), {{name, format_double(fit.exponent)},
                                     {name + "_amplitude", format_double(fit.amplitude)},
                                     {name + "_window_min", format_double(fit.window.t_min)},
                                     {name + "_window_max", format_double(fit.window.t_max)},
                                     {name + "_window_clipped", clipped ? "1" : "0"},
                                     {name + "_points", std::to_string(fit.points)},
                                     {name + "_residual", format_double(fit.residual)}});
    } catch (const Error& e) {
        if (e.code() != ErrorCode::WindowTooSmall && e.code() != ErrorCode::ValidationError &&
            e.code() != ErrorCode::NonPositiveValue)
            throw;
        report.push_back({name, "unavailable"});
        report.push_back({name + "_reason", std::string(to_string(e.code()))});
    }
}

inline void run_critical_decay(const Config& c, OutputSet& out) {
    const auto spec = c.ensemble(c.beta, c.n_sites, c.t_max);
    const auto run = run_observables(spec, c.beta, {c.time_sampling(), c.workers});
    write_series_to(out, "F.csv", run.flip_rate, "observable_step", {{"beta", format_double(c.beta)}});
    write_series_to(out, "P.csv", run.persistence, "observable_step", {{"beta", format_double(c.beta)}});
    write_local_slopes(out, "local_slopes_F.csv", run.flip_rate);
    write_local_slopes(out, "local_slopes_P.csv", run.persistence);

    Metadata report{{"beta", format_double(c.beta)},
                    {"n_sites", std::to_string(c.n_sites)},
                    {"n_configs", std::to_string(c.n_configs)},
                    {"t_max", std::to_string(c.t_max)}};
    fit_into_report(c, run.flip_rate, "delta", report);
    fit_into_report(c, run.persistence, "theta", report);

    // Corrected form for P over its full positive range, with theta held at
    // the configured value.
    const double last_pos = last_positive_time(run.persistence);
    const auto first = static_cast<double>(run.persistence.times.front());
    try {
        const auto corr = fit_corrected_power_law(run.persistence, c.theta_exponent, c.gamma_candidates,
                                                  FitWindow{first, last_pos});
        report.insert(report.end(), {{"corrected_theta", format_double(corr.theta)},
                                     {"corrected_gamma", format_double(corr.gamma)},
                                     {"corrected_C", format_double(corr.C)},
                                     {"corrected_c1", format_double(corr.c1)},
                                     {"corrected_window_max", format_double(last_pos)},
                                     {"corrected_residual", format_double(corr.linearity_residual)}});
    } catch (const Error& e) {
        if (e.code() != ErrorCode::WindowTooSmall && e.code() != ErrorCode::ValidationError) throw;
        report.push_back({"corrected_theta", "unavailable"});
    }
    write_report(out, "fit_report.txt", report);
}

inline std::int64_t fss_steps(const Config& c, std::size_t n) {
    if (c.fss_tmax_factor <= 0.0) return c.t_max;
    return static_cast<std::int64_t>(std::ceil(c.fss_tmax_factor * std::pow(static_cast<double>(n), c.fss_tmax_exponent)));
}

inline void run_fss(const Config& c, OutputSet& out) {
    std::map<std::size_t, ObservableSeries> flip, pers;
    for (std::size_t n : c.n_sites_list) {
        const auto steps = fss_steps(c, n);
        const auto run = run_observables(c.ensemble(c.beta_c, n, steps), c.beta_c, {c.time_sampling(), c.workers});
        const Metadata meta{{"beta", format_double(c.beta_c)}, {"N", std::to_string(n)}};
        write_series_to(out, "F_N" + std::to_string(n) + ".csv", run.flip_rate, "observable_step", meta);
        write_series_to(out, "P_N" + std::to_string(n) + ".csv", run.persistence, "observable_step", meta);
        flip.emplace(n, run.flip_rate);
        pers.emplace(n, run.persistence);
    }
    Metadata report{{"beta_c", format_double(c.beta_c)}, {"z", format_double(c.z)}};
    for (auto [name, family, decay] :
         {std::tuple{"F", &flip, c.delta_exponent}, std::tuple{"P", &pers, c.theta_exponent}}) {
        const auto at_z = finite_size_collapse(*family, c.z, decay);
        write_rescaled(out, std::string("collapse_") + name + ".csv", at_z);
        const auto opt = optimize_collapse(c.z_grid.points(),
                                           [&](double z) {
            return quality_or_inf([&] { return finite_size_collapse(*family, z, decay).quality; });
        });
        write_quality_table(out, std::string("quality_") + name + ".csv", opt);
        report.push_back({std::string("quality_") + name + "_at_z", format_double(at_z.quality)});
        report.push_back({std::string("best_z_") + name, format_double(opt.best)});
        report.push_back({std::string("best_quality_") + name, format_double(opt.best_quality)});
    }
    write_report(out, "fss_report.txt", report);
}

inline std::vector<int> configured_sides(const Config& c) {
    if (c.branches == "above") return {+1};
    if (c.branches == "below") return {-1};
    return {+1, -1};
}

inline void run_off_critical(const Config& c, OutputSet& out) {
    std::vector<OffCriticalSeries> flip, pers;
    for (int side : configured_sides(c)) {
        for (double d : c.delta_list) {
            const double beta = c.beta_c + side * d;
            const auto run = run_observables(c.ensemble(beta, c.n_sites, c.t_max), beta, {c.time_sampling(), c.workers});
            const std::string tag = std::string(side > 0 ? "above_" : "below_") + format_double(d);
            const Metadata meta{{"beta", format_double(beta)}, {"delta", format_double(d)}};
            write_series_to(out, "F_" + tag + ".csv", run.flip_rate, "observable_step", meta);
            write_series_to(out, "P_" + tag + ".csv", run.persistence, "observable_step", meta);
            flip.push_back({side * d, run.flip_rate});
            pers.push_back({side * d, run.persistence});
        }
    }
    Metadata report{{"beta_c", format_double(c.beta_c)}, {"nu_par", format_double(c.nu_par)}};
    for (auto [name, family, decay] :
         {std::tuple{"F", &flip, c.delta_exponent}, std::tuple{"P", &pers, c.theta_exponent}}) {
        const auto at = off_critical_collapse(*family, c.nu_par, decay);
        for (auto [branch, result] : {std::pair{"above", &at.above}, std::pair{"below", &at.below}}) {
            if (!*result) continue;
            const std::string tag = std::string(name) + "_" + branch;
            write_rescaled(out, "collapse_" + tag + ".csv", **result);
            const bool above = std::string_view(branch) == "above";
            const auto opt = optimize_collapse(c.nu_par_grid.points(), [&](double nu_par) {
                return quality_or_inf([&] {
                    const auto r = off_critical_collapse(*family, nu_par, decay);
                    return above ? r.above->quality : r.below->quality;
                });
            });
            write_quality_table(out, "quality_" + tag + ".csv", opt);
            report.push_back({"quality_" + tag + "_at_nu_par", format_double((*result)->quality)});
            report.push_back({"best_nu_par_" + tag, format_double(opt.best)});
            report.push_back({"best_quality_" + tag, format_double(opt.best_quality)});
        }
    }
    write_report(out, "off_critical_report.txt", report);
}

inline void run_damage_experiment(const Config& c, OutputSet& out) {
    const auto spec = c.ensemble(c.beta, c.n_sites, c.t_max);
    DamageOptions opt;
    opt.k = c.damage_k;
    opt.fraction = c.damage_fraction;
    opt.delta = c.damage_delta;
    opt.t_max = c.t_max;
    opt.record_field = c.damage_k == 2;
    opt.field_stride = c.damage_field_stride;
    opt.workers = c.workers;
    const auto run = run_damage(spec, c.beta, opt);
    const Metadata meta{{"beta", format_double(c.beta)}, {"k", std::to_string(c.damage_k)},
                        {"delta", format_double(c.damage_delta)}};
    write_series_to(out, "d.csv", run.fine, "micro_step", meta);
    write_series_to(out, "D.csv", run.coarse, "micro_step", meta);
    {
        const auto path = out.add("damage_final.csv");
        auto f = open_output(path);
        f << "config,d_final,D_final\n";
        for (std::size_t i = 0; i < run.final_fine.size(); ++i)
            f << i << ',' << format_double(run.final_fine[i]) << ',' << format_double(run.final_coarse[i]) << '\n';
        close_output(f, path);
    }
    if (run.field) {
        const auto path = out.add("damage_field.txt");
        write_matrix(path, run.field->rows, run.field->cols, run.field->data);
        write_metadata(path.string() + ".meta", {{"N", std::to_string(c.n_sites)},
                                                 {"beta", format_double(c.beta)},
                                                 {"epsilon", format_double(c.epsilon)},
                                                 {"nu", format_double(c.nu)},
                                                 {"seed", std::to_string(c.seed)},
                                                 {"config", "0"},
                                                 {"rows", std::to_string(run.field->rows)},
                                                 {"time_unit", "micro_step"},
                                                 {"row_stride", std::to_string(run.field->stride)}});
        out.add_sidecar("damage_field.txt");
    }
}

inline void run_lyapunov_sweep(const Config& c, OutputSet& out) {
    const auto path = out.add("lyapunov.csv");
    auto f = open_output(path);
    f << "beta,lambda_max,stderr\n";
    for (double beta : Range{c.beta_min, c.beta_max, c.beta_step}.points()) {
        const auto est = largest_lyapunov(c.ensemble(beta, c.n_sites, 1), beta,
                                          {c.lyap_transient, c.lyap_steps, c.workers});
        f << format_double(beta) << ',' << format_double(est.mean) << ',' << format_double(est.standard_error) << '\n';
    }
    close_output(f, path);
}

inline void run_snapshot(const Config& c, OutputSet& out) {
    Config one = c;
    one.n_configs = 1;
    const auto spec = one.ensemble(c.beta, c.n_sites, c.snapshot_t_max);
    for (auto kind : {SpaceTimeKind::Raw, SpaceTimeKind::Spins}) {
        const std::string name = kind == SpaceTimeKind::Raw ? "space_time_raw.txt" : "space_time_spins.txt";
        write_space_time(out.add(name), export_space_time(spec, c.beta, c.snapshot_t_max, kind), spec, c.beta);
        out.add_sidecar(name);
    }
    LatticeState s = init_random(spec, 0);
    for (std::int64_t t = 0; t < c.snapshot_t_max; ++t) s.advance_pair();
    write_spatial_profile(out.add("profile.csv"), export_spatial_profile(s, largest_fixed_point(spec.params).x_star));
    out.add_sidecar("profile.csv");
}

} // namespace detail

/// Runs one experiment kind, writes its outputs and `record.txt` into out_dir.
inline ExperimentRecord run_experiment(std::string_view kind, const Config& config,
                                       const std::filesystem::path& out_dir) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create '" + out_dir.string() + "': " + ec.message());

    detail::OutputSet out(out_dir);
    if (kind == "bifurcation")
        detail::run_bifurcation(config, out);
    else if (kind == "critical-decay")
        detail::run_critical_decay(config, out);
    else if (kind == "fss")
        detail::run_fss(config, out);
    else if (kind == "off-critical")
        detail::run_off_critical(config, out);
    else if (kind == "damage")
        detail::run_damage_experiment(config, out);
    else if (kind == "lyapunov")
        detail::run_lyapunov_sweep(config, out);
    else if (kind == "snapshot")
        detail::run_snapshot(config, out);
    else
        throw Error(ErrorCode::ValidationError, "unknown experiment '" + std::string(kind) + "'");

    ExperimentRecord record;
    record.kind = std::string(kind);
    record.config = config;
    record.outputs = out.names();
    record.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto path = out_dir / "record.txt";
    auto f = open_output(path);
    f << serialize_record(record);
    close_output(f, path);
    return record;
}

/// Re-runs a recorded experiment into out_dir.
inline ExperimentRecord replay(const ExperimentRecord& record, const std::filesystem::path& out_dir) {
    return run_experiment(record.kind, record.config, out_dir);
}

} // namespace gcml
