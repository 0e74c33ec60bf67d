#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gcml/error.hpp"
#include "gcml/lattice.hpp"
#include "gcml/map.hpp"
#include "gcml/observables.hpp"
#include "gcml/series.hpp"

namespace gcml {

/// Every tunable of every experiment. Defaults nu = 7.5, epsilon = 0.4 and
/// beta_c = -0.6773 are the model's reference parameters.
struct Config {
    double nu = 7.5;
    double epsilon = 0.4;
    double beta = -0.6773;
    double beta_c = -0.6773;
    double beta_min = -0.9;
    double beta_max = 0.2;
    double beta_step = 0.01;
    std::size_t n_sites = 1000;
    std::vector<std::size_t> n_sites_list{40, 80, 160, 320, 640, 1280};
    std::vector<double> delta_list{0.005, 0.01, 0.02};
    std::string branches = "both";
    std::size_t n_configs = 10;
    std::int64_t t_max = 1000;
    std::uint64_t seed = 1;
    std::optional<double> init_low;
    std::optional<double> init_high;
    std::size_t workers = 0;
    std::string sampling = "raw";
    std::optional<double> fit_t_min;
    std::optional<double> fit_t_max;
    std::vector<double> gamma_candidates{0.1, 0.2, 0.25, 0.3, 1.0 / 3.0, 0.4, 0.5, 0.6, 0.75, 1.0};
    double delta_exponent = 0.158;
    double theta_exponent = 1.51;
    double z = 1.58;
    Range z_grid{1.0, 2.2, 0.02};
    double fss_tmax_factor = 1.2;
    double fss_tmax_exponent = 2.0;
    double nu_par = 1.73;
    Range nu_par_grid{1.2, 2.4, 0.02};
    std::size_t damage_k = 2;
    double damage_delta = 0.1;
    std::optional<double> damage_fraction;
    std::int64_t damage_field_stride = 1;
    std::int64_t lyap_transient = 10000;
    std::int64_t lyap_steps = 100000;
    double bif_x0 = 0.1;
    int bif_transient = 1000;
    int bif_keep = 100;
    std::size_t bif_sites = 100;
    int bif_coupled_keep = 20;
    std::int64_t snapshot_t_max = 200;
    std::string out_dir = "out";

    /// Ensemble parameters at the given beta.
    EnsembleSpec ensemble(double at_beta, std::size_t sites, std::int64_t steps) const {
        EnsembleSpec s;
        s.n_sites = sites;
        s.n_configs = n_configs;
        s.master_seed = seed;
        s.epsilon = epsilon;
        s.params = MapParams{nu, at_beta};
        s.t_max = steps;
        s.init_low = init_low;
        s.init_high = init_high;
        return s;
    }

    TimeSampling time_sampling() const { return sampling == "log" ? TimeSampling::Log : TimeSampling::Raw; }

    void validate() const;
    friend bool operator==(const Config&, const Config&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    for (std::size_t pos; (pos = s.find(sep)) != std::string_view::npos;) {
        out.push_back(trim(s.substr(0, pos)));
        s.remove_prefix(pos + 1);
    }
    out.push_back(trim(s));
    return out;
}

inline std::uint64_t parse_unsigned(std::string_view s) {
    const auto v = parse_int(s);
    require(v >= 0, ErrorCode::ValidationError, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

struct ConfigField {
    std::string_view key;
    std::function<std::string(const Config&)> get;
    std::function<void(Config&, const std::string&)> set;
};

inline std::string fmt_opt(const std::optional<double>& v) { return v ? format_double(*v) : "auto"; }
inline std::optional<double> parse_opt(const std::string& s) {
    if (s == "auto") return std::nullopt;
    return parse_double(s);
}

template <class T>
std::string fmt_list(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(v[i]);
        else
            out += std::to_string(v[i]);
    }
    return out;
}

inline std::string fmt_range(const Range& r) {
    return format_double(r.lo) + ':' + format_double(r.hi) + ':' + format_double(r.step);
}

inline Range parse_range(const std::string& s) {
    const auto parts = split(s, ':');
    require(parts.size() == 3, ErrorCode::ValidationError, "range must be lo:hi:step");
    return {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
}

#define GCML_DOUBLE(name) \
    {#name, [](const Config& c) { return format_double(c.name); }, [](Config& c, const std::string& v) { c.name = parse_double(v); }}
#define GCML_INT(name) \
    {#name, [](const Config& c) { return std::to_string(c.name); }, \
     [](Config& c, const std::string& v) { c.name = static_cast<decltype(c.name)>(parse_int(v)); }}
#define GCML_UINT(name) \
    {#name, [](const Config& c) { return std::to_string(c.name); }, \
     [](Config& c, const std::string& v) { c.name = static_cast<decltype(c.name)>(parse_unsigned(v)); }}
#define GCML_OPT(name) \
    {#name, [](const Config& c) { return fmt_opt(c.name); }, [](Config& c, const std::string& v) { c.name = parse_opt(v); }}
#define GCML_RANGE(name) \
    {#name, [](const Config& c) { return fmt_range(c.name); }, [](Config& c, const std::string& v) { c.name = parse_range(v); }}
#define GCML_STRING(name) \
    {#name, [](const Config& c) { return c.name; }, [](Config& c, const std::string& v) { c.name = v; }}

/// Key order here is the serialisation order.
inline const std::vector<ConfigField>& config_fields() {
    static const std::vector<ConfigField> fields = {
        GCML_DOUBLE(nu),
        GCML_DOUBLE(epsilon),
        GCML_DOUBLE(beta),
        GCML_DOUBLE(beta_c),
        GCML_DOUBLE(beta_min),
        GCML_DOUBLE(beta_max),
        GCML_DOUBLE(beta_step),
        GCML_UINT(n_sites),
        {"n_sites_list", [](const Config& c) { return fmt_list(c.n_sites_list); },
         [](Config& c, const std::string& v) {
             c.n_sites_list.clear();
             for (const auto& p : split(v, ',')) c.n_sites_list.push_back(parse_unsigned(p));
         }},
        {"delta_list", [](const Config& c) { return fmt_list(c.delta_list); },
         [](Config& c, const std::string& v) {
             c.delta_list.clear();
             for (const auto& p : split(v, ',')) c.delta_list.push_back(parse_double(p));
         }},
        GCML_STRING(branches),
        GCML_UINT(n_configs),
        GCML_INT(t_max),
        GCML_UINT(seed),
        GCML_OPT(init_low),
        GCML_OPT(init_high),
        GCML_UINT(workers),
        GCML_STRING(sampling),
        GCML_OPT(fit_t_min),
        GCML_OPT(fit_t_max),
        {"gamma_candidates", [](const Config& c) { return fmt_list(c.gamma_candidates); },
         [](Config& c, const std::string& v) {
             c.gamma_candidates.clear();
             for (const auto& p : split(v, ',')) c.gamma_candidates.push_back(parse_double(p));
         }},
        GCML_DOUBLE(delta_exponent),
        GCML_DOUBLE(theta_exponent),
        GCML_DOUBLE(z),
        GCML_RANGE(z_grid),
        GCML_DOUBLE(fss_tmax_factor),
        GCML_DOUBLE(fss_tmax_exponent),
        GCML_DOUBLE(nu_par),
        GCML_RANGE(nu_par_grid),
        GCML_UINT(damage_k),
        GCML_DOUBLE(damage_delta),
        GCML_OPT(damage_fraction),
        GCML_INT(damage_field_stride),
        GCML_INT(lyap_transient),
        GCML_INT(lyap_steps),
        GCML_DOUBLE(bif_x0),
        GCML_INT(bif_transient),
        GCML_INT(bif_keep),
        GCML_UINT(bif_sites),
        GCML_INT(bif_coupled_keep),
        GCML_INT(snapshot_t_max),
        GCML_STRING(out_dir),
    };
    return fields;
}

#undef GCML_DOUBLE
#undef GCML_INT
#undef GCML_UINT
#undef GCML_OPT
#undef GCML_RANGE
#undef GCML_STRING

} // namespace detail

/// Sets one key; unknown keys are an error.
inline void set_config_value(Config& c, std::string_view key, const std::string& value) {
    for (const auto& f : detail::config_fields()) {
        if (f.key == key) {
            try {
                f.set(c, value);
            } catch (const Error& e) {
                throw Error(ErrorCode::ValidationError, "key '" + std::string(key) + "': " + e.what());
            }
            return;
        }
    }
    throw Error(ErrorCode::ValidationError, "unknown config key '" + std::string(key) + "'");
}

/// Applies a `key=value` assignment.
inline void apply_assignment(Config& c, std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
        throw Error(ErrorCode::ValidationError, "expected key=value, got '" + std::string(line) + "'");
    set_config_value(c, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
}

/// Parses key=value lines over the defaults. Blank lines and `#` comments
/// are skipped; repeated or unknown keys are errors.
inline Config parse_config(std::string_view text) {
    Config c;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto t = detail::trim(line);
        if (t.empty()) continue;
        const auto key = detail::trim(std::string_view(t).substr(0, t.find('=')));
        if (!seen.insert(key).second) throw Error(ErrorCode::ValidationError, "duplicate config key '" + key + "'");
        apply_assignment(c, t);
    }
    return c;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline Config load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

/// Every key in fixed order, one per line.
inline std::string serialize_config(const Config& c, std::string_view prefix = {}) {
    std::string out;
    for (const auto& f : detail::config_fields()) {
        out += prefix;
        out += f.key;
        out += '=';
        out += f.get(c);
        out += '\n';
    }
    return out;
}

inline void Config::validate() const {
    auto req = [](bool ok, const char* what) { detail::require(ok, ErrorCode::ValidationError, what); };
    req(nu > 0.0, "nu must be positive");
    req(epsilon >= 0.0 && epsilon <= 1.0, "epsilon must lie in [0, 1]");
    req(beta_step > 0.0 && beta_max >= beta_min, "beta range must be lo <= hi with positive step");
    req(n_sites >= 3, "n_sites must be at least 3");
    for (auto n : n_sites_list) req(n >= 3, "every n_sites_list entry must be at least 3");
    for (auto d : delta_list) req(d > 0.0, "delta_list entries must be positive");
    req(branches == "both" || branches == "above" || branches == "below", "branches must be both, above or below");
    req(n_configs >= 1, "n_configs must be at least 1");
    req(t_max >= 1, "t_max must be at least 1");
    req(sampling == "raw" || sampling == "log", "sampling must be raw or log");
    if (init_low && init_high) req(*init_low < *init_high, "init_low must be below init_high");
    req(!gamma_candidates.empty(), "gamma_candidates must not be empty");
    for (auto g : gamma_candidates) req(g > 0.0, "gamma candidates must be positive");
    req(z_grid.step > 0.0 && z_grid.hi >= z_grid.lo, "invalid z_grid");
    req(nu_par_grid.step > 0.0 && nu_par_grid.hi >= nu_par_grid.lo, "invalid nu_par_grid");
    req(fss_tmax_factor >= 0.0, "fss_tmax_factor must be non-negative");
    req(damage_k >= 2, "damage_k must be at least 2");
    if (damage_fraction) req(*damage_fraction > 0.0 && *damage_fraction <= 1.0, "damage_fraction must lie in (0, 1]");
    req(damage_field_stride >= 1, "damage_field_stride must be positive");
    req(lyap_transient >= 0 && lyap_steps >= 1, "lyapunov steps invalid");
    req(bif_transient >= 0 && bif_keep >= 1 && bif_coupled_keep >= 1, "bifurcation steps invalid");
    req(bif_sites >= 3, "bif_sites must be at least 3");
    req(snapshot_t_max >= 1, "snapshot_t_max must be positive");
    req(!out_dir.empty(), "out_dir must not be empty");
}

} // namespace gcml
