#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gcml/error.hpp"

namespace gcml {

enum class SeriesLabel { FlipRate, Persistence, DamageFine, DamageCoarse };

constexpr std::string_view to_string(SeriesLabel label) noexcept {
    switch (label) {
    case SeriesLabel::FlipRate: return "flip_rate";
    case SeriesLabel::Persistence: return "persistence";
    case SeriesLabel::DamageFine: return "damage_fine";
    case SeriesLabel::DamageCoarse: return "damage_coarse";
    }
    return "unknown";
}

inline SeriesLabel parse_series_label(std::string_view s) {
    for (auto l : {SeriesLabel::FlipRate, SeriesLabel::Persistence, SeriesLabel::DamageFine,
                   SeriesLabel::DamageCoarse})
        if (to_string(l) == s) return l;
    throw Error(ErrorCode::ValidationError, "unknown series label '" + std::string(s) + "'");
}

/// Ensemble-averaged observable as a function of time.
struct ObservableSeries {
    std::vector<std::int64_t> times;
    std::vector<double> values;
    std::size_t n_configs = 0;
    SeriesLabel label = SeriesLabel::FlipRate;

    std::size_t size() const noexcept { return times.size(); }

    void validate() const {
        detail::require(times.size() == values.size(), ErrorCode::LengthMismatch,
                        "series times and values differ in length");
        for (std::size_t i = 1; i < times.size(); ++i)
            detail::require(times[i] > times[i - 1], ErrorCode::ValidationError,
                            "series times must be strictly increasing");
        if (label == SeriesLabel::FlipRate || label == SeriesLabel::Persistence)
            for (double v : values)
                detail::require(v >= 0.0 && v <= 1.0, ErrorCode::ValidationError,
                                "fraction-valued series must lie in [0, 1]");
    }

    friend bool operator==(const ObservableSeries&, const ObservableSeries&) = default;
};

// ---------------------------------------------------------------------------
// Text formatting shared by every writer. Shortest round-trip representation,
// so output bytes depend only on the values.

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error(ErrorCode::ValidationError, "not a number: '" + std::string(s) + "'");
    return v;
}

inline std::int64_t parse_int(std::string_view s) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error(ErrorCode::ValidationError, "not an integer: '" + std::string(s) + "'");
    return v;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    return out;
}

inline void close_output(std::ofstream& out, const std::filesystem::path& path) {
    out.close();
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

/// Ordered key=value metadata, one pair per line.
using Metadata = std::vector<std::pair<std::string, std::string>>;

inline void write_metadata(const std::filesystem::path& path, const Metadata& meta) {
    auto out = open_output(path);
    for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
    close_output(out, path);
}

inline void write_series_csv(const std::filesystem::path& path, const ObservableSeries& s) {
    s.validate();
    auto out = open_output(path);
    out << "t,value,n_configs,label\n";
    const auto label = to_string(s.label);
    for (std::size_t i = 0; i < s.size(); ++i)
        out << s.times[i] << ',' << format_double(s.values[i]) << ',' << s.n_configs << ',' << label
            << '\n';
    close_output(out, path);
}

/// Series CSV plus a `<path>.meta` sidecar naming the time unit.
inline void write_series(const std::filesystem::path& path, const ObservableSeries& s,
                         std::string_view time_unit, Metadata extra = {}) {
    write_series_csv(path, s);
    Metadata meta{{"label", std::string(to_string(s.label))},
                  {"time_unit", std::string(time_unit)},
                  {"n_configs", std::to_string(s.n_configs)}};
    meta.insert(meta.end(), extra.begin(), extra.end());
    write_metadata(path.string() + ".meta", meta);
}

inline ObservableSeries read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "t,value,n_configs,label")
        throw Error(ErrorCode::ValidationError, "bad series header in '" + path.string() + "'");
    ObservableSeries s;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string_view> f;
        std::string_view rest(line);
        for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos;) {
            f.push_back(rest.substr(0, pos));
            rest.remove_prefix(pos + 1);
        }
        f.push_back(rest);
        if (f.size() != 4) throw Error(ErrorCode::ValidationError, "bad series row: " + line);
        s.times.push_back(parse_int(f[0]));
        s.values.push_back(parse_double(f[1]));
        const auto n = static_cast<std::size_t>(parse_int(f[2]));
        const auto label = parse_series_label(f[3]);
        if (first) {
            s.n_configs = n;
            s.label = label;
            first = false;
        }
    }
    s.validate();
    return s;
}

} // namespace gcml
