#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gcml/error.hpp"
#include "gcml/series.hpp"

namespace gcml {

/// Closed time interval [t_min, t_max] in the series' own time unit.
struct FitWindow {
    double t_min = 0.0;
    double t_max = 0.0;
};

/// Default fit window: the last 1.5 decades of the available times.
inline FitWindow default_window(const ObservableSeries& s, double decades = 1.5) {
    detail::require(!s.times.empty(), ErrorCode::WindowTooSmall, "empty series");
    const double last = static_cast<double>(s.times.back());
    return {last / std::pow(10.0, decades), last};
}

struct PowerLawFit {
    double exponent = 0.0;
    double amplitude = 0.0;
    FitWindow window;
    /// RMS of the natural-log residuals.
    double residual = 0.0;
    std::size_t points = 0;
};

namespace detail {

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double rms = 0.0;
};

/// Ordinary least squares y = a + b x.
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.rms = std::sqrt(ss / n);
    return f;
}

/// Indices of the samples inside the window; every value there must be positive.
inline std::vector<std::size_t> window_indices(const ObservableSeries& s, const FitWindow& w,
                                               std::size_t min_points) {
    detail::require(w.t_min < w.t_max, ErrorCode::ValidationError, "fit window needs t_min < t_max");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto t = static_cast<double>(s.times[i]);
        if (t < w.t_min || t > w.t_max) continue;
        if (!(s.values[i] > 0.0))
            throw Error(ErrorCode::NonPositiveValue,
                        "non-positive value at t=" + std::to_string(s.times[i]) + " inside fit window");
        idx.push_back(i);
    }
    if (idx.size() < min_points)
        throw Error(ErrorCode::WindowTooSmall, "fit window holds " + std::to_string(idx.size()) + " points");
    return idx;
}

} // namespace detail

/// Least-squares line through (ln t, ln value) on the window; exponent = -slope.
inline PowerLawFit fit_power_law(const ObservableSeries& s, std::optional<FitWindow> window = std::nullopt) {
    const FitWindow w = window.value_or(default_window(s));
    const auto idx = detail::window_indices(s, w, 5);
    std::vector<double> x, y;
    x.reserve(idx.size());
    y.reserve(idx.size());
    for (auto i : idx) {
        x.push_back(std::log(static_cast<double>(s.times[i])));
        y.push_back(std::log(s.values[i]));
    }
    const auto line = detail::least_squares(x, y);
    return {-line.slope, std::exp(line.intercept), w, line.rms, idx.size()};
}

struct LocalSlope {
    double t = 0.0; ///< geometric midpoint of the pair
    double exponent = 0.0;
};

/// Effective exponent -dlog(value)/dlog(t) between consecutive log-spaced
/// sample times. Pairs touching a non-positive value are skipped.
inline std::vector<LocalSlope> local_slopes(const ObservableSeries& s, int points_per_decade = 10) {
    detail::require(points_per_decade >= 1, ErrorCode::ValidationError, "points_per_decade must be positive");
    std::vector<std::size_t> picks;
    const double ratio = std::pow(10.0, 1.0 / points_per_decade);
    double target = s.times.empty() ? 0.0 : static_cast<double>(s.times.front());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (static_cast<double>(s.times[i]) >= target) {
            picks.push_back(i);
            target = static_cast<double>(s.times[i]) * ratio;
        }
    }
    std::vector<LocalSlope> out;
    for (std::size_t k = 1; k < picks.size(); ++k) {
        const auto a = picks[k - 1], b = picks[k];
        if (!(s.values[a] > 0.0) || !(s.values[b] > 0.0)) continue;
        const double ta = static_cast<double>(s.times[a]), tb = static_cast<double>(s.times[b]);
        out.push_back({std::sqrt(ta * tb), -std::log(s.values[b] / s.values[a]) / std::log(tb / ta)});
    }
    return out;
}

/// value ~ C t^-theta (1 + c1 t^-gamma).
struct CorrectedFit {
    double theta = 0.0;
    double gamma = 0.0;
    double C = 0.0;
    double c1 = 0.0;
    double linearity_residual = 0.0;
    /// (gamma, residual) for every candidate tried.
    std::vector<std::pair<double, double>> candidates;
};

/// For each candidate gamma, regresses value * t^theta on t^-gamma
/// (intercept C, slope C c1) and keeps the most linear one.
inline CorrectedFit fit_corrected_power_law(const ObservableSeries& s, double theta,
                                            const std::vector<double>& gamma_candidates,
                                            std::optional<FitWindow> window = std::nullopt) {
    detail::require(!gamma_candidates.empty(), ErrorCode::ValidationError, "need at least one gamma candidate");
    detail::require(!s.times.empty(), ErrorCode::WindowTooSmall, "empty series");
    const FitWindow w = window.value_or(
        FitWindow{static_cast<double>(s.times.front()), static_cast<double>(s.times.back())});
    const auto idx = detail::window_indices(s, w, 3);

    std::vector<double> y;
    y.reserve(idx.size());
    for (auto i : idx) y.push_back(s.values[i] * std::pow(static_cast<double>(s.times[i]), theta));

    CorrectedFit best;
    best.theta = theta;
    best.linearity_residual = std::numeric_limits<double>::infinity();
    for (double gamma : gamma_candidates) {
        detail::require(gamma > 0.0, ErrorCode::ValidationError, "gamma candidates must be positive");
        std::vector<double> x;
        x.reserve(idx.size());
        for (auto i : idx) x.push_back(std::pow(static_cast<double>(s.times[i]), -gamma));
        const auto line = detail::least_squares(x, y);
        best.candidates.emplace_back(gamma, line.rms);
        if (line.rms < best.linearity_residual) {
            best.linearity_residual = line.rms;
            best.gamma = gamma;
            best.C = line.intercept;
            best.c1 = line.intercept != 0.0 ? line.slope / line.intercept : 0.0;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Scaling collapse

struct RescaledCurve {
    std::string id;
    double t_c = 0.0;
    double value_at_tc = 0.0;
    /// True when t_c fell outside the measured range and value(t_c) was
    /// extrapolated.
    bool extrapolated = false;
    std::vector<double> t;
    std::vector<double> value;
};

struct CollapseResult {
    /// (decay exponent delta or theta, time-scale exponent z or nu_par).
    std::pair<double, double> exponent_pair;
    std::vector<RescaledCurve> rescaled_curves;
    /// Mean squared spread of log10(value) about the pointwise median on the
    /// common grid; lower is better.
    double quality = 0.0;
    double overlap_lo = 0.0;
    double overlap_hi = 0.0;
};

inline constexpr std::size_t kCollapseGridPoints = 50;

namespace detail {

struct LogCurve {
    std::vector<double> log_t;
    std::vector<double> log_v;
};

/// Natural logs of the leading run of positive samples (a series that has
/// hit zero carries no more scale information).
inline LogCurve positive_prefix(const ObservableSeries& s) {
    LogCurve c;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s.values[i] > 0.0)) break;
        c.log_t.push_back(std::log(static_cast<double>(s.times[i])));
        c.log_v.push_back(std::log(s.values[i]));
    }
    return c;
}

/// Piecewise-linear interpolation of y(x) for x inside [x.front(), x.back()].
inline double interpolate(const std::vector<double>& x, const std::vector<double>& y, double at) {
    if (at <= x.front()) return y.front();
    if (at >= x.back()) return y.back();
    const auto it = std::upper_bound(x.begin(), x.end(), at);
    const auto hi = static_cast<std::size_t>(it - x.begin());
    const auto lo = hi - 1;
    const double f = (at - x[lo]) / (x[hi] - x[lo]);
    return y[lo] + f * (y[hi] - y[lo]);
}

/// log value at log time `at`: linear interpolation inside the measured
/// range, otherwise a least-squares line over the nearest half decade.
inline double log_value_at(const LogCurve& c, double at, bool& extrapolated) {
    extrapolated = at < c.log_t.front() || at > c.log_t.back();
    if (!extrapolated) return interpolate(c.log_t, c.log_v, at);
    const double half_decade = 0.5 * std::log(10.0);
    std::vector<double> x, y;
    if (at > c.log_t.back()) {
        for (std::size_t i = c.log_t.size(); i-- > 0;) {
            if (c.log_t.back() - c.log_t[i] > half_decade && x.size() >= 2) break;
            x.push_back(c.log_t[i]);
            y.push_back(c.log_v[i]);
        }
    } else {
        for (std::size_t i = 0; i < c.log_t.size(); ++i) {
            if (c.log_t[i] - c.log_t.front() > half_decade && x.size() >= 2) break;
            x.push_back(c.log_t[i]);
            y.push_back(c.log_v[i]);
        }
    }
    const auto line = least_squares(x, y);
    return line.intercept + line.slope * at;
}

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct CollapseInput {
    std::string id;
    const ObservableSeries* series;
    double t_c;
};

inline CollapseResult collapse(const std::vector<CollapseInput>& inputs, std::pair<double, double> exponents) {
    detail::require(inputs.size() >= 2, ErrorCode::ValidationError, "collapse needs at least two curves");
    CollapseResult result;
    result.exponent_pair = exponents;

    std::vector<LogCurve> logs;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (const auto& in : inputs) {
        detail::require(in.t_c > 0.0 && std::isfinite(in.t_c), ErrorCode::ValidationError, "t_c must be positive");
        LogCurve c = positive_prefix(*in.series);
        if (c.log_t.size() < 2)
            throw Error(ErrorCode::InsufficientOverlap, "curve '" + in.id + "' has fewer than two positive points");
        const double log_tc = std::log(in.t_c);
        bool extrapolated = false;
        const double log_vc = log_value_at(c, log_tc, extrapolated);

        LogCurve shifted;
        for (std::size_t i = 0; i < c.log_t.size(); ++i) {
            shifted.log_t.push_back(c.log_t[i] - log_tc);
            shifted.log_v.push_back(c.log_v[i] - log_vc);
        }
        if (!extrapolated) {
            // The normalisation point (1, 1) belongs to every in-range curve.
            const auto it = std::lower_bound(shifted.log_t.begin(), shifted.log_t.end(), 0.0);
            const auto pos = it - shifted.log_t.begin();
            if (it != shifted.log_t.end() && *it == 0.0) {
                shifted.log_v[static_cast<std::size_t>(pos)] = 0.0;
            } else {
                shifted.log_t.insert(it, 0.0);
                shifted.log_v.insert(shifted.log_v.begin() + pos, 0.0);
            }
        }
        RescaledCurve rc{in.id, in.t_c, std::exp(log_vc), extrapolated, {}, {}};
        for (std::size_t i = 0; i < shifted.log_t.size(); ++i) {
            rc.t.push_back(std::exp(shifted.log_t[i]));
            rc.value.push_back(std::exp(shifted.log_v[i]));
        }
        lo = std::max(lo, shifted.log_t.front());
        hi = std::min(hi, shifted.log_t.back());
        logs.push_back(std::move(shifted));
        result.rescaled_curves.push_back(std::move(rc));
    }

    result.overlap_lo = std::exp(lo);
    result.overlap_hi = std::exp(hi);
    if (!(hi - lo >= std::log(10.0)))
        throw Error(ErrorCode::InsufficientOverlap, "rescaled curves share less than one decade");

    const double to_log10 = 1.0 / std::log(10.0);
    double total = 0.0;
    std::vector<double> at(logs.size());
    for (std::size_t g = 0; g < kCollapseGridPoints; ++g) {
        const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(kCollapseGridPoints - 1);
        for (std::size_t k = 0; k < logs.size(); ++k) at[k] = interpolate(logs[k].log_t, logs[k].log_v, x) * to_log10;
        const double med = median(at);
        double spread = 0.0;
        for (double v : at) spread += (v - med) * (v - med);
        total += spread / static_cast<double>(at.size());
    }
    result.quality = total / static_cast<double>(kCollapseGridPoints);
    return result;
}

} // namespace detail

/// Rescales each F_N(t) (or P_N(t)) by t_c = N^z and value(t_c) and scores
/// how well the curves coincide.
inline CollapseResult finite_size_collapse(const std::map<std::size_t, ObservableSeries>& series_by_n, double z,
                                           double decay_exponent) {
    detail::require(series_by_n.size() >= 3, ErrorCode::ValidationError, "need at least three system sizes");
    std::vector<detail::CollapseInput> inputs;
    for (const auto& [n, s] : series_by_n)
        inputs.push_back({"N=" + std::to_string(n), &s, std::pow(static_cast<double>(n), z)});
    return detail::collapse(inputs, {decay_exponent, z});
}

/// One off-critical run: signed distance beta - beta_c and its series.
struct OffCriticalSeries {
    double signed_delta = 0.0;
    ObservableSeries series;
};

struct OffCriticalCollapse {
    std::optional<CollapseResult> above; ///< beta > beta_c
    std::optional<CollapseResult> below; ///< beta < beta_c
};

/// Rescales by t_c = |beta - beta_c|^-nu_par; the two sides of the
/// transition are collapsed separately. A side with fewer than two curves is
/// left empty.
inline OffCriticalCollapse off_critical_collapse(const std::vector<OffCriticalSeries>& family, double nu_par,
                                                 double decay_exponent) {
    std::vector<double> mags;
    for (const auto& f : family) {
        detail::require(f.signed_delta != 0.0 && std::isfinite(f.signed_delta), ErrorCode::ValidationError,
                        "off-critical distance must be non-zero");
        mags.push_back(std::fabs(f.signed_delta));
    }
    std::sort(mags.begin(), mags.end());
    mags.erase(std::unique(mags.begin(), mags.end()), mags.end());
    detail::require(mags.size() >= 3, ErrorCode::ValidationError, "need at least three distinct distances");

    OffCriticalCollapse out;
    for (int side : {+1, -1}) {
        std::vector<detail::CollapseInput> inputs;
        for (const auto& f : family) {
            if ((f.signed_delta > 0.0) != (side > 0)) continue;
            const double d = std::fabs(f.signed_delta);
            inputs.push_back({(side > 0 ? "above:" : "below:") + format_double(d), &f.series, std::pow(d, -nu_par)});
        }
        if (inputs.size() < 2) continue;
        (side > 0 ? out.above : out.below) = detail::collapse(inputs, {decay_exponent, nu_par});
    }
    return out;
}

struct CollapseOptimum {
    double best = 0.0;
    double best_quality = 0.0;
    /// (candidate, quality) in grid order.
    std::vector<std::pair<double, double>> table;
};

/// Evaluates quality(candidate) over the grid and returns the minimiser.
template <class QualityFn>
CollapseOptimum optimize_collapse(const std::vector<double>& grid, QualityFn&& quality) {
    detail::require(!grid.empty(), ErrorCode::ValidationError, "empty exponent grid");
    CollapseOptimum out;
    out.best_quality = std::numeric_limits<double>::infinity();
    for (double c : grid) {
        const double q = quality(c);
        out.table.emplace_back(c, q);
        if (q < out.best_quality) {
            out.best_quality = q;
            out.best = c;
        }
    }
    return out;
}

} // namespace gcml
