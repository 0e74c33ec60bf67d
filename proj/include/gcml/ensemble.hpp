#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include "gcml/error.hpp"
#include "gcml/series.hpp"

namespace gcml {

/// 0 means "all hardware threads".
inline std::size_t resolve_workers(std::size_t requested) {
    if (requested > 0) return requested;
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs compute(i) for i in [0, n) on up to `workers` threads and hands each
/// result to fold(i, result) strictly in increasing i, one at a time.
///
/// Results finishing out of order are parked until their predecessors have
/// been folded, so any floating-point reduction done inside fold sees the
/// same operation order regardless of scheduling. The first exception thrown
/// by compute or fold stops the run and is rethrown on the caller.
template <class Compute, class Fold>
void for_each_ordered(std::size_t n, std::size_t workers, Compute&& compute, Fold&& fold) {
    workers = std::min(resolve_workers(workers), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fold(i, compute(i));
        return;
    }

    using Result = decltype(compute(std::size_t{}));
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::map<std::size_t, Result> parked;
    std::size_t next_fold = 0;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            if (failed.load(std::memory_order_relaxed)) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                Result r = compute(i);
                std::lock_guard lock(mu);
                parked.emplace(i, std::move(r));
                for (auto it = parked.find(next_fold); it != parked.end(); it = parked.find(next_fold)) {
                    fold(next_fold, std::move(it->second));
                    parked.erase(it);
                    ++next_fold;
                }
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (error) std::rethrow_exception(error);
}

/// One configuration's contribution before ensemble averaging.
struct PartialSeries {
    std::size_t config_index = 0;
    std::vector<std::int64_t> times;
    std::vector<double> values;
};

/// Pointwise arithmetic mean of per-configuration series, summed in
/// configuration-index order.
inline ObservableSeries merge_series(std::vector<PartialSeries> partials, SeriesLabel label) {
    detail::require(!partials.empty(), ErrorCode::ValidationError, "merge_series needs partials");
    std::sort(partials.begin(), partials.end(),
              [](const PartialSeries& a, const PartialSeries& b) { return a.config_index < b.config_index; });
    const auto& grid = partials.front().times;
    ObservableSeries out;
    out.times = grid;
    out.values.assign(grid.size(), 0.0);
    out.label = label;
    out.n_configs = partials.size();
    for (const auto& p : partials) {
        if (p.times != grid || p.values.size() != grid.size())
            throw Error(ErrorCode::GridMismatch, "partial series use different time grids");
        for (std::size_t i = 0; i < grid.size(); ++i) out.values[i] += p.values[i];
    }
    const double n = static_cast<double>(partials.size());
    for (auto& v : out.values) v /= n;
    return out;
}

/// Streaming form of merge_series for use inside for_each_ordered's fold.
class SeriesAccumulator {
public:
    SeriesAccumulator(std::vector<std::int64_t> times, SeriesLabel label)
        : times_(std::move(times)), sums_(times_.size(), 0.0), label_(label) {}

    void add(const std::vector<double>& values) {
        if (values.size() != sums_.size())
            throw Error(ErrorCode::GridMismatch, "partial series use different time grids");
        for (std::size_t i = 0; i < sums_.size(); ++i) sums_[i] += values[i];
        ++count_;
    }

    ObservableSeries mean() const {
        ObservableSeries out{times_, sums_, count_, label_};
        const double n = static_cast<double>(count_);
        for (auto& v : out.values) v /= n;
        return out;
    }

private:
    std::vector<std::int64_t> times_;
    std::vector<double> sums_;
    SeriesLabel label_;
    std::size_t count_ = 0;
};

} // namespace gcml
