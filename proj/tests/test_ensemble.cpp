#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <stdexcept>
#include <thread>
#include <vector>

#include "gcml/ensemble.hpp"
#include "gcml/rng.hpp"

using namespace gcml;

TEST(ForEachOrdered, FoldsInIndexOrderForAnyWorkerCount) {
    for (std::size_t workers : {1u, 2u, 8u}) {
        std::vector<std::size_t> order;
        for_each_ordered(
            100, workers,
            [](std::size_t i) {
                // Later indices finish first to exercise the parking path.
                std::this_thread::sleep_for(std::chrono::microseconds((100 - i) * 20));
                return i * i;
            },
            [&](std::size_t i, std::size_t v) {
                EXPECT_EQ(v, i * i);
                order.push_back(i);
            });
        ASSERT_EQ(order.size(), 100u);
        for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(order[i], i);
    }
}

TEST(ForEachOrdered, FloatingSumIsScheduleIndependent) {
    auto run = [](std::size_t workers) {
        double sum = 0.0;
        for_each_ordered(
            1000, workers, [](std::size_t i) { return 1.0 / (1.0 + static_cast<double>(i) * 0.37); },
            [&](std::size_t, double v) { sum += v; });
        return sum;
    };
    EXPECT_EQ(run(1), run(8));
}

TEST(ForEachOrdered, RethrowsFirstError) {
    std::atomic<int> calls{0};
    EXPECT_THROW(for_each_ordered(
                     50, 4,
                     [&](std::size_t i) {
                         ++calls;
                         if (i == 7) throw std::runtime_error("boom");
                         return 0;
                     },
                     [](std::size_t, int) {}),
                 std::runtime_error);
    EXPECT_GE(calls.load(), 1);
    EXPECT_NO_THROW(for_each_ordered(0, 4, [](std::size_t) { return 0; }, [](std::size_t, int) {}));
}

TEST(MergeSeries, PointwiseMeanInIndexOrder) {
    std::vector<PartialSeries> parts = {
        {2, {1, 2, 3}, {3.0, 3.0, 3.0}},
        {0, {1, 2, 3}, {1.0, 2.0, 3.0}},
        {1, {1, 2, 3}, {2.0, 1.0, 0.0}},
    };
    const auto s = merge_series(parts, SeriesLabel::FlipRate);
    EXPECT_EQ(s.n_configs, 3u);
    EXPECT_EQ(s.times, (std::vector<std::int64_t>{1, 2, 3}));
    EXPECT_EQ(s.values, (std::vector<double>{2.0, 2.0, 2.0}));

    std::reverse(parts.begin(), parts.end());
    EXPECT_EQ(merge_series(parts, SeriesLabel::FlipRate), s);

    parts[1].times = {1, 2, 4};
    try {
        merge_series(parts, SeriesLabel::FlipRate);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
    }
    EXPECT_THROW(merge_series({}, SeriesLabel::FlipRate), Error);
}

TEST(SeriesAccumulator, MatchesMergeSeries) {
    std::vector<PartialSeries> parts;
    SeriesAccumulator acc({1, 2, 3, 4}, SeriesLabel::Persistence);
    for (std::size_t c = 0; c < 5; ++c) {
        std::vector<double> v{0.1 * c, 0.3 / (c + 1), 1.0 - 0.01 * c, 0.7};
        parts.push_back({c, {1, 2, 3, 4}, v});
        acc.add(v);
    }
    EXPECT_EQ(acc.mean(), merge_series(parts, SeriesLabel::Persistence));
    EXPECT_THROW(acc.add({1.0}), Error);
}

TEST(Streams, IndependentOfWorkerAndConfigCount) {
    Stream a(9, 3, StreamKind::InitialCondition), b(9, 3, StreamKind::InitialCondition);
    Stream c(9, 3, StreamKind::Perturbation), d(9, 4, StreamKind::InitialCondition);
    const double va = a.uniform01();
    EXPECT_EQ(va, b.uniform01());
    EXPECT_NE(va, c.uniform01());
    EXPECT_NE(va, d.uniform01());
    for (int i = 0; i < 10000; ++i) {
        const double u = a.uniform01();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        ASSERT_LT(a.below(7), 7u);
    }
}
