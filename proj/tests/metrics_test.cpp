#include "lpn/metrics.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "test_util.hpp"

using lpn::Box;
using lpn::CountingReport;
using lpn::Proposal;
using lpn::RecallCurve;
using lpn_test::oracle_greedy_recall;

namespace {

// Exhaustive optimal one-to-one assignment (permutations over ground truth).
double oracle_optimal_recall(const std::vector<Proposal>& props, const std::vector<Box>& gts,
                             double iou_t) {
    if (gts.empty()) return 1.0;
    std::vector<std::size_t> gt_idx(gts.size());
    std::iota(gt_idx.begin(), gt_idx.end(), std::size_t{0});
    int best_hits = 0;
    std::vector<std::size_t> perm(props.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    // For each GT permutation, greedily give each GT its first available
    // proposal; permutations make the search exhaustive at these tiny sizes.
    std::vector<std::size_t> order = gt_idx;
    do {
        std::vector<bool> used(props.size(), false);
        int hits = 0;
        for (std::size_t j : order) {
            for (std::size_t k = 0; k < props.size(); ++k) {
                if (used[k]) continue;
                if (lpn_test::oracle_iou(props[k].box, gts[j]) >= iou_t) {
                    used[k] = true;
                    ++hits;
                    break;
                }
            }
        }
        best_hits = std::max(best_hits, hits);
    } while (std::next_permutation(order.begin(), order.end()));
    return static_cast<double>(best_hits) / static_cast<double>(gts.size());
}

std::vector<Proposal> proposals_from_boxes(const std::vector<Box>& boxes, double score = 1.0) {
    std::vector<Proposal> props;
    int idx = 0;
    for (const Box& b : boxes) props.push_back({b, score, idx++});
    return props;
}

}  // namespace

TEST(MetricsRecall, PerfectProposalsGiveFullRecall) {
    std::mt19937_64 rng(3);
    std::vector<Box> gts;
    for (int i = 0; i < 6; ++i) gts.push_back(lpn_test::random_box(rng));
    const auto props = proposals_from_boxes(gts);
    for (double t : lpn::default_iou_thresholds()) {
        EXPECT_DOUBLE_EQ(lpn::recall_at_iou(props, gts, t), 1.0);
    }
    const RecallCurve curve = lpn::average_recall(props, gts);
    EXPECT_DOUBLE_EQ(curve.ar, 1.0);
}

TEST(MetricsRecall, NoProposalsGiveZeroRecall) {
    const std::vector<Box> gts = {{0, 0, 10, 10}};
    EXPECT_DOUBLE_EQ(lpn::recall_at_iou({}, gts, 0.5), 0.0);
}

TEST(MetricsRecall, EmptyGroundTruthIsVacuouslyOne) {
    const auto props = proposals_from_boxes({{0, 0, 10, 10}});
    EXPECT_DOUBLE_EQ(lpn::recall_at_iou(props, {}, 0.5), 1.0);
}

TEST(MetricsRecall, CraftedInstanceMatchesOptimalAssignment) {
    // 5 proposals x 3 ground truths, built so greedy and optimal agree.
    const std::vector<Box> gts = {{0, 0, 10, 10}, {40, 0, 50, 10}, {80, 0, 90, 10}};
    std::vector<Proposal> props = {
        {{0, 0, 10, 9}, 0.95, 0},    // strong hit on gt 0
        {{40, 0, 50, 9}, 0.90, 1},   // strong hit on gt 1
        {{80, 1, 90, 10}, 0.85, 2},  // strong hit on gt 2
        {{1, 0, 11, 10}, 0.80, 3},   // weaker duplicate of gt 0
        {{400, 0, 410, 10}, 0.75, 4},
    };
    for (double t : {0.5, 0.7, 0.9}) {
        const double greedy = lpn::recall_at_iou(props, gts, t);
        EXPECT_DOUBLE_EQ(greedy, oracle_greedy_recall(props, gts, t));
        EXPECT_DOUBLE_EQ(greedy, oracle_optimal_recall(props, gts, t));
    }
}

TEST(MetricsRecall, MatchesGreedyOracleOnRandomInstances) {
    std::mt19937_64 rng(2025);
    std::uniform_int_distribution<int> n_props(0, 12), n_gts(0, 6);
    std::uniform_real_distribution<double> score(0, 1);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Box> gts;
        for (int j = n_gts(rng); j > 0; --j) gts.push_back(lpn_test::random_box(rng, 50, 20));
        std::vector<Proposal> props;
        for (int k = n_props(rng); k > 0; --k) {
            props.push_back({lpn_test::random_box(rng, 50, 20), score(rng), k});
        }
        const double t = 0.5 + 0.05 * (trial % 10);
        EXPECT_DOUBLE_EQ(lpn::recall_at_iou(props, gts, t), oracle_greedy_recall(props, gts, t))
            << "trial " << trial;
    }
}

TEST(MetricsRecall, NonIncreasingInThresholdAndMonotoneInProposals) {
    std::mt19937_64 rng(12);
    std::vector<Box> gts;
    for (int j = 0; j < 5; ++j) gts.push_back(lpn_test::random_box(rng, 50, 20));
    std::vector<Proposal> props;
    std::uniform_real_distribution<double> score(0, 1);
    for (int k = 0; k < 15; ++k) {
        props.push_back({lpn_test::random_box(rng, 50, 20), score(rng), k});
    }

    double prev = 1.0;
    for (double t : lpn::default_iou_thresholds()) {
        const double r = lpn::recall_at_iou(props, gts, t);
        EXPECT_LE(r, prev);
        prev = r;
    }

    // Adding a proposal never decreases recall at any threshold.
    std::vector<Proposal> more = props;
    more.push_back({gts[0], 0.99, 100});
    for (double t : lpn::default_iou_thresholds()) {
        EXPECT_GE(lpn::recall_at_iou(more, gts, t), lpn::recall_at_iou(props, gts, t));
    }
}

TEST(MetricsAverageRecall, DefaultGridIsTenPointConvention) {
    const auto& grid = lpn::default_iou_thresholds();
    ASSERT_EQ(grid.size(), 10u);
    EXPECT_DOUBLE_EQ(grid.front(), 0.50);
    EXPECT_DOUBLE_EQ(grid.back(), 0.95);
}

TEST(MetricsAverageRecall, FixedIouExampleGivesThreeTenths) {
    // Proposal at IoU exactly 0.6 against its ground truth: recall 1 at
    // thresholds {0.50, 0.55, 0.60}, 0 above.
    const std::vector<Box> gts = {{0, 0, 10, 10}};
    const std::vector<Proposal> props = {{{0, 0, 10, 6}, 0.9, 0}};
    ASSERT_DOUBLE_EQ(lpn::iou(props[0].box, gts[0]), 0.6);
    const RecallCurve curve = lpn::average_recall(props, gts);
    EXPECT_DOUBLE_EQ(curve.ar, 3.0 / 10.0);
}

TEST(MetricsAverageRecall, SingleThresholdCollapsesToRecall) {
    std::mt19937_64 rng(6);
    std::vector<Box> gts;
    for (int j = 0; j < 4; ++j) gts.push_back(lpn_test::random_box(rng, 50, 20));
    std::vector<Proposal> props;
    std::uniform_real_distribution<double> score(0, 1);
    for (int k = 0; k < 10; ++k) props.push_back({lpn_test::random_box(rng, 50, 20), score(rng), k});
    const std::vector<double> single = {0.5};
    const RecallCurve curve = lpn::average_recall(props, gts, single);
    EXPECT_DOUBLE_EQ(curve.ar, lpn::recall_at_iou(props, gts, 0.5));
}

TEST(MetricsCounting, HandComputedCase) {
    const std::vector<std::pair<int, int>> pairs = {{10, 12}, {10, 6}};
    const CountingReport report = lpn::counting_errors(pairs);
    EXPECT_DOUBLE_EQ(report.mae, 3.0);
    EXPECT_DOUBLE_EQ(report.rmse, std::sqrt(10.0));
}

TEST(MetricsCounting, PerfectCountsGiveZeroErrors) {
    const std::vector<std::pair<int, int>> pairs = {{5, 5}, {0, 0}, {37, 37}};
    const CountingReport report = lpn::counting_errors(pairs);
    EXPECT_DOUBLE_EQ(report.mae, 0.0);
    EXPECT_DOUBLE_EQ(report.rmse, 0.0);
}

TEST(MetricsCounting, SinglePairCollapsesToAbsoluteError) {
    const std::vector<std::pair<int, int>> pairs = {{10, 4}};
    const CountingReport report = lpn::counting_errors(pairs);
    EXPECT_DOUBLE_EQ(report.mae, 6.0);
    EXPECT_DOUBLE_EQ(report.rmse, 6.0);
}

TEST(MetricsCounting, EmptyReportRaises) {
    const std::vector<std::pair<int, int>> none;
    EXPECT_THROW(lpn::counting_errors(none), lpn::DataError);
}

TEST(MetricsCounting, MaeNeverExceedsRmse) {
    std::mt19937_64 rng(99);
    std::uniform_int_distribution<int> count(0, 60), n_dist(1, 20);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<std::pair<int, int>> pairs;
        for (int i = n_dist(rng); i > 0; --i) pairs.push_back({count(rng), count(rng)});
        const CountingReport report = lpn::counting_errors(pairs);
        EXPECT_LE(report.mae, report.rmse + 1e-12);

        // Equality holds exactly when all absolute errors are equal.
        bool all_equal = true;
        for (const auto& p : pairs) {
            if (std::abs(p.second - p.first) != std::abs(pairs[0].second - pairs[0].first)) {
                all_equal = false;
            }
        }
        if (!all_equal) EXPECT_LT(report.mae, report.rmse);
    }
}
