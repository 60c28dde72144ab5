#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lpn/detection.hpp"
#include "lpn/errors.hpp"
#include "lpn/geometry.hpp"

namespace lpn {

/// Recall per IoU threshold plus the average over the grid.
struct RecallCurve {
    std::vector<double> thresholds;
    std::vector<double> recall_at;
    double ar = 0;
};

/// The conventional 10-point grid 0.50:0.05:0.95.
inline const std::vector<double>& default_iou_thresholds() {
    static const std::vector<double> grid = {0.50, 0.55, 0.60, 0.65, 0.70,
                                             0.75, 0.80, 0.85, 0.90, 0.95};
    return grid;
}

/**
 * @brief Greedy score-ordered recall at one IoU threshold.
 *
 * Proposals are visited best-score first (stable on ties); each claims its
 * highest-IoU unclaimed ground truth among those with IoU >= iou_t.
 * Recall is claimed / |gts|, and vacuously 1 when there is no ground truth.
 */
inline double recall_at_iou(std::span<const Proposal> props, std::span<const Box> gts,
                            double iou_t) {
    if (!(iou_t >= 0 && iou_t <= 1)) throw ConfigError("recall_at_iou: threshold must be in [0, 1]");
    if (gts.empty()) return 1.0;

    std::vector<std::size_t> order(props.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return props[a].score > props[b].score;
    });

    std::vector<std::uint8_t> claimed(gts.size(), 0);
    int hits = 0;
    for (std::size_t k : order) {
        double best = 0;
        int best_j = -1;
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (claimed[j]) continue;
            const double v = iou(props[k].box, gts[j]);
            if (v >= iou_t && v > best) {
                best = v;
                best_j = static_cast<int>(j);
            }
        }
        if (best_j >= 0) {
            claimed[static_cast<std::size_t>(best_j)] = 1;
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(gts.size());
}

/// Recall over a threshold grid; ar is the arithmetic mean.
inline RecallCurve average_recall(std::span<const Proposal> props, std::span<const Box> gts,
                                  std::span<const double> thresholds = {}) {
    RecallCurve curve;
    curve.thresholds.assign(thresholds.begin(), thresholds.end());
    if (curve.thresholds.empty()) curve.thresholds = default_iou_thresholds();
    for (double t : curve.thresholds) {
        if (!(t >= 0.5 && t <= 1.0)) {
            throw ConfigError("average_recall: thresholds must lie in [0.5, 1]");
        }
    }

    double sum = 0;
    curve.recall_at.reserve(curve.thresholds.size());
    for (double t : curve.thresholds) {
        const double r = recall_at_iou(props, gts, t);
        curve.recall_at.push_back(r);
        sum += r;
    }
    curve.ar = sum / static_cast<double>(curve.thresholds.size());
    return curve;
}

/// Counting accuracy over a set of scenes.
struct CountingReport {
    struct SceneCount {
        std::string scene_id;
        int ground_truth = 0;
        int predicted = 0;
    };

    std::vector<SceneCount> scenes;
    double mae = 0;
    double rmse = 0;

    int n() const { return static_cast<int>(scenes.size()); }
};

/// MAE and RMSE from (ground truth, predicted) count pairs.
inline CountingReport counting_errors(std::span<const CountingReport::SceneCount> pairs) {
    if (pairs.empty()) throw DataError("counting_errors: report undefined for zero scenes");
    CountingReport report;
    report.scenes.assign(pairs.begin(), pairs.end());
    double abs_sum = 0, sq_sum = 0;
    for (const auto& p : pairs) {
        const double err = p.predicted - p.ground_truth;
        abs_sum += std::abs(err);
        sq_sum += err * err;
    }
    const auto n = static_cast<double>(pairs.size());
    report.mae = abs_sum / n;
    report.rmse = std::sqrt(sq_sum / n);
    return report;
}

inline CountingReport counting_errors(std::span<const std::pair<int, int>> pairs) {
    std::vector<CountingReport::SceneCount> counts;
    counts.reserve(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        counts.push_back({"scene_" + std::to_string(i), pairs[i].first, pairs[i].second});
    }
    return counting_errors(counts);
}

}  // namespace lpn
