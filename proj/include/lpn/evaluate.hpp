#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "lpn/anchors.hpp"
#include "lpn/data_io.hpp"
#include "lpn/detection.hpp"
#include "lpn/metrics.hpp"
#include "lpn/parallel.hpp"
#include "lpn/scorer.hpp"

namespace lpn {

/// Upper-bound predictions from ground truth: each anchor scores its best
/// IoU against the scene's boxes and regresses nothing, so ranking quality
/// is limited only by the anchor grid itself.
inline PredictionBatch oracle_predictions(const AnchorGrid& grid, std::span<const Box> gts) {
    PredictionBatch pred;
    pred.fg_prob.assign(grid.size(), 0.0);
    pred.offsets.assign(grid.size(), OffsetVector{});
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double best = 0;
        for (const Box& g : gts) best = std::max(best, iou(grid.boxes[i], g));
        pred.fg_prob[i] = best;
    }
    return pred;
}

struct ArRow {
    int budget = 0;
    double ar = 0;          // model average recall, mean over scenes
    double ar_ceiling = 0;  // oracle-scored anchor-grid ceiling
};

struct ArTable {
    std::vector<double> thresholds;
    std::vector<ArRow> rows;
    int n_scenes = 0;
    bool budgets_clamped = false;  // some budget exceeded the anchor count
};

/// Per-budget average recall over scenes for a trained model, next to the
/// anchor-grid ceiling. Budgets above the anchor count are clamped.
inline ArTable evaluate_proposals(const ScorerModel& model, std::span<const Scene> scenes,
                                  const AnchorGridConfig& anchor_cfg, std::span<const int> budgets,
                                  std::span<const double> thresholds = {}, int jobs = 1) {
    if (scenes.empty()) throw ConfigError("evaluate_proposals: at least one scene required");
    if (budgets.empty()) throw ConfigError("evaluate_proposals: at least one budget required");

    ArTable table;
    table.thresholds.assign(thresholds.begin(), thresholds.end());
    if (table.thresholds.empty()) table.thresholds = default_iou_thresholds();
    table.n_scenes = static_cast<int>(scenes.size());

    // ar_sums[scene][budget] for model, then ceiling.
    std::vector<std::vector<double>> model_ar(scenes.size());
    std::vector<std::vector<double>> ceiling_ar(scenes.size());
    std::vector<std::uint8_t> clamped(scenes.size(), 0);

    parallel_for(scenes.size(), jobs, [&](std::size_t s) {
        const Scene& scene = scenes[s];
        AnchorGridConfig cfg = anchor_cfg;
        cfg.image_w = scene.grid.width;
        cfg.image_h = scene.grid.height;
        const AnchorGrid grid = generate_anchors(cfg);
        const PredictionBatch pred = score_anchors(model, scene.grid, grid);
        const PredictionBatch oracle = oracle_predictions(grid, scene.annotation.boxes);

        model_ar[s].reserve(budgets.size());
        ceiling_ar[s].reserve(budgets.size());
        for (int budget : budgets) {
            if (budget > static_cast<int>(grid.size())) clamped[s] = 1;
            const int top_n = std::min(budget, static_cast<int>(grid.size()));
            const auto props = rank_proposals(pred, grid, top_n);
            const auto oracle_props = rank_proposals(oracle, grid, top_n);
            model_ar[s].push_back(
                average_recall(props, scene.annotation.boxes, table.thresholds).ar);
            ceiling_ar[s].push_back(
                average_recall(oracle_props, scene.annotation.boxes, table.thresholds).ar);
        }
    });

    for (std::size_t b = 0; b < budgets.size(); ++b) {
        ArRow row;
        row.budget = budgets[b];
        for (std::size_t s = 0; s < scenes.size(); ++s) {
            row.ar += model_ar[s][b];
            row.ar_ceiling += ceiling_ar[s][b];
        }
        row.ar /= static_cast<double>(scenes.size());
        row.ar_ceiling /= static_cast<double>(scenes.size());
        table.rows.push_back(row);
    }
    table.budgets_clamped = std::any_of(clamped.begin(), clamped.end(), [](auto c) { return c != 0; });
    return table;
}

struct SceneDetections {
    std::string scene_id;
    std::vector<Proposal> detections;
};

struct CountingEvaluation {
    CountingReport report;
    std::vector<SceneDetections> detections;
};

/// Detection-based counting over scenes: rank top_n proposals, threshold,
/// suppress, count, and compare against ground-truth counts.
inline CountingEvaluation evaluate_counting(const ScorerModel& model, std::span<const Scene> scenes,
                                            const AnchorGridConfig& anchor_cfg,
                                            const DetectionParams& params, int jobs = 1) {
    if (scenes.empty()) throw ConfigError("evaluate_counting: at least one scene required");

    std::vector<CountingReport::SceneCount> counts(scenes.size());
    std::vector<SceneDetections> detections(scenes.size());
    parallel_for(scenes.size(), jobs, [&](std::size_t s) {
        const Scene& scene = scenes[s];
        AnchorGridConfig cfg = anchor_cfg;
        cfg.image_w = scene.grid.width;
        cfg.image_h = scene.grid.height;
        const AnchorGrid grid = generate_anchors(cfg);
        const PredictionBatch pred = score_anchors(model, scene.grid, grid);
        const int top_n = std::min(params.top_n, static_cast<int>(grid.size()));
        const auto props = rank_proposals(pred, grid, top_n);
        const CountResult result = count_objects(props, params);
        counts[s] = {scene.annotation.scene_id, scene.annotation.count(), result.count};
        detections[s] = {scene.annotation.scene_id, result.detections};
    });

    CountingEvaluation eval;
    eval.report = counting_errors(counts);
    eval.detections = std::move(detections);
    return eval;
}

}  // namespace lpn
