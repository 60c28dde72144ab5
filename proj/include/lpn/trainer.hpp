#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lpn/anchors.hpp"
#include "lpn/data_io.hpp"
#include "lpn/errors.hpp"
#include "lpn/loss.hpp"
#include "lpn/parallel.hpp"
#include "lpn/scorer.hpp"

namespace lpn {

struct TrainOptions {
    double learning_rate = 0.05;  // largest step observed monotone under kernel weighting
    double momentum = 0.0;        // 0 = plain gradient descent
    int epochs = 200;
    int feature_grid = 8;
    std::uint64_t seed = 1;
    int jobs = 1;
};

struct TrainResult {
    ScorerModel model;
    // history[e] is the mean per-scene loss before update e; the last entry
    // is the loss after the final update (epochs + 1 entries).
    std::vector<LossBreakdown> history;
};

namespace detail {

/// Everything about a scene that does not depend on the model: anchors,
/// matches, kernel weights, regression targets, and resampled features.
struct SceneCache {
    AnchorGrid grid;
    MatchResult match;
    std::vector<double> kernel_weights;
    std::vector<OffsetVector> targets;
    std::vector<float> features;  // n_anchors * n_features, row per anchor

    std::size_t n_anchors() const { return grid.size(); }
};

inline SceneCache build_scene_cache(const Scene& scene, const AnchorGridConfig& anchor_cfg,
                                    const LossConfig& loss_cfg, int feature_grid) {
    SceneCache cache;
    AnchorGridConfig cfg = anchor_cfg;
    cfg.image_w = scene.grid.width;
    cfg.image_h = scene.grid.height;
    cache.grid = generate_anchors(cfg);
    cache.match = match_anchors(cache.grid, scene.annotation.boxes, loss_cfg.pos_iou,
                                loss_cfg.neg_iou);
    cache.kernel_weights =
        loss_kernel_weights(cache.grid, cache.match, scene.annotation.boxes, loss_cfg);
    cache.targets = regression_targets(cache.grid, cache.match, scene.annotation.boxes);

    const int nf = feature_grid * feature_grid + 1;
    cache.features.resize(cache.n_anchors() * static_cast<std::size_t>(nf));
    for (std::size_t i = 0; i < cache.n_anchors(); ++i) {
        extract_features<float>(scene.grid, cache.grid.boxes[i], feature_grid,
                                std::span<float>(cache.features.data() + i * static_cast<std::size_t>(nf),
                                                 static_cast<std::size_t>(nf)));
    }
    return cache;
}

/// Forward + loss (+ optional parameter gradient) for one cached scene.
inline LossBreakdown scene_pass(const ScorerModel& model, const SceneCache& cache,
                                const LossConfig& loss_cfg, std::vector<double>* grad_out) {
    const int nf = model.n_features();
    const std::size_t n = cache.n_anchors();

    PredictionBatch pred;
    pred.fg_prob.resize(n);
    pred.offsets.resize(n);
    std::vector<double> raw_prob(n);  // sigmoid before clamping, for the chain rule
    for (std::size_t i = 0; i < n; ++i) {
        const float* f = cache.features.data() + i * static_cast<std::size_t>(nf);
        const ScorerOutput out = score_features<float>(model, std::span<const float>(f, static_cast<std::size_t>(nf)));
        raw_prob[i] = sigmoid(out.logit);
        pred.fg_prob[i] = out.prob;
        pred.offsets[i] = out.offsets;
    }

    const LossBreakdown loss = compute_loss_core(pred, cache.match, cache.targets,
                                                 cache.kernel_weights, loss_cfg.gamma,
                                                 loss_cfg.lambda);
    if (grad_out == nullptr) return loss;

    const LossGradients g = loss_gradients_core(pred, cache.match, cache.targets,
                                                cache.kernel_weights, loss_cfg.gamma,
                                                loss_cfg.lambda);
    grad_out->assign(static_cast<std::size_t>(model.n_parameters()), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double d_prob = g.d_fg_prob[i] + g.d_bg_prob[i];  // tied scores: q = u
        const double coeff[ScorerModel::kOutputs] = {
            d_prob * raw_prob[i] * (1.0 - raw_prob[i]),
            g.d_offsets[i].tx, g.d_offsets[i].ty, g.d_offsets[i].tw, g.d_offsets[i].th};
        const float* f = cache.features.data() + i * static_cast<std::size_t>(nf);
        for (int r = 0; r < ScorerModel::kOutputs; ++r) {
            if (coeff[r] == 0.0) continue;
            double* dst = grad_out->data() + static_cast<std::size_t>(r) * nf;
            for (int k = 0; k < nf; ++k) dst[k] += coeff[r] * static_cast<double>(f[k]);
        }
    }
    return loss;
}

inline LossBreakdown mean_breakdown(std::span<const LossBreakdown> per_scene) {
    LossBreakdown mean;
    for (const LossBreakdown& b : per_scene) {
        mean.total += b.total;
        mean.fg_term += b.fg_term;
        mean.bg_term += b.bg_term;
        mean.loc_term += b.loc_term;
        mean.n_fg += b.n_fg;
        mean.n_bg += b.n_bg;
        mean.n_loc += b.n_loc;
    }
    const auto n = static_cast<double>(per_scene.size());
    mean.total /= n;
    mean.fg_term /= n;
    mean.bg_term /= n;
    mean.loc_term /= n;
    return mean;
}

}  // namespace detail

/**
 * @brief Full-batch gradient descent on the multi-task loss averaged over
 * scenes.
 *
 * Kernel weights, matches, targets, and features are computed once per
 * scene and cached (they do not depend on the model). Scenes may be
 * processed in parallel; gradients are reduced in scene-index order so the
 * result is independent of the job count. Training aborts with NumericError
 * when the loss stops being finite.
 */
inline TrainResult train_scorer(std::span<const Scene> scenes, const AnchorGridConfig& anchor_cfg,
                                const LossConfig& loss_cfg, const TrainOptions& opt) {
    if (scenes.empty()) throw ConfigError("train_scorer: at least one scene required");
    if (opt.epochs < 1) throw ConfigError("train_scorer: epochs must be >= 1");
    if (!(opt.learning_rate > 0)) throw ConfigError("train_scorer: learning rate must be > 0");

    TrainResult result;
    result.model = ScorerModel::init(opt.feature_grid, opt.seed, loss_cfg.kernel);

    std::vector<detail::SceneCache> caches(scenes.size());
    parallel_for(scenes.size(), opt.jobs, [&](std::size_t s) {
        caches[s] = detail::build_scene_cache(scenes[s], anchor_cfg, loss_cfg, opt.feature_grid);
    });

    const auto n_params = static_cast<std::size_t>(result.model.n_parameters());
    std::vector<std::vector<double>> scene_grads(scenes.size());
    std::vector<LossBreakdown> scene_losses(scenes.size());
    std::vector<double> grad(n_params), velocity(n_params, 0.0);

    for (int epoch = 0; epoch <= opt.epochs; ++epoch) {
        const bool final_eval = epoch == opt.epochs;
        parallel_for(scenes.size(), opt.jobs, [&](std::size_t s) {
            scene_losses[s] = detail::scene_pass(result.model, caches[s], loss_cfg,
                                                 final_eval ? nullptr : &scene_grads[s]);
        });
        const LossBreakdown mean = detail::mean_breakdown(scene_losses);
        result.history.push_back(mean);
        if (!std::isfinite(mean.total)) {
            throw NumericError("train_scorer: loss diverged at epoch " + std::to_string(epoch));
        }
        if (final_eval) break;

        grad.assign(n_params, 0.0);
        for (const auto& sg : scene_grads) {  // scene-index order, deterministic
            for (std::size_t k = 0; k < n_params; ++k) grad[k] += sg[k];
        }
        const double inv_n = 1.0 / static_cast<double>(scenes.size());
        for (std::size_t k = 0; k < n_params; ++k) {
            velocity[k] = opt.momentum * velocity[k] - opt.learning_rate * grad[k] * inv_n;
            result.model.weights[k] += velocity[k];
        }
    }
    return result;
}

}  // namespace lpn
