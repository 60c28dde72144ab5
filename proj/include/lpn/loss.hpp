#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "lpn/anchors.hpp"
#include "lpn/errors.hpp"
#include "lpn/geometry.hpp"
#include "lpn/spatial_kernel.hpp"

namespace lpn {

/// Probabilities are clamped to [kProbEpsilon, 1 - kProbEpsilon] before logs.
inline constexpr double kProbEpsilon = 1e-7;

struct LossConfig {
    double gamma = 1.0;   // background-loss weight
    double lambda = 1.0;  // localization-loss weight
    double pos_iou = 0.7;
    double neg_iou = 0.3;
    bool use_kernel = true;  // false reduces the objective to the unweighted loss (K = 1)
    SpatialKernelConfig kernel;
};

/**
 * @brief Per-anchor predictions, aligned index-for-index with an AnchorGrid.
 *
 * fg_prob holds the foreground probability u_i. bg_prob holds the
 * background-branch score q_i; leave it empty to tie q_i = u_i (the
 * default single-logit formulation). offsets holds the regressed
 * OffsetVector p_i.
 */
struct PredictionBatch {
    std::vector<double> fg_prob;
    std::vector<double> bg_prob;  // empty => tied to fg_prob
    std::vector<OffsetVector> offsets;

    std::size_t size() const { return fg_prob.size(); }
    double q(std::size_t i) const { return bg_prob.empty() ? fg_prob[i] : bg_prob[i]; }
    bool tied() const { return bg_prob.empty(); }
};

/// total = fg_term + gamma * bg_term + loc_term * lambda, each term already
/// carrying its 1/N normalizer. N_loc = N_fg on every batch.
struct LossBreakdown {
    double total = 0;
    double fg_term = 0;
    double bg_term = 0;
    double loc_term = 0;
    int n_fg = 0;
    int n_bg = 0;
    int n_loc = 0;
};

struct LossGradients {
    std::vector<double> d_fg_prob;          // dL/du_i
    std::vector<double> d_bg_prob;          // dL/dq_i (add to d_fg_prob when tied)
    std::vector<OffsetVector> d_offsets;    // dL/dp_i^v
};

inline double clamp_prob(double p) {
    return std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
}

/// 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
inline double smooth_l1(double x) {
    const double a = std::abs(x);
    return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

/// Derivative of smooth_l1: x clamped to [-1, 1].
inline double smooth_l1_grad(double x) { return std::clamp(x, -1.0, 1.0); }

namespace detail {

inline void check_alignment(const PredictionBatch& pred, const MatchResult& match,
                            std::size_t n_anchors, const char* where) {
    if (pred.fg_prob.size() != n_anchors || pred.offsets.size() != n_anchors ||
        (!pred.bg_prob.empty() && pred.bg_prob.size() != n_anchors) ||
        match.labels.size() != n_anchors) {
        throw DataError(std::string(where) + ": predictions/match not aligned with anchor grid");
    }
}

}  // namespace detail

/// Offset targets for every anchor; only foreground entries are meaningful.
inline std::vector<OffsetVector> regression_targets(const AnchorGrid& grid,
                                                    const MatchResult& match,
                                                    std::span<const Box> gts) {
    std::vector<OffsetVector> targets(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (match.labels[i] != AnchorLabel::foreground) continue;
        const int j = match.matched_gt[i];
        if (j < 0 || static_cast<std::size_t>(j) >= gts.size()) {
            throw DataError("regression_targets: foreground anchor without a matched ground truth");
        }
        targets[i] = encode_offsets(gts[static_cast<std::size_t>(j)], grid.boxes[i]);
    }
    return targets;
}

/// Pattern scores honoring cfg.use_kernel (all ones when disabled).
inline std::vector<double> loss_kernel_weights(const AnchorGrid& grid, const MatchResult& match,
                                               std::span<const Box> gts, const LossConfig& cfg) {
    if (!cfg.use_kernel) return std::vector<double>(grid.size(), 1.0);
    return pattern_scores(grid, match, gts, cfg.kernel);
}

/**
 * @brief Multi-task loss from precomputed kernel weights and offset targets.
 *
 * fg_term  = (1/N_fg)  sum_fg K_i * (-log u_i)
 * bg_term  = (1/N_bg)  sum_bg (-log(1 - q_i))
 * loc_term = (1/N_loc) sum_fg sum_v smooth_l1(p_i^v - t_i^v)
 *
 * Ignore-labelled anchors contribute nothing; empty foreground (or
 * background) zeroes the corresponding terms. Summation is in anchor-index
 * order so results are independent of caller iteration order.
 */
inline LossBreakdown compute_loss_core(const PredictionBatch& pred, const MatchResult& match,
                                       std::span<const OffsetVector> targets,
                                       std::span<const double> kernel_weights, double gamma,
                                       double lambda) {
    const std::size_t n = match.labels.size();
    detail::check_alignment(pred, match, n, "compute_loss");
    if (targets.size() != n || kernel_weights.size() != n) {
        throw DataError("compute_loss: targets/kernel weights not aligned with anchor grid");
    }

    LossBreakdown out;
    out.n_fg = match.n_foreground;
    out.n_bg = match.n_background;
    out.n_loc = match.n_foreground;

    double fg_sum = 0, bg_sum = 0, loc_sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
        switch (match.labels[i]) {
            case AnchorLabel::foreground: {
                fg_sum += kernel_weights[i] * -std::log(clamp_prob(pred.fg_prob[i]));
                const OffsetVector& p = pred.offsets[i];
                const OffsetVector& t = targets[i];
                loc_sum += smooth_l1(p.tx - t.tx) + smooth_l1(p.ty - t.ty) +
                           smooth_l1(p.tw - t.tw) + smooth_l1(p.th - t.th);
                break;
            }
            case AnchorLabel::background:
                bg_sum += -std::log(1.0 - clamp_prob(pred.q(i)));
                break;
            case AnchorLabel::ignore:
                break;
        }
    }

    if (out.n_fg > 0) {
        out.fg_term = fg_sum / out.n_fg;
        out.loc_term = loc_sum / out.n_loc;
    }
    if (out.n_bg > 0) {
        out.bg_term = bg_sum / out.n_bg;
    }
    out.total = out.fg_term + gamma * out.bg_term + lambda * out.loc_term;
    return out;
}

/// Full loss: derives kernel weights and regression targets from the scene.
inline LossBreakdown compute_loss(const PredictionBatch& pred, const MatchResult& match,
                                  std::span<const Box> gts, const AnchorGrid& grid,
                                  const LossConfig& cfg) {
    detail::check_alignment(pred, match, grid.size(), "compute_loss");
    const auto weights = loss_kernel_weights(grid, match, gts, cfg);
    const auto targets = regression_targets(grid, match, gts);
    return compute_loss_core(pred, match, targets, weights, cfg.gamma, cfg.lambda);
}

/**
 * @brief Analytic gradients of compute_loss_core w.r.t. u_i, q_i, p_i^v.
 *
 * dL/du_i = -K_i / (N_fg u_i) on foreground anchors;
 * dL/dq_i = gamma / (N_bg (1 - q_i)) on background anchors;
 * dL/dp_i^v = lambda / N_loc * clamp(p_i^v - t_i^v, -1, 1) on foreground.
 * When predictions are tied (q = u), the caller combines d_fg_prob and
 * d_bg_prob.
 */
inline LossGradients loss_gradients_core(const PredictionBatch& pred, const MatchResult& match,
                                         std::span<const OffsetVector> targets,
                                         std::span<const double> kernel_weights, double gamma,
                                         double lambda) {
    const std::size_t n = match.labels.size();
    detail::check_alignment(pred, match, n, "loss_gradients");
    if (targets.size() != n || kernel_weights.size() != n) {
        throw DataError("loss_gradients: targets/kernel weights not aligned with anchor grid");
    }

    LossGradients g;
    g.d_fg_prob.assign(n, 0.0);
    g.d_bg_prob.assign(n, 0.0);
    g.d_offsets.assign(n, OffsetVector{});

    const int n_fg = match.n_foreground;
    const int n_bg = match.n_background;
    for (std::size_t i = 0; i < n; ++i) {
        switch (match.labels[i]) {
            case AnchorLabel::foreground: {
                g.d_fg_prob[i] = -kernel_weights[i] / (n_fg * clamp_prob(pred.fg_prob[i]));
                const OffsetVector& p = pred.offsets[i];
                const OffsetVector& t = targets[i];
                g.d_offsets[i].tx = lambda / n_fg * smooth_l1_grad(p.tx - t.tx);
                g.d_offsets[i].ty = lambda / n_fg * smooth_l1_grad(p.ty - t.ty);
                g.d_offsets[i].tw = lambda / n_fg * smooth_l1_grad(p.tw - t.tw);
                g.d_offsets[i].th = lambda / n_fg * smooth_l1_grad(p.th - t.th);
                break;
            }
            case AnchorLabel::background:
                g.d_bg_prob[i] = gamma / (n_bg * (1.0 - clamp_prob(pred.q(i))));
                break;
            case AnchorLabel::ignore:
                break;
        }
    }
    return g;
}

inline LossGradients loss_gradients(const PredictionBatch& pred, const MatchResult& match,
                                    std::span<const Box> gts, const AnchorGrid& grid,
                                    const LossConfig& cfg) {
    detail::check_alignment(pred, match, grid.size(), "loss_gradients");
    const auto weights = loss_kernel_weights(grid, match, gts, cfg);
    const auto targets = regression_targets(grid, match, gts);
    return loss_gradients_core(pred, match, targets, weights, cfg.gamma, cfg.lambda);
}

}  // namespace lpn
