#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "lpn/errors.hpp"
#include "lpn/geometry.hpp"

namespace lpn {

/**
 * @brief Configuration of the tiled default-box grid.
 *
 * Anchor centers lie on the lattice {(i + 0.5) * stride}. Every (size,
 * aspect ratio) combination is emitted at every lattice cell, so the grid
 * holds ceil(w/stride) * ceil(h/stride) * |sizes| * |ratios| boxes.
 * Aspect ratio r rescales a base size (w, h) to (w * sqrt(r), h / sqrt(r)),
 * preserving area.
 */
struct AnchorGridConfig {
    int image_w = 0;
    int image_h = 0;
    int stride = 8;
    std::vector<std::pair<double, double>> sizes = {{16, 16}, {40, 40}, {100, 100}};
    std::vector<double> aspect_ratios = {1.0};
    // When set, anchors extending past the image take no part in matching
    // (they are labelled ignore instead of foreground/background).
    bool exclude_cross_boundary = false;
};

struct AnchorGrid {
    AnchorGridConfig config;
    int cells_x = 0;
    int cells_y = 0;
    std::vector<Box> boxes;                  // row-major cells, then sizes, then ratios
    std::vector<std::uint8_t> cross_boundary;

    std::size_t size() const { return boxes.size(); }
};

/// Deterministic tiling of default boxes; regeneration with an equal config
/// is bit-identical. Cross-boundary anchors are kept and flagged.
inline AnchorGrid generate_anchors(const AnchorGridConfig& config) {
    if (config.image_w <= 0 || config.image_h <= 0) {
        throw ConfigError("generate_anchors: image dimensions must be positive");
    }
    if (config.stride < 1) {
        throw ConfigError("generate_anchors: stride must be >= 1");
    }
    if (config.sizes.empty()) {
        throw ConfigError("generate_anchors: size list must not be empty");
    }
    if (config.aspect_ratios.empty()) {
        throw ConfigError("generate_anchors: aspect ratio list must not be empty");
    }
    for (const auto& [w, h] : config.sizes) {
        if (!(w > 0) || !(h > 0)) {
            throw ConfigError("generate_anchors: anchor sizes must be positive");
        }
    }

    AnchorGrid grid;
    grid.config = config;
    grid.cells_x = (config.image_w + config.stride - 1) / config.stride;
    grid.cells_y = (config.image_h + config.stride - 1) / config.stride;

    const std::size_t per_cell = config.sizes.size() * config.aspect_ratios.size();
    grid.boxes.reserve(static_cast<std::size_t>(grid.cells_x) * grid.cells_y * per_cell);

    for (int gy = 0; gy < grid.cells_y; ++gy) {
        for (int gx = 0; gx < grid.cells_x; ++gx) {
            const double cx = (gx + 0.5) * config.stride;
            const double cy = (gy + 0.5) * config.stride;
            for (const auto& [sw, sh] : config.sizes) {
                for (double ratio : config.aspect_ratios) {
                    const double root = std::sqrt(ratio);
                    grid.boxes.push_back(Box::from_center(cx, cy, sw * root, sh / root));
                }
            }
        }
    }

    grid.cross_boundary.resize(grid.boxes.size());
    for (std::size_t i = 0; i < grid.boxes.size(); ++i) {
        const Box& b = grid.boxes[i];
        grid.cross_boundary[i] =
            b.x1 < 0 || b.y1 < 0 || b.x2 > config.image_w || b.y2 > config.image_h;
    }
    return grid;
}

enum class AnchorLabel : std::uint8_t { background = 0, foreground = 1, ignore = 2 };

/**
 * @brief Per-anchor matching outcome.
 *
 * matched_gt holds the argmax-IoU ground-truth index (-1 when no ground
 * truth overlaps the anchor); it is filled for every anchor but only
 * meaningful for foreground ones.
 */
struct MatchResult {
    std::vector<AnchorLabel> labels;
    std::vector<int> matched_gt;
    std::vector<double> max_iou;
    int n_foreground = 0;
    int n_background = 0;
};

/**
 * @brief Assign foreground/background/ignore labels to every anchor.
 *
 * An anchor is foreground when its IoU with some ground truth exceeds
 * pos_thresh, or when it attains the best IoU for some ground truth
 * (best-match rule; ties promote all tied anchors, and the rule only
 * applies when that best IoU is > 0). It is background when its max IoU
 * is below neg_thresh and it was not promoted; anything else is ignored.
 * An empty ground-truth list yields an all-background result.
 */
inline MatchResult match_anchors(const AnchorGrid& grid, std::span<const Box> gts,
                                 double pos_thresh = 0.7, double neg_thresh = 0.3) {
    if (!(0 <= neg_thresh && neg_thresh <= pos_thresh && pos_thresh <= 1)) {
        throw ConfigError("match_anchors: need 0 <= neg_thresh <= pos_thresh <= 1");
    }

    const std::size_t n = grid.size();
    MatchResult result;
    result.labels.assign(n, AnchorLabel::background);
    result.matched_gt.assign(n, -1);
    result.max_iou.assign(n, 0.0);

    if (!gts.empty()) {
        std::vector<double> best_gt_iou(gts.size(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < gts.size(); ++j) {
                const double v = iou(grid.boxes[i], gts[j]);
                if (v > result.max_iou[i]) {
                    result.max_iou[i] = v;
                    result.matched_gt[i] = static_cast<int>(j);
                }
                if (v > best_gt_iou[j]) best_gt_iou[j] = v;
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            if (result.max_iou[i] > pos_thresh) {
                result.labels[i] = AnchorLabel::foreground;
            } else if (result.max_iou[i] < neg_thresh) {
                result.labels[i] = AnchorLabel::background;
            } else {
                result.labels[i] = AnchorLabel::ignore;
            }
        }

        // Best-match rule: every ground truth with any overlap gets at least
        // one foreground anchor; exact-tie anchors are all promoted.
        for (std::size_t j = 0; j < gts.size(); ++j) {
            if (!(best_gt_iou[j] > 0)) continue;
            for (std::size_t i = 0; i < n; ++i) {
                if (iou(grid.boxes[i], gts[j]) == best_gt_iou[j]) {
                    result.labels[i] = AnchorLabel::foreground;
                }
            }
        }
    }

    if (grid.config.exclude_cross_boundary) {
        for (std::size_t i = 0; i < n; ++i) {
            if (grid.cross_boundary[i]) result.labels[i] = AnchorLabel::ignore;
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        if (result.labels[i] == AnchorLabel::foreground) ++result.n_foreground;
        if (result.labels[i] == AnchorLabel::background) ++result.n_background;
    }
    return result;
}

}  // namespace lpn
