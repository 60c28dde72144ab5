#pragma once

#include <algorithm>
#include <numeric>
#include <span>
#include <vector>

#include "lpn/anchors.hpp"
#include "lpn/geometry.hpp"
#include "lpn/loss.hpp"

namespace lpn {

/// Decoded candidate box with its objectness score, prior to NMS.
struct Proposal {
    Box box;
    double score = 0;
    int anchor_index = -1;
};

struct DetectionParams {
    double score_threshold = 0.5;
    double nms_iou = 0.3;
    int top_n = 400;  // proposal budget fed to the counting pipeline
};

/**
 * @brief Decode every anchor and return the top_n proposals by score.
 *
 * Sorted by score descending; equal scores break toward the lower anchor
 * index so the ranking is deterministic.
 */
inline std::vector<Proposal> rank_proposals(const PredictionBatch& pred, const AnchorGrid& grid,
                                            int top_n) {
    if (pred.size() != grid.size() || pred.offsets.size() != grid.size()) {
        throw DataError("rank_proposals: predictions not aligned with anchor grid");
    }
    if (top_n < 1) throw ConfigError("rank_proposals: top_n must be >= 1");

    std::vector<int> order(grid.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (pred.fg_prob[static_cast<std::size_t>(a)] != pred.fg_prob[static_cast<std::size_t>(b)])
            return pred.fg_prob[static_cast<std::size_t>(a)] >
                   pred.fg_prob[static_cast<std::size_t>(b)];
        return a < b;
    });

    const std::size_t keep = std::min<std::size_t>(order.size(), static_cast<std::size_t>(top_n));
    std::vector<Proposal> props;
    props.reserve(keep);
    for (std::size_t k = 0; k < keep; ++k) {
        const auto i = static_cast<std::size_t>(order[k]);
        props.push_back({decode_offsets(pred.offsets[i], grid.boxes[i]), pred.fg_prob[i],
                         order[k]});
    }
    return props;
}

/**
 * @brief Greedy non-maximum suppression.
 *
 * Repeatedly keeps the highest-scoring remaining proposal and discards the
 * rest with IoU strictly greater than iou_thresh against it, so
 * iou_thresh = 1 only suppresses exact duplicates. Input is re-sorted
 * internally (stable, score descending); output appears in kept order.
 */
inline std::vector<Proposal> nms(std::vector<Proposal> props, double iou_thresh) {
    std::stable_sort(props.begin(), props.end(),
                     [](const Proposal& a, const Proposal& b) { return a.score > b.score; });
    std::vector<Proposal> kept;
    for (const Proposal& p : props) {
        bool suppressed = false;
        for (const Proposal& k : kept) {
            if (iou(p.box, k.box) > iou_thresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(p);
    }
    return kept;
}

struct CountResult {
    int count = 0;
    std::vector<Proposal> detections;
};

/// Counting by detection: threshold on score, suppress duplicates, count
/// the survivors.
inline CountResult count_objects(std::span<const Proposal> props, const DetectionParams& params) {
    std::vector<Proposal> above;
    for (const Proposal& p : props) {
        if (p.score >= params.score_threshold) above.push_back(p);
    }
    CountResult result;
    result.detections = nms(std::move(above), params.nms_iou);
    result.count = static_cast<int>(result.detections.size());
    return result;
}

}  // namespace lpn
