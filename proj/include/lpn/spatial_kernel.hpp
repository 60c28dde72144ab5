#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "lpn/anchors.hpp"
#include "lpn/errors.hpp"
#include "lpn/geometry.hpp"

namespace lpn {

struct Point {
    double x = 0, y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline Point box_center(const Box& b) { return {b.center_x(), b.center_y()}; }

enum class KernelNormalize {
    none,                 // raw pattern scores, the default
    mean_one_foreground,  // rescale so the mean over foreground anchors is 1
};

/**
 * @brief Parameters of the rotated-Gaussian spatial pattern score.
 *
 * The kernel is evaluated once per orientation in `orientations` and summed
 * over the ground-truth centers inside a square window of side `window`
 * centered on the anchor. sigma_x stretches the kernel along the rotated
 * axis (rows of parked cars), sigma_y across it.
 */
struct SpatialKernelConfig {
    double alpha = 1.0;
    double sigma_x = 42.5;   // window / 6: +-3 sigma along the row axis
    double sigma_y = 10.0;   // narrow across rows
    double window = 255.0;   // side length of the square neighbor window
    std::vector<double> orientations = {0.0, std::numbers::pi / 4, std::numbers::pi / 2,
                                        3 * std::numbers::pi / 4};
    KernelNormalize normalize = KernelNormalize::none;

    void validate() const {
        if (!(sigma_x > 0) || !(sigma_y > 0)) {
            throw ConfigError("spatial kernel: sigma_x and sigma_y must be positive");
        }
        if (!(window > 0)) {
            throw ConfigError("spatial kernel: window must be positive");
        }
        if (orientations.empty()) {
            throw ConfigError("spatial kernel: at least one orientation required");
        }
        for (double theta : orientations) {
            if (!(theta >= 0) || !(theta < std::numbers::pi)) {
                throw ConfigError("spatial kernel: orientations must lie in [0, pi)");
            }
        }
    }
};

/// r orientations theta_k = k*pi/r, k = 0..r-1; half-open so 0 and pi are
/// not double counted.
inline std::vector<double> evenly_spaced_orientations(int r) {
    if (r < 1) throw ConfigError("evenly_spaced_orientations: r must be >= 1");
    std::vector<double> d(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) d[static_cast<std::size_t>(k)] = k * std::numbers::pi / r;
    return d;
}

/// Ground-truth centers near one anchor center, in input order.
struct NeighborSet {
    Point center;
    std::vector<Point> neighbors;

    std::size_t m() const { return neighbors.size(); }
};

/// Centers inside the axis-aligned square of side `window` centered at c,
/// boundary inclusive.
inline NeighborSet collect_neighbors(Point c, std::span<const Point> gt_centers, double window) {
    if (!(window > 0)) throw ConfigError("collect_neighbors: window must be positive");
    NeighborSet set;
    set.center = c;
    const double half = 0.5 * window;
    for (const Point& p : gt_centers) {
        if (std::abs(p.x - c.x) <= half && std::abs(p.y - c.y) <= half) {
            set.neighbors.push_back(p);
        }
    }
    return set;
}

/**
 * @brief Anisotropic Gaussian response of one ground-truth center at one
 * orientation.
 *
 * The displacement gt - c is rotated by theta and weighted as
 * alpha * exp(-(x'^2 / (2 sigma_x^2) + y'^2 / (2 sigma_y^2))).
 */
inline double rotated_gaussian(Point c, Point gt, double theta, const SpatialKernelConfig& cfg) {
    const double dx = gt.x - c.x;
    const double dy = gt.y - c.y;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double xr = ct * dx + st * dy;
    const double yr = -st * dx + ct * dy;
    return cfg.alpha * std::exp(-(xr * xr / (2 * cfg.sigma_x * cfg.sigma_x) +
                                  yr * yr / (2 * cfg.sigma_y * cfg.sigma_y)));
}

/**
 * @brief Spatial pattern score K for one anchor.
 *
 * Non-foreground anchors score exactly 1. Foreground anchors score the sum
 * of rotated-Gaussian responses over every neighbor and every orientation;
 * a foreground anchor with no neighbors in the window falls back to 1 so
 * isolated objects keep baseline loss weight. Summation order is fixed
 * (neighbor index ascending, then orientation index ascending) so results
 * do not depend on evaluation order.
 */
inline double pattern_score(bool foreground, const NeighborSet& neighbors,
                            const SpatialKernelConfig& cfg) {
    if (!foreground) return 1.0;
    if (neighbors.neighbors.empty()) return 1.0;
    double k = 0.0;
    for (const Point& p : neighbors.neighbors) {
        for (double theta : cfg.orientations) {
            k += rotated_gaussian(neighbors.center, p, theta, cfg);
        }
    }
    return k;
}

/**
 * @brief Pattern scores for every anchor of a grid, from ground truth alone.
 *
 * Scores depend only on anchor centers, labels, and ground-truth centers,
 * so callers can compute them once per scene and cache them. With
 * mean_one_foreground normalization, foreground scores are rescaled so
 * their mean over foreground anchors is 1.
 */
inline std::vector<double> pattern_scores(const AnchorGrid& grid, const MatchResult& match,
                                          std::span<const Box> gts,
                                          const SpatialKernelConfig& cfg) {
    cfg.validate();
    if (match.labels.size() != grid.size()) {
        throw DataError("pattern_scores: match result does not align with anchor grid");
    }

    std::vector<Point> centers;
    centers.reserve(gts.size());
    for (const Box& g : gts) centers.push_back(box_center(g));

    std::vector<double> scores(grid.size(), 1.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (match.labels[i] != AnchorLabel::foreground) continue;
        const NeighborSet set = collect_neighbors(box_center(grid.boxes[i]), centers, cfg.window);
        scores[i] = pattern_score(true, set, cfg);
    }

    if (cfg.normalize == KernelNormalize::mean_one_foreground && match.n_foreground > 0) {
        double sum = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (match.labels[i] == AnchorLabel::foreground) sum += scores[i];
        }
        const double mean = sum / match.n_foreground;
        if (mean > 0) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (match.labels[i] == AnchorLabel::foreground) scores[i] /= mean;
            }
        }
    }
    return scores;
}

}  // namespace lpn
