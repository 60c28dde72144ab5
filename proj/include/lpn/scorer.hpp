#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "lpn/anchors.hpp"
#include "lpn/data_io.hpp"
#include "lpn/errors.hpp"
#include "lpn/json_util.hpp"
#include "lpn/loss.hpp"
#include "lpn/random.hpp"
#include "lpn/spatial_kernel.hpp"
#include "lpn/version.hpp"

namespace lpn {

/**
 * @brief Differentiable per-anchor scorer: one affine map from an occupancy
 * feature vector to a classification logit and four offset outputs.
 *
 * Features are the anchor window resampled to a feature_grid x feature_grid
 * cell grid of image intensities plus a trailing bias feature, so the
 * parameter count is (feature_grid^2 + 1) * 5. Weights are stored row-major
 * with row 0 the logit and rows 1..4 the tx/ty/tw/th offsets.
 */
struct ScorerModel {
    int feature_grid = 8;
    std::vector<double> weights;
    SpatialKernelConfig kernel;  // kernel configuration the model was trained under

    static constexpr int kOutputs = 5;

    int n_features() const { return feature_grid * feature_grid + 1; }
    int n_parameters() const { return n_features() * kOutputs; }

    const double* row(int r) const { return weights.data() + static_cast<std::size_t>(r) * n_features(); }
    double* row(int r) { return weights.data() + static_cast<std::size_t>(r) * n_features(); }

    /// Small seeded random init; equal seeds give bit-identical models.
    static ScorerModel init(int feature_grid, std::uint64_t seed,
                            const SpatialKernelConfig& kernel = {}) {
        if (feature_grid < 1) throw ConfigError("scorer: feature grid must be >= 1");
        ScorerModel model;
        model.feature_grid = feature_grid;
        model.kernel = kernel;
        model.weights.resize(static_cast<std::size_t>(model.n_parameters()));
        Rng rng(seed);
        for (double& w : model.weights) w = 0.01 * (2 * uniform_double(rng) - 1);
        return model;
    }
};

/// Fill `out` (size n_features) with the anchor window resampled to a
/// g x g grid; cells sample the intensity at their center, 0 outside the
/// image. The final element is the constant bias feature.
template <typename Float>
void extract_features(const ImageGrid& image, const Box& anchor, int feature_grid,
                      std::span<Float> out) {
    const int g = feature_grid;
    const double cell_w = anchor.width() / g;
    const double cell_h = anchor.height() / g;
    std::size_t k = 0;
    for (int r = 0; r < g; ++r) {
        const double y = anchor.y1 + (r + 0.5) * cell_h;
        for (int c = 0; c < g; ++c) {
            const double x = anchor.x1 + (c + 0.5) * cell_w;
            out[k++] = static_cast<Float>(image.sample(x, y));
        }
    }
    out[k] = Float{1};  // bias
}

struct ScorerOutput {
    double logit = 0;
    double prob = 0;  // sigmoid(logit), clamped away from {0, 1}
    OffsetVector offsets;
};

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename Float>
ScorerOutput score_features(const ScorerModel& model, std::span<const Float> features) {
    const int nf = model.n_features();
    double out[ScorerModel::kOutputs] = {};
    for (int r = 0; r < ScorerModel::kOutputs; ++r) {
        const double* w = model.row(r);
        double acc = 0;
        for (int k = 0; k < nf; ++k) acc += w[k] * static_cast<double>(features[static_cast<std::size_t>(k)]);
        out[r] = acc;
    }
    ScorerOutput result;
    result.logit = out[0];
    result.prob = clamp_prob(sigmoid(out[0]));
    result.offsets = {out[1], out[2], out[3], out[4]};
    return result;
}

/// Deterministic forward pass over every anchor of a grid (tied
/// classification scores: q = u).
inline PredictionBatch score_anchors(const ScorerModel& model, const ImageGrid& image,
                                     const AnchorGrid& grid) {
    PredictionBatch pred;
    pred.fg_prob.resize(grid.size());
    pred.offsets.resize(grid.size());
    std::vector<double> features(static_cast<std::size_t>(model.n_features()));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        extract_features<double>(image, grid.boxes[i], model.feature_grid, features);
        const ScorerOutput out = score_features<double>(model, features);
        pred.fg_prob[i] = out.prob;
        pred.offsets[i] = out.offsets;
    }
    return pred;
}

// --------------------------------------------------------------------------
// Model serialization: versioned JSON with the feature grid size, the
// parameter array, and the kernel configuration used during training.
// --------------------------------------------------------------------------

inline nlohmann::json model_to_json(const ScorerModel& model) {
    return {{"format_version", kModelFormatVersion},
            {"artifact_version", kVersion},
            {"feature_grid", model.feature_grid},
            {"weights", model.weights},
            {"kernel", kernel_to_json(model.kernel)}};
}

inline ScorerModel model_from_json(const nlohmann::json& j) {
    require_keys(j, {"format_version", "artifact_version", "feature_grid", "weights", "kernel"},
                 "model");
    const int version = get_or(j, "format_version", 0, "model");
    if (version != kModelFormatVersion) {
        throw DataError("model: unsupported format_version " + std::to_string(version));
    }
    ScorerModel model;
    model.feature_grid = get_or(j, "feature_grid", 0, "model");
    if (model.feature_grid < 1) throw DataError("model: feature_grid must be >= 1");
    model.weights = get_or(j, "weights", std::vector<double>{}, "model");
    if (model.weights.size() != static_cast<std::size_t>(model.n_parameters())) {
        throw DataError("model: expected " + std::to_string(model.n_parameters()) +
                        " weights, got " + std::to_string(model.weights.size()));
    }
    if (j.contains("kernel")) model.kernel = kernel_from_json(j.at("kernel"), "model.kernel");
    return model;
}

inline void save_model(const std::filesystem::path& path, const ScorerModel& model) {
    write_file(path, model_to_json(model).dump(2) + "\n");
}

inline ScorerModel load_model(const std::filesystem::path& path) {
    try {
        return model_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("model parse error in " + path.string() + ": " + e.what());
    }
}

}  // namespace lpn
