#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpn/anchors.hpp"
#include "lpn/data_io.hpp"
#include "lpn/detection.hpp"
#include "lpn/errors.hpp"
#include "lpn/json_util.hpp"
#include "lpn/loss.hpp"
#include "lpn/metrics.hpp"
#include "lpn/trainer.hpp"

namespace lpn {

/**
 * @brief Everything a run needs, resolved from one config document.
 *
 * Every report embeds the resolved config (and artifact version) so results
 * stay attributable to exact settings. Unknown keys anywhere in the
 * document are rejected.
 */
struct RunConfig {
    std::uint64_t seed = 1;
    std::string output_dir;  // optional; CLI --output overrides
    std::string manifest;    // optional; CLI --manifest overrides

    AnchorGridConfig anchors;      // image dims are taken from each scene
    LossConfig loss;               // includes the kernel config
    TrainOptions train;            // seed/jobs filled from the run at use time
    DetectionParams detection;
    std::vector<double> iou_thresholds = default_iou_thresholds();
    std::vector<int> proposal_budgets = {100, 300, 500, 700, 1000};
    GeneratorParams generator;
};

namespace detail {

inline AnchorGridConfig anchors_from_json(const nlohmann::json& j) {
    require_keys(j, {"stride", "sizes", "aspect_ratios", "exclude_cross_boundary"}, "anchors");
    AnchorGridConfig cfg;
    cfg.stride = get_or(j, "stride", cfg.stride, "anchors");
    if (j.contains("sizes")) {
        const auto raw = get_or(j, "sizes", std::vector<std::array<double, 2>>{}, "anchors");
        cfg.sizes.clear();
        for (const auto& s : raw) cfg.sizes.emplace_back(s[0], s[1]);
    }
    cfg.aspect_ratios = get_or(j, "aspect_ratios", cfg.aspect_ratios, "anchors");
    cfg.exclude_cross_boundary =
        get_or(j, "exclude_cross_boundary", cfg.exclude_cross_boundary, "anchors");
    return cfg;
}

inline nlohmann::json anchors_to_json(const AnchorGridConfig& cfg) {
    std::vector<std::array<double, 2>> sizes;
    for (const auto& [w, h] : cfg.sizes) sizes.push_back({w, h});
    return {{"stride", cfg.stride},
            {"sizes", sizes},
            {"aspect_ratios", cfg.aspect_ratios},
            {"exclude_cross_boundary", cfg.exclude_cross_boundary}};
}

inline GeneratorParams generator_from_json(const nlohmann::json& j) {
    require_keys(j,
                 {"image_w", "image_h", "rows", "slots_per_row", "slot_pitch", "row_pitch",
                  "occupancy", "jitter", "car_w", "car_h", "noise", "car_intensity",
                  "background_intensity", "orientations", "lots"},
                 "generator");
    GeneratorParams p;
    p.image_w = get_or(j, "image_w", p.image_w, "generator");
    p.image_h = get_or(j, "image_h", p.image_h, "generator");
    p.rows = get_or(j, "rows", p.rows, "generator");
    p.slots_per_row = get_or(j, "slots_per_row", p.slots_per_row, "generator");
    p.slot_pitch = get_or(j, "slot_pitch", p.slot_pitch, "generator");
    p.row_pitch = get_or(j, "row_pitch", p.row_pitch, "generator");
    p.occupancy = get_or(j, "occupancy", p.occupancy, "generator");
    p.jitter = get_or(j, "jitter", p.jitter, "generator");
    if (j.contains("car_w")) {
        const auto r = get_or(j, "car_w", std::array<int, 2>{}, "generator");
        p.car_w_min = r[0];
        p.car_w_max = r[1];
    }
    if (j.contains("car_h")) {
        const auto r = get_or(j, "car_h", std::array<int, 2>{}, "generator");
        p.car_h_min = r[0];
        p.car_h_max = r[1];
    }
    p.noise = get_or(j, "noise", p.noise, "generator");
    p.car_intensity = get_or(j, "car_intensity", p.car_intensity, "generator");
    p.background_intensity =
        get_or(j, "background_intensity", p.background_intensity, "generator");
    p.orientations = get_or(j, "orientations", p.orientations, "generator");
    p.lots = get_or(j, "lots", p.lots, "generator");
    return p;
}

inline nlohmann::json generator_to_json(const GeneratorParams& p) {
    return {{"image_w", p.image_w},
            {"image_h", p.image_h},
            {"rows", p.rows},
            {"slots_per_row", p.slots_per_row},
            {"slot_pitch", p.slot_pitch},
            {"row_pitch", p.row_pitch},
            {"occupancy", p.occupancy},
            {"jitter", p.jitter},
            {"car_w", std::array<int, 2>{p.car_w_min, p.car_w_max}},
            {"car_h", std::array<int, 2>{p.car_h_min, p.car_h_max}},
            {"noise", p.noise},
            {"car_intensity", p.car_intensity},
            {"background_intensity", p.background_intensity},
            {"orientations", p.orientations},
            {"lots", p.lots}};
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    require_keys(j,
                 {"seed", "output_dir", "manifest", "anchors", "kernel", "loss", "train",
                  "detection", "metrics", "generator"},
                 "config");
    RunConfig cfg;
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed, "config");
    cfg.output_dir = get_or<std::string>(j, "output_dir", "", "config");
    cfg.manifest = get_or<std::string>(j, "manifest", "", "config");

    if (j.contains("anchors")) cfg.anchors = detail::anchors_from_json(j.at("anchors"));
    if (j.contains("kernel")) cfg.loss.kernel = kernel_from_json(j.at("kernel"));

    if (j.contains("loss")) {
        const auto& l = j.at("loss");
        require_keys(l, {"gamma", "lambda", "pos_iou", "neg_iou", "use_kernel"}, "loss");
        cfg.loss.gamma = get_or(l, "gamma", cfg.loss.gamma, "loss");
        cfg.loss.lambda = get_or(l, "lambda", cfg.loss.lambda, "loss");
        cfg.loss.pos_iou = get_or(l, "pos_iou", cfg.loss.pos_iou, "loss");
        cfg.loss.neg_iou = get_or(l, "neg_iou", cfg.loss.neg_iou, "loss");
        cfg.loss.use_kernel = get_or(l, "use_kernel", cfg.loss.use_kernel, "loss");
        if (cfg.loss.gamma < 0 || cfg.loss.lambda < 0) {
            throw ConfigError("loss: gamma and lambda must be >= 0");
        }
        if (!(0 <= cfg.loss.neg_iou && cfg.loss.neg_iou <= cfg.loss.pos_iou &&
              cfg.loss.pos_iou <= 1)) {
            throw ConfigError("loss: need 0 <= neg_iou <= pos_iou <= 1");
        }
    }

    if (j.contains("train")) {
        const auto& t = j.at("train");
        require_keys(t, {"learning_rate", "momentum", "epochs", "feature_grid"}, "train");
        cfg.train.learning_rate = get_or(t, "learning_rate", cfg.train.learning_rate, "train");
        cfg.train.momentum = get_or(t, "momentum", cfg.train.momentum, "train");
        cfg.train.epochs = get_or(t, "epochs", cfg.train.epochs, "train");
        cfg.train.feature_grid = get_or(t, "feature_grid", cfg.train.feature_grid, "train");
    }

    if (j.contains("detection")) {
        const auto& d = j.at("detection");
        require_keys(d, {"score_threshold", "nms_iou", "top_n"}, "detection");
        cfg.detection.score_threshold =
            get_or(d, "score_threshold", cfg.detection.score_threshold, "detection");
        cfg.detection.nms_iou = get_or(d, "nms_iou", cfg.detection.nms_iou, "detection");
        cfg.detection.top_n = get_or(d, "top_n", cfg.detection.top_n, "detection");
        if (!(cfg.detection.score_threshold >= 0 && cfg.detection.score_threshold <= 1) ||
            !(cfg.detection.nms_iou >= 0 && cfg.detection.nms_iou <= 1)) {
            throw ConfigError("detection: thresholds must lie in [0, 1]");
        }
        if (cfg.detection.top_n < 1) throw ConfigError("detection: top_n must be >= 1");
    }

    if (j.contains("metrics")) {
        const auto& m = j.at("metrics");
        require_keys(m, {"iou_thresholds", "proposal_budgets"}, "metrics");
        cfg.iou_thresholds = get_or(m, "iou_thresholds", cfg.iou_thresholds, "metrics");
        cfg.proposal_budgets = get_or(m, "proposal_budgets", cfg.proposal_budgets, "metrics");
        if (cfg.iou_thresholds.empty()) throw ConfigError("metrics: iou_thresholds must not be empty");
        for (double t : cfg.iou_thresholds) {
            if (!(t >= 0.5 && t <= 1.0)) {
                throw ConfigError("metrics: iou_thresholds must lie in [0.5, 1]");
            }
        }
        for (int b : cfg.proposal_budgets) {
            if (b < 1) throw ConfigError("metrics: proposal budgets must be >= 1");
        }
    }

    if (j.contains("generator")) {
        cfg.generator = detail::generator_from_json(j.at("generator"));
        validate_generator(cfg.generator);
    }
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json gen = detail::generator_to_json(cfg.generator);
    nlohmann::json j = {
        {"seed", cfg.seed},
        {"anchors", detail::anchors_to_json(cfg.anchors)},
        {"kernel", kernel_to_json(cfg.loss.kernel)},
        {"loss",
         {{"gamma", cfg.loss.gamma},
          {"lambda", cfg.loss.lambda},
          {"pos_iou", cfg.loss.pos_iou},
          {"neg_iou", cfg.loss.neg_iou},
          {"use_kernel", cfg.loss.use_kernel}}},
        {"train",
         {{"learning_rate", cfg.train.learning_rate},
          {"momentum", cfg.train.momentum},
          {"epochs", cfg.train.epochs},
          {"feature_grid", cfg.train.feature_grid}}},
        {"detection",
         {{"score_threshold", cfg.detection.score_threshold},
          {"nms_iou", cfg.detection.nms_iou},
          {"top_n", cfg.detection.top_n}}},
        {"metrics",
         {{"iou_thresholds", cfg.iou_thresholds}, {"proposal_budgets", cfg.proposal_budgets}}},
        {"generator", gen},
    };
    // File-location fields (manifest, output_dir) are deliberately not
    // embedded: where inputs and reports live must not change report bytes.
    return j;
}

inline RunConfig load_config(const std::filesystem::path& path) {
    try {
        return config_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path.string() + ": " + e.what());
    }
}

}  // namespace lpn
