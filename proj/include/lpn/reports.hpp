#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lpn/anchors.hpp"
#include "lpn/config.hpp"
#include "lpn/evaluate.hpp"
#include "lpn/loss.hpp"
#include "lpn/metrics.hpp"
#include "lpn/spatial_kernel.hpp"
#include "lpn/version.hpp"

namespace lpn {

// %.12g keeps CSV bytes deterministic across runs.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

inline std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Common report envelope: artifact version, resolved config, optional
/// timestamp (suppressed for byte-identical reruns).
inline nlohmann::json report_envelope(const RunConfig& cfg, bool with_timestamp) {
    nlohmann::json j;
    j["artifact_version"] = kVersion;
    j["config"] = config_to_json(cfg);
    if (with_timestamp) j["generated_at"] = utc_timestamp();
    return j;
}

inline std::string loss_history_csv(std::span<const LossBreakdown> history) {
    std::string out = "epoch,total,fg,bg,loc\n";
    for (std::size_t e = 0; e < history.size(); ++e) {
        out += std::to_string(e) + "," + format_double(history[e].total) + "," +
               format_double(history[e].fg_term) + "," + format_double(history[e].bg_term) + "," +
               format_double(history[e].loc_term) + "\n";
    }
    return out;
}

inline std::string ar_table_csv(const ArTable& table) {
    std::string out = "budget,ar,ar_ceiling\n";
    for (const ArRow& row : table.rows) {
        out += std::to_string(row.budget) + "," + format_double(row.ar) + "," +
               format_double(row.ar_ceiling) + "\n";
    }
    return out;
}

inline nlohmann::json ar_table_json(const ArTable& table, const RunConfig& cfg,
                                    bool with_timestamp) {
    nlohmann::json j = report_envelope(cfg, with_timestamp);
    j["iou_thresholds"] = table.thresholds;
    j["n_scenes"] = table.n_scenes;
    j["budgets_clamped"] = table.budgets_clamped;
    j["rows"] = nlohmann::json::array();
    for (const ArRow& row : table.rows) {
        j["rows"].push_back(
            {{"budget", row.budget}, {"ar", row.ar}, {"ar_ceiling", row.ar_ceiling}});
    }
    return j;
}

inline std::string counting_csv(const CountingReport& report) {
    std::string out = "scene_id,gt_count,predicted_count\n";
    for (const auto& s : report.scenes) {
        out += s.scene_id + "," + std::to_string(s.ground_truth) + "," +
               std::to_string(s.predicted) + "\n";
    }
    return out;
}

inline nlohmann::json counting_json(const CountingReport& report, const RunConfig& cfg,
                                    bool with_timestamp) {
    nlohmann::json j = report_envelope(cfg, with_timestamp);
    j["mae"] = report.mae;
    j["rmse"] = report.rmse;
    j["n_scenes"] = report.n();
    j["scenes"] = nlohmann::json::array();
    for (const auto& s : report.scenes) {
        j["scenes"].push_back({{"scene_id", s.scene_id},
                               {"gt_count", s.ground_truth},
                               {"predicted_count", s.predicted}});
    }
    return j;
}

/// One row per kept detection: scene_id,x1,y1,x2,y2,score.
inline std::string detections_csv(std::span<const SceneDetections> all) {
    std::string out = "scene_id,x1,y1,x2,y2,score\n";
    for (const SceneDetections& scene : all) {
        for (const Proposal& p : scene.detections) {
            out += scene.scene_id + "," + format_double(p.box.x1) + "," + format_double(p.box.y1) +
                   "," + format_double(p.box.x2) + "," + format_double(p.box.y2) + "," +
                   format_double(p.score) + "\n";
        }
    }
    return out;
}

/// Dense foreground-style pattern-score map sampled on the anchor-center
/// lattice; a plain CSV grid for external plotting.
inline std::string kernel_map_csv(std::span<const Box> gts, int image_w, int image_h, int stride,
                                  const SpatialKernelConfig& kernel) {
    kernel.validate();
    if (stride < 1) throw ConfigError("kernel map: stride must be >= 1");
    std::vector<Point> centers;
    centers.reserve(gts.size());
    for (const Box& g : gts) centers.push_back(box_center(g));

    const int cells_x = (image_w + stride - 1) / stride;
    const int cells_y = (image_h + stride - 1) / stride;
    std::string out;
    for (int gy = 0; gy < cells_y; ++gy) {
        for (int gx = 0; gx < cells_x; ++gx) {
            const Point c{(gx + 0.5) * stride, (gy + 0.5) * stride};
            const NeighborSet set = collect_neighbors(c, centers, kernel.window);
            const double k = set.neighbors.empty() ? 0.0 : pattern_score(true, set, kernel);
            if (gx > 0) out += ",";
            out += format_double(k);
        }
        out += "\n";
    }
    return out;
}

}  // namespace lpn
