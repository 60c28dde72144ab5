#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lpn/errors.hpp"
#include "lpn/spatial_kernel.hpp"

namespace lpn {

/// Reject unknown keys so a typo in a config silently changes nothing.
inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) throw ConfigError(context + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback, const std::string& context) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(context + "." + key + ": " + e.what());
    }
}

inline nlohmann::json kernel_to_json(const SpatialKernelConfig& cfg) {
    return {{"alpha", cfg.alpha},
            {"sigma_x", cfg.sigma_x},
            {"sigma_y", cfg.sigma_y},
            {"window", cfg.window},
            {"orientations", cfg.orientations},
            {"normalize", cfg.normalize == KernelNormalize::mean_one_foreground
                              ? "mean_one_foreground"
                              : "none"}};
}

/// Accepts either an explicit "orientations" list or an "orientation_count"
/// r expanded to theta_k = k*pi/r.
inline SpatialKernelConfig kernel_from_json(const nlohmann::json& j,
                                            const std::string& context = "kernel") {
    require_keys(j, {"alpha", "sigma_x", "sigma_y", "window", "orientations", "orientation_count",
                     "normalize"},
                 context);
    SpatialKernelConfig cfg;
    cfg.alpha = get_or(j, "alpha", cfg.alpha, context);
    cfg.sigma_x = get_or(j, "sigma_x", cfg.sigma_x, context);
    cfg.sigma_y = get_or(j, "sigma_y", cfg.sigma_y, context);
    cfg.window = get_or(j, "window", cfg.window, context);
    if (j.contains("orientations") && j.contains("orientation_count")) {
        throw ConfigError(context + ": give either orientations or orientation_count, not both");
    }
    if (j.contains("orientations")) {
        cfg.orientations = get_or(j, "orientations", cfg.orientations, context);
    } else if (j.contains("orientation_count")) {
        cfg.orientations = evenly_spaced_orientations(get_or(j, "orientation_count", 4, context));
    }
    const std::string normalize = get_or<std::string>(j, "normalize", "none", context);
    if (normalize == "none") {
        cfg.normalize = KernelNormalize::none;
    } else if (normalize == "mean_one_foreground") {
        cfg.normalize = KernelNormalize::mean_one_foreground;
    } else {
        throw ConfigError(context + ".normalize: expected 'none' or 'mean_one_foreground'");
    }
    cfg.validate();
    return cfg;
}

}  // namespace lpn
