#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lpn/errors.hpp"
#include "lpn/geometry.hpp"
#include "lpn/random.hpp"

namespace lpn {

/// Row-major single-channel intensity image with values in [0, 1].
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<float> values;

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }

    /// Intensity at a continuous point; 0 outside the image.
    float sample(double x, double y) const {
        const int px = static_cast<int>(std::floor(x));
        const int py = static_cast<int>(std::floor(y));
        if (px < 0 || py < 0 || px >= width || py >= height) return 0.0f;
        return at(px, py);
    }
};

/// One scene's ground truth. Boxes are clamped to the image rectangle on
/// construction; boxes that needed clamping are flagged.
struct SceneAnnotation {
    enum class Source { parsed, synthetic };

    std::string scene_id;
    int image_w = 0;
    int image_h = 0;
    std::vector<Box> boxes;
    std::vector<std::uint8_t> clamped;
    std::vector<std::string> warnings;
    Source source = Source::parsed;

    int count() const { return static_cast<int>(boxes.size()); }
};

inline SceneAnnotation make_scene_annotation(std::string scene_id, int image_w, int image_h,
                                             std::vector<Box> boxes,
                                             SceneAnnotation::Source source) {
    SceneAnnotation ann;
    ann.scene_id = std::move(scene_id);
    ann.image_w = image_w;
    ann.image_h = image_h;
    ann.source = source;
    ann.boxes = std::move(boxes);
    ann.clamped.resize(ann.boxes.size(), 0);
    for (std::size_t i = 0; i < ann.boxes.size(); ++i) {
        Box& b = ann.boxes[i];
        const Box original = b;
        b.x1 = std::clamp(b.x1, 0.0, static_cast<double>(image_w));
        b.x2 = std::clamp(b.x2, 0.0, static_cast<double>(image_w));
        b.y1 = std::clamp(b.y1, 0.0, static_cast<double>(image_h));
        b.y2 = std::clamp(b.y2, 0.0, static_cast<double>(image_h));
        if (b != original) {
            ann.clamped[i] = 1;
            ann.warnings.push_back("box " + std::to_string(i) + " clamped to image bounds: " +
                                   to_string(original) + " -> " + to_string(b));
        }
    }
    return ann;
}

struct Scene {
    SceneAnnotation annotation;
    ImageGrid grid;
    std::string lot_tag;
};

// ---------------------------------------------------------------------------
// Annotation text format
//
// One box per line: 4 or 5 whitespace-separated integers
//   x1 y1 x2 y2 [class]
// with (x1, y1) the top-left and (x2, y2) the bottom-right corner. The
// optional 5th field must equal the car class tag. Blank lines are ignored.
// The canonical emitted form always carries the class tag.
// ---------------------------------------------------------------------------

inline constexpr long kCarClassTag = 1;

/// Parse an annotation document. Swapped corners are corrected with a
/// recorded warning; anything else malformed raises DataError naming the
/// line number.
inline SceneAnnotation parse_annotations(std::string_view text, std::string scene_id, int image_w,
                                         int image_h) {
    std::vector<Box> boxes;
    std::vector<std::string> swap_warnings;

    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        std::istringstream fields{std::string(line)};
        std::vector<long> nums;
        std::string token;
        bool bad = false;
        while (fields >> token) {
            std::size_t used = 0;
            long v = 0;
            try {
                v = std::stol(token, &used);
            } catch (const std::exception&) {
                bad = true;
                break;
            }
            if (used != token.size()) {
                bad = true;
                break;
            }
            nums.push_back(v);
        }
        if (nums.empty() && !bad) continue;  // blank line
        if (bad || (nums.size() != 4 && nums.size() != 5)) {
            throw DataError("annotation parse error at line " + std::to_string(line_no) +
                            ": expected 4 or 5 integers, got '" + std::string(line) + "'");
        }
        if (nums.size() == 5 && nums[4] != kCarClassTag) {
            throw DataError("annotation parse error at line " + std::to_string(line_no) +
                            ": unknown class tag " + std::to_string(nums[4]));
        }
        double x1 = static_cast<double>(nums[0]);
        double y1 = static_cast<double>(nums[1]);
        double x2 = static_cast<double>(nums[2]);
        double y2 = static_cast<double>(nums[3]);
        if (x1 > x2 || y1 > y2) {
            swap_warnings.push_back("line " + std::to_string(line_no) +
                                    ": swapped corners corrected");
            if (x1 > x2) std::swap(x1, x2);
            if (y1 > y2) std::swap(y1, y2);
        }
        boxes.emplace_back(x1, y1, x2, y2);
    }

    SceneAnnotation ann =
        make_scene_annotation(std::move(scene_id), image_w, image_h, std::move(boxes),
                              SceneAnnotation::Source::parsed);
    ann.warnings.insert(ann.warnings.begin(), swap_warnings.begin(), swap_warnings.end());
    return ann;
}

/// Canonical annotation text: one "x1 y1 x2 y2 1" line per box.
/// Coordinates are rounded to integers (the format is integral).
inline std::string emit_annotations(const SceneAnnotation& ann) {
    std::string out;
    char buf[96];
    for (const Box& b : ann.boxes) {
        std::snprintf(buf, sizeof(buf), "%ld %ld %ld %ld %ld\n", std::lround(b.x1),
                      std::lround(b.y1), std::lround(b.x2), std::lround(b.y2), kCarClassTag);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Intensity grid binary format: 16-byte header (magic "LPGRID01",
// u32-LE width, u32-LE height) followed by width*height f32-LE values,
// row-major.
// ---------------------------------------------------------------------------

inline constexpr char kGridMagic[8] = {'L', 'P', 'G', 'R', 'I', 'D', '0', '1'};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace detail

inline std::string encode_grid(const ImageGrid& grid) {
    std::string out;
    out.reserve(16 + grid.values.size() * 4);
    out.append(kGridMagic, sizeof(kGridMagic));
    detail::put_u32_le(out, static_cast<std::uint32_t>(grid.width));
    detail::put_u32_le(out, static_cast<std::uint32_t>(grid.height));
    for (float v : grid.values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        detail::put_u32_le(out, bits);
    }
    return out;
}

inline ImageGrid decode_grid(std::string_view bytes) {
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kGridMagic, 8) != 0) {
        throw DataError("grid decode: missing LPGRID01 header");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    ImageGrid grid;
    grid.width = static_cast<int>(detail::get_u32_le(p + 8));
    grid.height = static_cast<int>(detail::get_u32_le(p + 12));
    const std::size_t n = static_cast<std::size_t>(grid.width) * grid.height;
    if (bytes.size() != 16 + n * 4) {
        throw DataError("grid decode: payload size does not match header dimensions");
    }
    grid.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t bits = detail::get_u32_le(p + 16 + i * 4);
        std::memcpy(&grid.values[i], &bits, 4);
    }
    return grid;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open for reading: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return std::move(buf).str();
}

inline void write_grid(const std::filesystem::path& path, const ImageGrid& grid) {
    write_file(path, encode_grid(grid));
}

inline ImageGrid read_grid(const std::filesystem::path& path) {
    return decode_grid(read_file(path));
}

// ---------------------------------------------------------------------------
// Synthetic parking-lot scenes: cars placed on a (possibly rotated) row
// lattice, rendered as filled rectangles on a noisy intensity grid.
// ---------------------------------------------------------------------------

struct GeneratorParams {
    int image_w = 192;
    int image_h = 192;
    int rows = 3;
    int slots_per_row = 5;
    double slot_pitch = 32;  // center spacing along a row; wide enough for any row orientation
    double row_pitch = 36;   // spacing between row centerlines
    double occupancy = 0.6;  // probability a slot holds a car
    double jitter = 2.0;     // max |dx|, |dy| of car-center jitter
    int car_w_min = 12, car_w_max = 16;
    int car_h_min = 10, car_h_max = 14;
    double noise = 0.1;              // additive noise amplitude
    double car_intensity = 0.9;      // base value inside car rectangles
    double background_intensity = 0.1;
    std::vector<double> orientations = {0.0};  // row directions, drawn per scene
    int lots = 4;  // scenes are tagged round-robin across this many lots
};

namespace detail {

struct LatticeBounds {
    double min_x, max_x, min_y, max_y;
};

inline LatticeBounds lattice_bounds(const GeneratorParams& p, double theta) {
    const double cx0 = p.image_w / 2.0;
    const double cy0 = p.image_h / 2.0;
    const double ct = std::cos(theta), st = std::sin(theta);
    LatticeBounds b{1e300, -1e300, 1e300, -1e300};
    for (int r = 0; r < p.rows; ++r) {
        for (int s = 0; s < p.slots_per_row; ++s) {
            const double lx = (s - (p.slots_per_row - 1) / 2.0) * p.slot_pitch;
            const double ly = (r - (p.rows - 1) / 2.0) * p.row_pitch;
            const double gx = cx0 + lx * ct - ly * st;
            const double gy = cy0 + lx * st + ly * ct;
            b.min_x = std::min(b.min_x, gx);
            b.max_x = std::max(b.max_x, gx);
            b.min_y = std::min(b.min_y, gy);
            b.max_y = std::max(b.max_y, gy);
        }
    }
    return b;
}

}  // namespace detail

/// Raises ConfigError when the layout could produce overlapping or
/// out-of-bounds cars for any configured orientation. Overlap is checked
/// against the four nearest-neighbor lattice offsets; the extra pixel
/// absorbs corner rounding.
inline void validate_generator(const GeneratorParams& p) {
    if (p.image_w <= 0 || p.image_h <= 0) throw ConfigError("generator: image dims must be positive");
    if (p.rows < 1 || p.slots_per_row < 1) throw ConfigError("generator: rows/slots must be >= 1");
    if (!(p.occupancy >= 0 && p.occupancy <= 1)) {
        throw ConfigError("generator: occupancy must lie in [0, 1]");
    }
    if (p.car_w_min < 1 || p.car_h_min < 1 || p.car_w_max < p.car_w_min ||
        p.car_h_max < p.car_h_min) {
        throw ConfigError("generator: invalid car size range");
    }
    if (p.jitter < 0 || p.noise < 0) throw ConfigError("generator: jitter/noise must be >= 0");
    if (p.orientations.empty()) throw ConfigError("generator: at least one orientation required");
    if (p.lots < 1) throw ConfigError("generator: lots must be >= 1");

    const double w_eff = p.car_w_max + 2 * p.jitter + 1;
    const double h_eff = p.car_h_max + 2 * p.jitter + 1;
    for (double theta : p.orientations) {
        const double ct = std::cos(theta), st = std::sin(theta);
        const double offsets[4][2] = {
            {p.slot_pitch * ct, p.slot_pitch * st},
            {-p.row_pitch * st, p.row_pitch * ct},
            {p.slot_pitch * ct - p.row_pitch * st, p.slot_pitch * st + p.row_pitch * ct},
            {p.slot_pitch * ct + p.row_pitch * st, p.slot_pitch * st - p.row_pitch * ct},
        };
        for (const auto& o : offsets) {
            const bool separated = std::abs(o[0]) >= w_eff || std::abs(o[1]) >= h_eff;
            const bool relevant = (p.slots_per_row > 1) || (p.rows > 1);
            if (relevant && !separated) {
                throw ConfigError("generator: slot pitch too small, cars could overlap");
            }
        }
        const auto b = detail::lattice_bounds(p, theta);
        const double margin_x = p.car_w_max / 2.0 + p.jitter + 1;
        const double margin_y = p.car_h_max / 2.0 + p.jitter + 1;
        if (b.min_x - margin_x < 0 || b.max_x + margin_x > p.image_w || b.min_y - margin_y < 0 ||
            b.max_y + margin_y > p.image_h) {
            throw ConfigError("generator: layout does not fit inside the image");
        }
    }
}

/**
 * @brief Deterministic synthetic scene from (params, seed).
 *
 * Slots are visited row-major; each is occupied with probability
 * `occupancy`, sized uniformly from the integer size range, and
 * center-jittered by at most `jitter` pixels. Box corners are snapped to
 * integer pixels so annotation files round-trip exactly. The intensity
 * grid renders cars over background with additive uniform noise.
 */
inline Scene generate_scene(const GeneratorParams& params, std::uint64_t seed,
                            std::string scene_id = {}) {
    validate_generator(params);
    Rng rng(seed);

    const double theta =
        params.orientations[static_cast<std::size_t>(uniform_int(
            rng, 0, static_cast<long>(params.orientations.size()) - 1))];
    const double ct = std::cos(theta), st = std::sin(theta);
    const double cx0 = params.image_w / 2.0;
    const double cy0 = params.image_h / 2.0;

    std::vector<Box> boxes;
    for (int r = 0; r < params.rows; ++r) {
        for (int s = 0; s < params.slots_per_row; ++s) {
            if (uniform_double(rng) >= params.occupancy) continue;
            const double w = static_cast<double>(uniform_int(rng, params.car_w_min, params.car_w_max));
            const double h = static_cast<double>(uniform_int(rng, params.car_h_min, params.car_h_max));
            const double jx = params.jitter > 0 ? uniform_double(rng, -params.jitter, params.jitter) : 0.0;
            const double jy = params.jitter > 0 ? uniform_double(rng, -params.jitter, params.jitter) : 0.0;
            const double lx = (s - (params.slots_per_row - 1) / 2.0) * params.slot_pitch;
            const double ly = (r - (params.rows - 1) / 2.0) * params.row_pitch;
            const double cx = cx0 + lx * ct - ly * st + jx;
            const double cy = cy0 + lx * st + ly * ct + jy;
            const double x1 = std::round(cx - w / 2);
            const double y1 = std::round(cy - h / 2);
            boxes.emplace_back(x1, y1, x1 + w, y1 + h);
        }
    }

    Scene scene;
    scene.annotation = make_scene_annotation(std::move(scene_id), params.image_w, params.image_h,
                                             boxes, SceneAnnotation::Source::synthetic);
    if (!scene.annotation.warnings.empty()) {
        throw NumericError("generate_scene: internal layout bug, box escaped image bounds");
    }

    ImageGrid& grid = scene.grid;
    grid.width = params.image_w;
    grid.height = params.image_h;
    grid.values.assign(static_cast<std::size_t>(grid.width) * grid.height,
                       static_cast<float>(params.background_intensity));
    for (const Box& b : boxes) {
        const int x1 = static_cast<int>(b.x1), y1 = static_cast<int>(b.y1);
        const int x2 = static_cast<int>(b.x2), y2 = static_cast<int>(b.y2);
        for (int y = y1; y < y2; ++y) {
            for (int x = x1; x < x2; ++x) {
                grid.at(x, y) = static_cast<float>(params.car_intensity);
            }
        }
    }
    if (params.noise > 0) {
        for (float& v : grid.values) {
            v += static_cast<float>(params.noise * (2 * uniform_double(rng) - 1));
            v = std::clamp(v, 0.0f, 1.0f);
        }
    }
    return scene;
}

// ---------------------------------------------------------------------------
// Scene manifest: JSON list of {scene_id, annotation, grid, lot}; paths are
// relative to the manifest's directory.
// ---------------------------------------------------------------------------

struct ManifestEntry {
    std::string scene_id;
    std::string annotation_path;
    std::string grid_path;
    std::string lot_tag;
};

inline void write_manifest(const std::filesystem::path& path,
                           std::span<const ManifestEntry> entries) {
    nlohmann::json j = nlohmann::json::array();
    for (const ManifestEntry& e : entries) {
        j.push_back({{"scene_id", e.scene_id},
                     {"annotation", e.annotation_path},
                     {"grid", e.grid_path},
                     {"lot", e.lot_tag}});
    }
    write_file(path, j.dump(2) + "\n");
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest parse error in " + path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw DataError("manifest must be a JSON list: " + path.string());
    std::vector<ManifestEntry> entries;
    for (const auto& item : j) {
        if (!item.is_object() || !item.contains("scene_id") || !item.contains("annotation") ||
            !item.contains("grid") || !item.contains("lot")) {
            throw DataError("manifest entry missing scene_id/annotation/grid/lot: " +
                            path.string());
        }
        entries.push_back({item.at("scene_id").get<std::string>(),
                           item.at("annotation").get<std::string>(),
                           item.at("grid").get<std::string>(),
                           item.at("lot").get<std::string>()});
    }
    return entries;
}

inline Scene load_scene(const ManifestEntry& entry, const std::filesystem::path& base_dir) {
    Scene scene;
    scene.grid = read_grid(base_dir / entry.grid_path);
    scene.annotation = parse_annotations(read_file(base_dir / entry.annotation_path),
                                         entry.scene_id, scene.grid.width, scene.grid.height);
    scene.lot_tag = entry.lot_tag;
    return scene;
}

inline std::vector<Scene> load_scenes(const std::filesystem::path& manifest_path) {
    const auto entries = read_manifest(manifest_path);
    const auto base = manifest_path.parent_path();
    std::vector<Scene> scenes;
    scenes.reserve(entries.size());
    for (const ManifestEntry& e : entries) scenes.push_back(load_scene(e, base));
    return scenes;
}

// ---------------------------------------------------------------------------
// Dataset splits
// ---------------------------------------------------------------------------

struct SplitResult {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

namespace detail {

inline std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates, fixed draw order
        const auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<long>(i) - 1));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

}  // namespace detail

/// Disjoint, exhaustive k-fold partition; fold `fold_index` is the test set.
inline SplitResult kfold_split(std::size_t n_scenes, int folds, int fold_index,
                               std::uint64_t seed) {
    if (n_scenes < 2) throw ConfigError("dataset split: need at least 2 scenes");
    if (folds < 2 || static_cast<std::size_t>(folds) > n_scenes) {
        throw ConfigError("dataset split: fold count must lie in [2, n_scenes]");
    }
    if (fold_index < 0 || fold_index >= folds) {
        throw ConfigError("dataset split: fold index out of range");
    }
    const auto idx = detail::shuffled_indices(n_scenes, seed);
    SplitResult split;
    for (std::size_t i = 0; i < n_scenes; ++i) {
        // Fold f takes positions [f*n/k, (f+1)*n/k), sizes differing by <= 1.
        const auto fold = static_cast<int>(i * static_cast<std::size_t>(folds) / n_scenes);
        (fold == fold_index ? split.test : split.train).push_back(idx[i]);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

/// Random train/test split by fraction (at least one scene on each side).
inline SplitResult fraction_split(std::size_t n_scenes, double train_fraction,
                                  std::uint64_t seed) {
    if (n_scenes < 2) throw ConfigError("dataset split: need at least 2 scenes");
    if (!(train_fraction > 0 && train_fraction < 1)) {
        throw ConfigError("dataset split: train fraction must lie in (0, 1)");
    }
    auto n_train =
        static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(n_scenes)));
    n_train = std::clamp<std::size_t>(n_train, 1, n_scenes - 1);
    const auto idx = detail::shuffled_indices(n_scenes, seed);
    SplitResult split;
    split.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    split.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

/// Hold out every scene of one lot: train on the rest.
inline SplitResult holdout_split(std::span<const std::string> lot_tags, std::string_view test_tag) {
    if (lot_tags.size() < 2) throw ConfigError("dataset split: need at least 2 scenes");
    SplitResult split;
    for (std::size_t i = 0; i < lot_tags.size(); ++i) {
        (lot_tags[i] == test_tag ? split.test : split.train).push_back(i);
    }
    if (split.test.empty()) {
        throw ConfigError("dataset split: no scene carries the held-out lot tag '" +
                          std::string(test_tag) + "'");
    }
    if (split.train.empty()) {
        throw ConfigError("dataset split: held-out lot tag covers every scene");
    }
    return split;
}

}  // namespace lpn
