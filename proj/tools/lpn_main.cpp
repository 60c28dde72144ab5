// Command-line front end: scene generation, training, proposal evaluation,
// counting evaluation, and kernel-map dumps, all reproducible from one
// config document and one root seed.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lpn/lpn.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string manifest;
    std::string output;
    std::string kernel_mode;  // "", "on", "off"
    std::optional<std::uint64_t> seed;
    std::optional<int> budget;
    std::vector<int> budgets;
    int jobs = 1;
    bool no_timestamp = false;
};

void add_common_options(CLI::App* cmd, CommonArgs& args, bool with_manifest) {
    cmd->add_option("--config", args.config_path, "Run configuration file (JSON)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", args.seed, "Root seed overriding the config");
    cmd->add_option("--output", args.output, "Output directory");
    cmd->add_option("--jobs", args.jobs, "Worker threads for per-scene work")
        ->check(CLI::PositiveNumber);
    cmd->add_flag("--no-timestamp", args.no_timestamp,
                  "Omit timestamps so reruns are byte-identical");
    if (with_manifest) {
        cmd->add_option("--manifest", args.manifest, "Scene manifest (JSON list)");
    }
}

lpn::RunConfig resolve_config(const CommonArgs& args) {
    lpn::RunConfig cfg;
    if (!args.config_path.empty()) cfg = lpn::load_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (!args.manifest.empty()) cfg.manifest = args.manifest;
    if (!args.output.empty()) cfg.output_dir = args.output;
    if (args.kernel_mode == "on") cfg.loss.use_kernel = true;
    if (args.kernel_mode == "off") cfg.loss.use_kernel = false;
    if (args.budget) cfg.detection.top_n = *args.budget;
    if (!args.budgets.empty()) cfg.proposal_budgets = args.budgets;
    return cfg;
}

fs::path require_output_dir(const lpn::RunConfig& cfg) {
    if (cfg.output_dir.empty()) {
        throw lpn::ConfigError("an output directory is required (--output or config output_dir)");
    }
    const fs::path dir(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw lpn::ConfigError("cannot create output directory: " + dir.string());
    }
    return dir;
}

fs::path require_manifest(const lpn::RunConfig& cfg) {
    if (cfg.manifest.empty()) {
        throw lpn::ConfigError("a scene manifest is required (--manifest or config manifest)");
    }
    return fs::path(cfg.manifest);
}

std::string scene_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "scene_%04d", index);
    return buf;
}

// ---------------------------------------------------------------------------

int cmd_gen(const CommonArgs& args, int n_scenes) {
    lpn::RunConfig cfg = resolve_config(args);
    const fs::path out = require_output_dir(cfg);
    if (n_scenes < 0) throw lpn::ConfigError("--scenes must be >= 0");
    lpn::validate_generator(cfg.generator);

    std::vector<lpn::ManifestEntry> entries;
    for (int i = 0; i < n_scenes; ++i) {
        const std::string id = scene_name(i);
        const lpn::Scene scene =
            lpn::generate_scene(cfg.generator, lpn::seed_stream(cfg.seed, static_cast<std::uint64_t>(i)), id);
        const std::string annotation = id + ".txt";
        const std::string grid = id + ".grid";
        lpn::write_file(out / annotation, lpn::emit_annotations(scene.annotation));
        lpn::write_grid(out / grid, scene.grid);
        entries.push_back({id, annotation, grid, "lot" + std::to_string(i % cfg.generator.lots)});
    }
    lpn::write_manifest(out / "manifest.json", entries);
    std::cout << "wrote " << n_scenes << " scenes to " << out.string() << "\n";
    return 0;
}

int cmd_train(const CommonArgs& args) {
    lpn::RunConfig cfg = resolve_config(args);
    const fs::path out = require_output_dir(cfg);
    const auto scenes = lpn::load_scenes(require_manifest(cfg));

    lpn::TrainOptions opt = cfg.train;
    opt.seed = cfg.seed;
    opt.jobs = args.jobs;

    const auto t0 = std::chrono::steady_clock::now();
    const lpn::TrainResult result = lpn::train_scorer(scenes, cfg.anchors, cfg.loss, opt);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    lpn::save_model(out / "model.json", result.model);
    lpn::write_file(out / "loss_history.csv", lpn::loss_history_csv(result.history));

    nlohmann::json report = lpn::report_envelope(cfg, !args.no_timestamp);
    report["seed"] = cfg.seed;
    report["n_scenes"] = scenes.size();
    report["epochs"] = opt.epochs;
    report["kernel"] = cfg.loss.use_kernel ? "on" : "off";
    report["initial_total"] = result.history.front().total;
    report["final_total"] = result.history.back().total;
    if (!args.no_timestamp) report["wall_clock_seconds"] = elapsed;
    lpn::write_file(out / "train_report.json", report.dump(2) + "\n");

    std::cout << "trained on " << scenes.size() << " scenes: loss "
              << lpn::format_double(result.history.front().total) << " -> "
              << lpn::format_double(result.history.back().total) << "\n";
    return 0;
}

int cmd_eval_proposals(const CommonArgs& args, const std::string& model_path) {
    lpn::RunConfig cfg = resolve_config(args);
    const fs::path out = require_output_dir(cfg);
    const lpn::ScorerModel model = lpn::load_model(model_path);
    const auto scenes = lpn::load_scenes(require_manifest(cfg));

    const lpn::ArTable table = lpn::evaluate_proposals(model, scenes, cfg.anchors,
                                                       cfg.proposal_budgets, cfg.iou_thresholds,
                                                       args.jobs);
    if (table.budgets_clamped) {
        std::cerr << "warning: some budgets exceed the anchor count and were clamped\n";
    }
    lpn::write_file(out / "ar_table.csv", lpn::ar_table_csv(table));
    lpn::write_file(out / "ar_table.json",
                    lpn::ar_table_json(table, cfg, !args.no_timestamp).dump(2) + "\n");
    for (const lpn::ArRow& row : table.rows) {
        std::cout << "budget " << row.budget << ": ar " << lpn::format_double(row.ar)
                  << " (ceiling " << lpn::format_double(row.ar_ceiling) << ")\n";
    }
    return 0;
}

int cmd_eval_counting(const CommonArgs& args, const std::string& model_path) {
    lpn::RunConfig cfg = resolve_config(args);
    const fs::path out = require_output_dir(cfg);
    const lpn::ScorerModel model = lpn::load_model(model_path);
    const auto scenes = lpn::load_scenes(require_manifest(cfg));

    const lpn::CountingEvaluation eval =
        lpn::evaluate_counting(model, scenes, cfg.anchors, cfg.detection, args.jobs);
    lpn::write_file(out / "counting.csv", lpn::counting_csv(eval.report));
    lpn::write_file(out / "counting.json",
                    lpn::counting_json(eval.report, cfg, !args.no_timestamp).dump(2) + "\n");
    lpn::write_file(out / "detections.csv", lpn::detections_csv(eval.detections));
    std::cout << "counted " << eval.report.n() << " scenes: mae "
              << lpn::format_double(eval.report.mae) << ", rmse "
              << lpn::format_double(eval.report.rmse) << "\n";
    return 0;
}

int cmd_score(const CommonArgs& args, const std::string& scene_filter, int stride_override) {
    lpn::RunConfig cfg = resolve_config(args);
    const fs::path out = require_output_dir(cfg);
    const auto scenes = lpn::load_scenes(require_manifest(cfg));
    const int stride = stride_override > 0 ? stride_override : cfg.anchors.stride;

    bool matched = false;
    for (const lpn::Scene& scene : scenes) {
        if (!scene_filter.empty() && scene.annotation.scene_id != scene_filter) continue;
        matched = true;
        const std::string csv =
            lpn::kernel_map_csv(scene.annotation.boxes, scene.grid.width, scene.grid.height,
                                stride, cfg.loss.kernel);
        lpn::write_file(out / ("kernel_" + scene.annotation.scene_id + ".csv"), csv);
    }
    if (!scene_filter.empty() && !matched) {
        throw lpn::DataError("scene not found in manifest: " + scene_filter);
    }
    std::cout << "wrote kernel maps to " << out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatially regularized proposal scoring and object counting"};
    app.require_subcommand(1);

    CommonArgs gen_args, train_args, evalp_args, evalc_args, score_args;
    int n_scenes = 10;
    std::string model_path_p, model_path_c, scene_filter;
    int stride_override = 0;

    CLI::App* gen = app.add_subcommand("gen", "Generate synthetic scenes and a manifest");
    add_common_options(gen, gen_args, false);
    gen->add_option("--scenes", n_scenes, "Number of scenes to generate");

    CLI::App* train = app.add_subcommand("train", "Train the per-anchor scorer");
    add_common_options(train, train_args, true);
    train->add_option("--kernel", train_args.kernel_mode, "Spatial kernel on|off")
        ->check(CLI::IsMember({"on", "off"}));

    CLI::App* evalp = app.add_subcommand("eval-proposals", "Average recall per proposal budget");
    add_common_options(evalp, evalp_args, true);
    evalp->add_option("--model", model_path_p, "Trained model file")
        ->required()
        ->check(CLI::ExistingFile);
    evalp->add_option("--budgets", evalp_args.budgets, "Proposal budgets to evaluate");

    CLI::App* evalc = app.add_subcommand("eval-counting", "Detection-based counting errors");
    add_common_options(evalc, evalc_args, true);
    evalc->add_option("--model", model_path_c, "Trained model file")
        ->required()
        ->check(CLI::ExistingFile);
    evalc->add_option("--budget", evalc_args.budget, "Proposal budget fed to the counter");

    CLI::App* score = app.add_subcommand("score", "Dump dense pattern-score maps (CSV grids)");
    add_common_options(score, score_args, true);
    score->add_option("--scene", scene_filter, "Only this scene id");
    score->add_option("--stride", stride_override, "Lattice stride of the map")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return cmd_gen(gen_args, n_scenes);
        if (train->parsed()) return cmd_train(train_args);
        if (evalp->parsed()) return cmd_eval_proposals(evalp_args, model_path_p);
        if (evalc->parsed()) return cmd_eval_counting(evalc_args, model_path_c);
        if (score->parsed()) return cmd_score(score_args, scene_filter, stride_override);
        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const lpn::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const lpn::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const lpn::NumericError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
