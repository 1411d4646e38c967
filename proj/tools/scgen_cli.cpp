#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "scgen/commands.hpp"
#include "scgen/errors.hpp"
#include "scgen/manifest.hpp"

namespace {

std::string resolve_config_path(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    const char* dir = std::getenv("SCGEN_CONFIG_DIR");
    if (dir != nullptr && *dir != '\0') {
        std::filesystem::path candidate = std::filesystem::path(dir) / "scgen.json";
        std::error_code ec;
        if (std::filesystem::exists(candidate, ec)) return candidate.string();
    }
    return "";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"scgen: lane-change scenario mining and adversarial traffic generation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", scgen::tool_version());

    std::string config_flag;
    std::string out_dir = "out";
    bool deterministic = false;
    std::optional<uint64_t> seed;
    std::optional<size_t> workers;
    app.add_option("--config", config_flag,
                   "run config JSON (default: $SCGEN_CONFIG_DIR/scgen.json when present)");
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_flag("--deterministic", deterministic,
                 "zero manifest timestamps for byte-reproducible artifacts");
    app.add_option("--seed", seed, "override trainer.seed");
    app.add_option("--workers", workers, "override trainer.workers");

    scgen::MineArgs mine_args;
    CLI::App* mine = app.add_subcommand("mine", "extract lane-change scenarios from a corpus");
    mine->add_option("trajectories", mine_args.trajectories, "trajectory CSV corpus")->required();
    mine->add_option("--map", mine_args.map, "lane map JSON (default: straight 3-lane map)");

    scgen::CalibrateArgs calibrate_args;
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "derive risk thresholds from a mined catalog");
    calibrate->add_option("catalog", calibrate_args.catalog, "scenario catalog JSONL")->required();

    scgen::TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "train the adversarial policy on a catalog");
    train->add_option("catalog", train_args.catalog, "scenario catalog JSONL")->required();

    scgen::GenerateArgs generate_args;
    CLI::App* generate = app.add_subcommand("generate", "roll out episodes from a checkpoint");
    generate->add_option("checkpoint", generate_args.checkpoint, "trained checkpoint JSON")
        ->required();
    generate->add_option("catalog", generate_args.catalog, "scenario catalog JSONL")->required();
    generate->add_option("--episodes", generate_args.episodes, "episode count (default 5)");

    scgen::EvaluateArgs evaluate_args;
    CLI::App* evaluate = app.add_subcommand("evaluate", "score episodes with the risk metric");
    evaluate->add_option("--traces", evaluate_args.traces_dir, "directory of episode traces");
    evaluate->add_option("--checkpoint", evaluate_args.checkpoint,
                         "checkpoint for live evaluation");
    evaluate->add_option("--catalog", evaluate_args.catalog,
                         "catalog for live evaluation or threshold calibration");
    evaluate->add_option("--thresholds", evaluate_args.thresholds,
                         "thresholds JSON from calibrate");
    evaluate->add_option("--episodes", evaluate_args.episodes,
                         "episodes per evaluation run (default 10)");
    evaluate->add_option("--svo-angle", evaluate_args.svo_angle,
                         "fixed angle in degrees, \"none\" for adaptive, or \"sweep\"");

    scgen::PlotArgs plot_args;
    CLI::App* plot = app.add_subcommand("plot", "render a catalog, trace, or metrics file to SVG");
    plot->add_option("input", plot_args.input, "catalog .jsonl, metrics CSV, or trace CSV")
        ->required();
    plot->add_option("--map", plot_args.map, "lane map JSON for plan views");
    plot->add_option("--index", plot_args.index, "scenario index for catalog plots (default 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        scgen::CliOptions opts;
        opts.config_path = resolve_config_path(config_flag);
        if (!opts.config_path.empty()) opts.config = scgen::load_run_config(opts.config_path);
        if (seed.has_value()) opts.config.trainer.seed = *seed;
        if (workers.has_value()) opts.config.trainer.workers = *workers;
        opts.deterministic = deterministic;
        opts.out_dir = out_dir;

        if (mine->parsed()) scgen::cmd_mine(mine_args, opts);
        else if (calibrate->parsed()) scgen::cmd_calibrate(calibrate_args, opts);
        else if (train->parsed()) scgen::cmd_train(train_args, opts);
        else if (generate->parsed()) scgen::cmd_generate(generate_args, opts);
        else if (evaluate->parsed()) scgen::cmd_evaluate(evaluate_args, opts);
        else if (plot->parsed()) scgen::cmd_plot(plot_args, opts);
        return 0;
    } catch (const scgen::ArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
