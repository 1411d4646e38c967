#pragma once

#include <cstdint>
#include <string>

#include "scgen/config.hpp"

namespace scgen {

// Options shared by every subcommand. config is the fully resolved run
// config (file plus flag overrides); out_dir receives all artifacts.
struct CliOptions {
    RunConfig config;
    std::string config_path; // "" when built-in defaults were used
    bool deterministic = false;
    std::string out_dir = "out";
};

struct MineArgs {
    std::string trajectories;
    std::string map; // "" selects a default three-lane straight map
};

struct CalibrateArgs {
    std::string catalog;
};

struct TrainArgs {
    std::string catalog;
};

struct GenerateArgs {
    std::string checkpoint;
    std::string catalog;
    size_t episodes = 5;
};

struct EvaluateArgs {
    std::string traces_dir; // trace mode when set
    std::string checkpoint; // live mode needs checkpoint + catalog
    std::string catalog;
    std::string thresholds; // optional; recalibrated from the catalog when ""
    size_t episodes = 10;
    std::string svo_angle; // "", degrees, "none", or "sweep"
};

struct PlotArgs {
    std::string input; // catalog .jsonl, metrics CSV, or episode trace CSV
    std::string map;   // optional lane map for plan views
    size_t index = 0;  // scenario index for catalog plots
};

// Subcommand bodies. They throw (ParseError/ConfigError/ValidationError for
// bad inputs, ArtifactError for incompatible artifacts); the CLI shell maps
// exceptions to exit codes.
void cmd_mine(const MineArgs& args, const CliOptions& opts);
void cmd_calibrate(const CalibrateArgs& args, const CliOptions& opts);
void cmd_train(const TrainArgs& args, const CliOptions& opts);
void cmd_generate(const GenerateArgs& args, const CliOptions& opts);
void cmd_evaluate(const EvaluateArgs& args, const CliOptions& opts);
void cmd_plot(const PlotArgs& args, const CliOptions& opts);

} // namespace scgen
