#pragma once

#include <string>
#include <vector>

#include "ra/trainer.hpp"

namespace ra::config {

inline constexpr const char* kCodeVersion = "ra-marl 1.0.0";

// Reference values bundled with a preset so run reports can show the
// published numbers next to the reproduced ones.
struct ExpectedMetric {
    std::string name;
    double value = 0.0;
    std::string note;
};

struct ExperimentPreset {
    std::string name;
    std::string description;
    train::TrainConfig cfg;
    std::vector<ExpectedMetric> expectations;
};

const std::vector<ExperimentPreset>& presets();
const ExperimentPreset& find_preset(const std::string& name);
std::string preset_listing();

// Key=value config serialization; the CLI reads the same keys via its
// --config option, and flags override file values.
std::string config_to_ini(const train::TrainConfig& cfg);
train::TrainConfig config_from_ini(const std::string& text);

// Run-directory root: RA_MARL_RUN_ROOT env var, else "runs".
std::string run_root();
// Creates <root>/<name>, appending -2, -3, ... if taken.
std::string make_run_dir(const std::string& root, const std::string& name);

struct RunOptions {
    bool eval_after = true;
    train::EvalConfig eval; // ignored unless eval_after
    bool write_trace = false;
    bool plot_data = false;
    int log_every = 1; // print a progress line every n episodes; 0 = silent
};

train::EvalConfig default_eval_for(const train::TrainConfig& cfg);

struct RunArtifacts {
    std::string dir;
    train::TrainResult result;
    train::EvalResult eval;
    bool has_eval = false;
};

// Trains, evaluates, and writes the run directory: manifest.json,
// config.ini, train_log.csv, eval.csv, per_device.csv, checkpoint_final.ckpt
// and, for correlated traffic, membership.txt plus event_counts.csv.
RunArtifacts execute_train_run(const train::TrainConfig& cfg, const std::string& dir,
                               const RunOptions& opts);

// Reads <dir>/config.ini back and repeats the run into a fresh directory;
// every emitted metric file must come out byte-identical.
train::TrainConfig load_run_config(const std::string& dir);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace ra::config
