#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eeamc/arch.hpp"
#include "eeamc/dataset.hpp"
#include "eeamc/inference.hpp"
#include "eeamc/train.hpp"

namespace eeamc {

/// Fully resolved experiment configuration. Every key has a default so an
/// empty config file runs; unknown keys are rejected with a line number.
/// Format: flat `section.key = value` lines, `#` comments, blank lines ok.
struct ExperimentConfig {
    GenConfig gen;
    std::uint64_t split_seed = 7;

    std::string variant = "v1";
    ArchConfig arch;

    TrainConfig train;
    std::string optimizer = "adam";  // adam | sgd
    double lr = 1e-3;
    double sgd_momentum = 0.0;

    GateConfig gate;
    std::vector<double> sweep_thresholds{0.05, 0.35, 0.6};
    int eval_repeats = 1;

    std::string dataset_path;
    std::string checkpoint_path;
    std::string out_dir = ".";

    // Pushes optimizer/lr into train.opt1/opt2 and validates everything.
    void finalize();
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Apply one `section.key = value` assignment (flag overrides reuse the
// config key set). Throws ConfigError for unknown keys or bad values.
void apply_config_key(ExperimentConfig& cfg, const std::string& key, const std::string& value);

// Canonical echo of every key, one per line, in a fixed order. Written next
// to each output artifact for provenance.
std::string echo_config(const ExperimentConfig& cfg);

} // namespace eeamc
