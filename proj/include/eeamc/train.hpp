#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eeamc/dataset.hpp"
#include "eeamc/graph.hpp"
#include "eeamc/optimizer.hpp"

namespace eeamc {

struct TrainConfig {
    int epochs = 30;
    int batch_size = 128;
    OptimizerSpec opt1 = OptimizerSpec::adam(1e-3f);  // theta1: common + exit head
    OptimizerSpec opt2 = OptimizerSpec::adam(1e-3f);  // theta2: tail
    std::uint64_t seed = 42;
    bool shuffle = true;
    int patience = 0;  // 0 disables early stopping on backbone val accuracy

    void validate() const;
};

struct EpochStats {
    double loss1 = 0.0;
    double loss2 = 0.0;
    double val_acc_exit = 0.0;
    double val_acc_backbone = 0.0;
    double seconds = 0.0;
};
using TrainHistory = std::vector<EpochStats>;

/// Step controls used by tests: each update can be suppressed and the two
/// updates can be applied in either order (they commute on the disjoint
/// parameter partitions).
struct EEStepOptions {
    bool update_theta1 = true;
    bool update_theta2 = true;
    bool theta2_first = false;
};

/// One two-loss step on a batch: pass 1 and pass 2 run first (pass 2 from
/// the cached Q, no re-forward), then loss1 updates theta1 and loss2
/// updates theta2 only. Returns (loss1, loss2), batch means.
std::pair<double, double> train_step_ee(BranchGraph& g, const Tensor& x,
                                        const std::vector<std::uint8_t>& labels,
                                        Optimizer& opt1, Optimizer& opt2, Rng& dropout_rng,
                                        const EEStepOptions& opts = {});

/// Single-loss step for the baseline benchmark model.
double train_step_baseline(BranchGraph& g, const Tensor& x,
                           const std::vector<std::uint8_t>& labels, Optimizer& opt,
                           Rng& dropout_rng);

/// Epoch loop: seeded shuffle, train-mode steps, eval-mode validation.
/// Initializes the graph parameters from the config seed.
TrainHistory train_ee(BranchGraph& g, std::span<const LabeledExample> train_set,
                      std::span<const LabeledExample> val_set, const TrainConfig& cfg);

TrainHistory train_baseline(BranchGraph& g, std::span<const LabeledExample> train_set,
                            std::span<const LabeledExample> val_set, const TrainConfig& cfg);

struct EvalAccuracy {
    double exit_acc = 0.0;
    double backbone_acc = 0.0;
};

/// Eval-mode accuracy of both heads (baseline reports the backbone twice).
EvalAccuracy evaluate_graph(BranchGraph& g, std::span<const LabeledExample> examples,
                            int batch_size = 256);

void write_history_csv(const TrainHistory& history, const std::string& path);

/// Checkpoint sidecar: TrainConfig as key=value lines plus final metrics.
void write_checkpoint_sidecar(const TrainConfig& cfg, const TrainHistory& history,
                              Variant variant, const std::string& path);

} // namespace eeamc
