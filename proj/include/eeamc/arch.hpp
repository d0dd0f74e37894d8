#pragma once

#include <array>
#include <cstdint>

#include "eeamc/graph.hpp"

namespace eeamc {

/// Static plan for the backbone and the exit heads. Six conv blocks
/// (conv -> ReLU, optionally followed by max-pool + batch-norm), a final
/// max-pool, then three FC layers with dropout between them and a 10-way
/// softmax. Exit heads share one structure: max-pool -> FC -> dropout ->
/// FC(10) -> softmax, with the first FC width adapting to Q.
struct ArchConfig {
    std::array<int, 6> conv_channels{32, 32, 32, 32, 16, 16};
    std::array<int, 6> conv_kernels{3, 3, 3, 3, 3, 3};
    std::array<bool, 6> pool_bn_after{false, true, false, true, false, true};
    int pool_window = 2;
    int pool_stride = 2;
    std::array<int, 3> fc_widths{128, 64, 10};
    int exit_fc_width = 64;
    float dropout_rate = 0.3f;
    float bn_momentum = 0.1f;
    float bn_epsilon = 1e-5f;
    int num_classes = 10;
    int input_channels = 2;
    int input_length = 128;

    void validate() const;
};

// Index (1-based) of the last conv block inside the common part.
int branch_block(Variant v);

BranchGraph build_baseline(const ArchConfig& cfg);

// Variant::Baseline falls through to build_baseline.
BranchGraph build_ee_variant(Variant v, const ArchConfig& cfg);

/// Activation shape while walking a layer sequence symbolically: either a
/// (C, L) conv-stage map or a flat width after the first Dense.
struct ActShape {
    bool flat = false;
    int c = 0, l = 0;  // conv stage
    int d = 0;         // dense stage
    std::int64_t elements() const { return flat ? d : std::int64_t(c) * l; }
};

// Output shape of one layer; throws ConfigError naming the layer when an
// extent would shrink below 1 or widths do not line up.
ActShape layer_output_shape(const Layer& layer, const ActShape& in);

// Deterministic work proxy: multiply-accumulate count for Conv1D/Dense, one
// per output element for everything else.
std::int64_t layer_flops(const Layer& layer, const ActShape& in);

} // namespace eeamc
