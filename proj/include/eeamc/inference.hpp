#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eeamc/arch.hpp"
#include "eeamc/dataset.hpp"
#include "eeamc/graph.hpp"

namespace eeamc {

/// Entropy gate: the exit classification is accepted when the base-10
/// entropy of its distribution is strictly below the threshold. For 10
/// classes the entropy lies in [0, 1], so T > 1 accepts everything and
/// T = 0 accepts nothing.
struct GateConfig {
    double threshold = 0.35;
};

// Base-10 Shannon entropy; 0*log(0) taken as 0 (terms below 1e-12 skipped).
double entropy(const float* p, int n);
double entropy(const Tensor& probs);

struct InferenceRecord {
    std::uint32_t index = 0;
    std::uint8_t true_label = 0;
    std::uint8_t pred_label = 0;
    std::int8_t snr_db = 0;
    bool exit_taken = false;
    double entropy = 0.0;
    std::int64_t latency_ns = 0;
    std::int64_t flops = 0;
};

enum class FlopPath { Exit, Full };

/// Per-section multiply-accumulate counts for a graph fed a (2,128) frame.
struct PathFlops {
    std::int64_t common = 0;
    std::int64_t exit_head = 0;
    std::int64_t tail = 0;
    std::int64_t entropy = 0;  // gate evaluation cost

    std::int64_t exit_path() const { return common + exit_head; }
    std::int64_t full_path() const { return common + exit_head + tail; }
    std::int64_t backbone() const { return common + tail; }
};

PathFlops path_flops(const BranchGraph& g);

// Exit = common + exit head; Full = common + exit head + tail. The gate
// cost is accounted separately in InferenceRecord.flops.
std::int64_t flop_count(const BranchGraph& g, FlopPath path);

/// Gated classification of one frame. Baseline graphs run the backbone
/// only. Latency covers the whole decision path including the entropy
/// evaluation; with repeats > 1 the median of the repeated timings is
/// reported (labels are identical across repeats).
InferenceRecord infer(BranchGraph& g, const LabeledExample& ex, const GateConfig& gate,
                      int repeats = 1);

/// Per-sample gated inference in input order, batch size 1. With more than
/// one worker (AMC_THREADS) the set is sharded over cloned graphs and
/// re-merged in input order.
std::vector<InferenceRecord> infer_set(BranchGraph& g, std::span<const LabeledExample> examples,
                                       const GateConfig& gate, int repeats = 1);

/// Both paths evaluated once per sample; gates can then be re-applied for
/// any threshold without another forward pass (the entropy of z1 does not
/// depend on T).
struct DualRecord {
    std::uint32_t index = 0;
    std::uint8_t true_label = 0;
    std::uint8_t label_exit = 0;
    std::uint8_t label_full = 0;
    std::int8_t snr_db = 0;
    double entropy = 0.0;
    std::int64_t pass1_ns = 0;  // includes the entropy evaluation
    std::int64_t pass2_ns = 0;
};

std::vector<DualRecord> infer_dual_set(BranchGraph& g, std::span<const LabeledExample> examples,
                                       int repeats = 1);

InferenceRecord gate_record(const DualRecord& dual, const GateConfig& gate,
                            const PathFlops& flops);

// Inference log CSV:
// index,true_label,pred_label,snr_db,exit_taken,entropy,latency_ns,flops
void write_inference_log(const std::vector<InferenceRecord>& records, const std::string& path);
std::vector<InferenceRecord> read_inference_log(const std::string& path);

} // namespace eeamc
