#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eeamc/inference.hpp"

namespace eeamc {

struct SnrStats {
    int snr_db = 0;
    std::int64_t n = 0;
    std::int64_t exit_correct = 0;
    std::int64_t exit_incorrect = 0;
    std::int64_t full_correct = 0;
    std::int64_t full_incorrect = 0;
    double mean_latency_ns = 0.0;
    double median_latency_ns = 0.0;
    double mean_flops = 0.0;

    double accuracy() const { return n ? double(exit_correct + full_correct) / double(n) : 0.0; }
    double exit_fraction() const {
        return n ? double(exit_correct + exit_incorrect) / double(n) : 0.0;
    }
};

struct MetricsReport {
    std::vector<SnrStats> per_snr;  // ascending SNR, only levels present in the records
    std::array<std::array<std::int64_t, kNumSchemes>, kNumSchemes> confusion{};  // [true][pred]

    // config echo
    std::string variant = "?";
    double threshold = 0.0;
    std::uint64_t seed = 0;

    const SnrStats* stats_for(int snr_db) const;
};

/// Exact count-based aggregation, no smoothing.
MetricsReport aggregate(const std::vector<InferenceRecord>& records,
                        const std::string& variant = "?", double threshold = 0.0,
                        std::uint64_t seed = 0);

/// One dual-path evaluation of the set, then each threshold gated from the
/// same per-sample entropies: for T < T' the exit set at T is a subset of
/// the exit set at T'.
std::vector<std::pair<double, MetricsReport>> threshold_sweep(
    BranchGraph& g, std::span<const LabeledExample> examples, const std::vector<double>& thresholds,
    int repeats = 1, std::uint64_t seed = 0);

// snr_db,n,accuracy,exit_fraction,exit_correct,exit_incorrect,full_correct,
// full_incorrect,mean_latency_ns,median_latency_ns,mean_flops
void emit_report_csv(const MetricsReport& report, const std::string& path);

// Same schema with a leading `threshold` column, one block per threshold.
void emit_sweep_csv(const std::vector<std::pair<double, MetricsReport>>& sweep,
                    const std::string& path);

// 10x10 counts with scheme-name headers, rows are true labels.
void emit_confusion_csv(const MetricsReport& report, const std::string& path);

} // namespace eeamc
