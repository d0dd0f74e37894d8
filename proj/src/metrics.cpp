#include "eeamc/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>

#include "eeamc/error.hpp"

namespace eeamc {

const SnrStats* MetricsReport::stats_for(int snr_db) const {
    for (const auto& s : per_snr)
        if (s.snr_db == snr_db) return &s;
    return nullptr;
}

MetricsReport aggregate(const std::vector<InferenceRecord>& records, const std::string& variant,
                        double threshold, std::uint64_t seed) {
    if (records.empty()) throw ConfigError("aggregate: no records");

    std::map<int, std::vector<const InferenceRecord*>> by_snr;
    for (const auto& r : records) by_snr[r.snr_db].push_back(&r);

    MetricsReport report;
    report.variant = variant;
    report.threshold = threshold;
    report.seed = seed;

    for (auto& [snr, recs] : by_snr) {
        SnrStats st;
        st.snr_db = snr;
        st.n = std::int64_t(recs.size());
        double lat_sum = 0.0, flop_sum = 0.0;
        std::vector<std::int64_t> lats;
        lats.reserve(recs.size());
        for (const auto* r : recs) {
            const bool correct = r->pred_label == r->true_label;
            if (r->exit_taken)
                (correct ? st.exit_correct : st.exit_incorrect)++;
            else
                (correct ? st.full_correct : st.full_incorrect)++;
            lat_sum += double(r->latency_ns);
            flop_sum += double(r->flops);
            lats.push_back(r->latency_ns);
        }
        st.mean_latency_ns = lat_sum / double(st.n);
        st.mean_flops = flop_sum / double(st.n);
        std::sort(lats.begin(), lats.end());
        const std::size_t m = lats.size();
        st.median_latency_ns =
            m % 2 ? double(lats[m / 2]) : 0.5 * double(lats[m / 2 - 1] + lats[m / 2]);
        report.per_snr.push_back(st);
    }

    for (const auto& r : records)
        report.confusion[r.true_label][r.pred_label]++;
    return report;
}

std::vector<std::pair<double, MetricsReport>> threshold_sweep(
    BranchGraph& g, std::span<const LabeledExample> examples,
    const std::vector<double>& thresholds, int repeats, std::uint64_t seed) {
    if (thresholds.empty()) throw ConfigError("threshold_sweep: no thresholds");
    const auto duals = infer_dual_set(g, examples, repeats);
    const PathFlops flops = path_flops(g);

    std::vector<std::pair<double, MetricsReport>> out;
    out.reserve(thresholds.size());
    for (const double t : thresholds) {
        std::vector<InferenceRecord> records;
        records.reserve(duals.size());
        const GateConfig gate{t};
        for (const auto& d : duals) records.push_back(gate_record(d, gate, flops));
        out.emplace_back(t, aggregate(records, variant_name(g.variant), t, seed));
    }
    return out;
}

namespace {

void write_stats_row(std::ofstream& out, const SnrStats& st, const double* threshold) {
    char line[512];
    if (threshold)
        std::snprintf(line, sizeof line,
                      "%.9g,%d,%lld,%.6f,%.6f,%lld,%lld,%lld,%lld,%.1f,%.1f,%.1f\n", *threshold,
                      st.snr_db, static_cast<long long>(st.n), st.accuracy(), st.exit_fraction(),
                      static_cast<long long>(st.exit_correct),
                      static_cast<long long>(st.exit_incorrect),
                      static_cast<long long>(st.full_correct),
                      static_cast<long long>(st.full_incorrect), st.mean_latency_ns,
                      st.median_latency_ns, st.mean_flops);
    else
        std::snprintf(line, sizeof line,
                      "%d,%lld,%.6f,%.6f,%lld,%lld,%lld,%lld,%.1f,%.1f,%.1f\n", st.snr_db,
                      static_cast<long long>(st.n), st.accuracy(), st.exit_fraction(),
                      static_cast<long long>(st.exit_correct),
                      static_cast<long long>(st.exit_incorrect),
                      static_cast<long long>(st.full_correct),
                      static_cast<long long>(st.full_incorrect), st.mean_latency_ns,
                      st.median_latency_ns, st.mean_flops);
    out << line;
}

constexpr const char* kReportColumns =
    "snr_db,n,accuracy,exit_fraction,exit_correct,exit_incorrect,full_correct,full_incorrect,"
    "mean_latency_ns,median_latency_ns,mean_flops";

} // namespace

void emit_report_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << kReportColumns << "\n";
    for (const auto& st : report.per_snr) write_stats_row(out, st, nullptr);
    if (!out) throw IoError("write failed for '" + path + "'");
}

void emit_sweep_csv(const std::vector<std::pair<double, MetricsReport>>& sweep,
                    const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "threshold," << kReportColumns << "\n";
    for (const auto& [t, report] : sweep)
        for (const auto& st : report.per_snr) write_stats_row(out, st, &t);
    if (!out) throw IoError("write failed for '" + path + "'");
}

void emit_confusion_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "true\\pred";
    for (int j = 0; j < kNumSchemes; ++j) out << "," << scheme_name(ModulationScheme(j));
    out << "\n";
    for (int i = 0; i < kNumSchemes; ++i) {
        out << scheme_name(ModulationScheme(i));
        for (int j = 0; j < kNumSchemes; ++j)
            out << "," << report.confusion[std::size_t(i)][std::size_t(j)];
        out << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace eeamc
