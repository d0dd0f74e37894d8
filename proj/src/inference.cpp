#include "eeamc/inference.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "eeamc/error.hpp"
#include "eeamc/kernels.hpp"

namespace eeamc {

double entropy(const float* p, int n) {
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
        const double pi = p[i];
        if (pi >= 1e-12) e -= pi * std::log10(pi);
    }
    return e;
}

double entropy(const Tensor& probs) { return entropy(probs.data(), int(probs.size())); }

namespace {

std::int64_t section_flops(const std::vector<Layer>& layers, ActShape& shape) {
    std::int64_t total = 0;
    for (const auto& l : layers) {
        total += layer_flops(l, shape);
        shape = layer_output_shape(l, shape);
    }
    return total;
}

// one multiply-add + one log per class
constexpr std::int64_t kEntropyFlops = 2 * 10;

std::int64_t now_ns() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Tensor frame_tensor(const LabeledExample& ex) { return examples_to_tensor(&ex, 1); }

} // namespace

PathFlops path_flops(const BranchGraph& g) {
    PathFlops f;
    ActShape shape{false, 2, kFrameLength, 0};
    f.common = section_flops(g.common, shape);
    ActShape q_shape = shape;
    if (g.has_exit()) {
        ActShape head_shape = q_shape;
        f.exit_head = section_flops(g.exit_head, head_shape);
    }
    ActShape tail_shape = q_shape;
    f.tail = section_flops(g.tail, tail_shape);
    f.entropy = kEntropyFlops;
    return f;
}

std::int64_t flop_count(const BranchGraph& g, FlopPath path) {
    const PathFlops f = path_flops(g);
    return path == FlopPath::Exit ? f.exit_path() : f.full_path();
}

namespace {

InferenceRecord infer_once(BranchGraph& g, const LabeledExample& ex, const GateConfig& gate,
                           const PathFlops& flops) {
    InferenceRecord rec;
    rec.true_label = ex.label;
    rec.snr_db = ex.snr_db;

    const Tensor x = frame_tensor(ex);
    const std::int64_t t0 = now_ns();
    if (!g.has_exit()) {
        const Tensor z = g.forward_backbone(x, Mode::Eval);
        rec.entropy = entropy(z);
        rec.pred_label = std::uint8_t(classify(z));
        rec.exit_taken = false;
        rec.latency_ns = now_ns() - t0;
        rec.flops = flops.backbone() + flops.entropy;
        return rec;
    }
    const Tensor z1 = g.forward_pass1(x, Mode::Eval);
    rec.entropy = entropy(z1);
    if (rec.entropy < gate.threshold) {
        rec.pred_label = std::uint8_t(classify(z1));
        rec.exit_taken = true;
        rec.latency_ns = now_ns() - t0;
        rec.flops = flops.exit_path() + flops.entropy;
    } else {
        const Tensor z2 = g.forward_pass2(Mode::Eval);
        rec.pred_label = std::uint8_t(classify(z2));
        rec.exit_taken = false;
        rec.latency_ns = now_ns() - t0;
        rec.flops = flops.full_path() + flops.entropy;
    }
    return rec;
}

std::int64_t median_of(std::vector<std::int64_t>& v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

} // namespace

InferenceRecord infer(BranchGraph& g, const LabeledExample& ex, const GateConfig& gate,
                      int repeats) {
    const PathFlops flops = path_flops(g);
    InferenceRecord rec = infer_once(g, ex, gate, flops);
    if (repeats > 1) {
        std::vector<std::int64_t> times{rec.latency_ns};
        for (int r = 1; r < repeats; ++r) times.push_back(infer_once(g, ex, gate, flops).latency_ns);
        rec.latency_ns = median_of(times);
    }
    return rec;
}

std::vector<InferenceRecord> infer_set(BranchGraph& g, std::span<const LabeledExample> examples,
                                       const GateConfig& gate, int repeats) {
    if (examples.empty()) throw ConfigError("infer_set: empty example set");
    const PathFlops flops = path_flops(g);
    std::vector<InferenceRecord> records(examples.size());
    const int workers = std::min<int>(kernels::thread_count(), int(examples.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < examples.size(); ++i) {
            records[i] = infer(g, examples[i], gate, repeats);
            records[i].index = std::uint32_t(i);
        }
        return records;
    }
#pragma omp parallel num_threads(workers)
    {
        BranchGraph local = g;  // each worker owns a clone (q_cache is mutable state)
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(examples.size()); ++i) {
            records[std::size_t(i)] = infer(local, examples[std::size_t(i)], gate, repeats);
            records[std::size_t(i)].index = std::uint32_t(i);
        }
    }
    return records;
}

std::vector<DualRecord> infer_dual_set(BranchGraph& g, std::span<const LabeledExample> examples,
                                       int repeats) {
    if (examples.empty()) throw ConfigError("infer_dual_set: empty example set");
    if (!g.has_exit()) throw StateError("infer_dual_set: graph has no exit head");
    std::vector<DualRecord> records(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        DualRecord& rec = records[i];
        rec.index = std::uint32_t(i);
        rec.true_label = examples[i].label;
        rec.snr_db = examples[i].snr_db;
        const Tensor x = frame_tensor(examples[i]);

        std::vector<std::int64_t> t1(static_cast<std::size_t>(repeats)), t2(static_cast<std::size_t>(repeats));
        for (int r = 0; r < repeats; ++r) {
            const std::int64_t a = now_ns();
            const Tensor z1 = g.forward_pass1(x, Mode::Eval);
            const double e = entropy(z1);
            const std::int64_t b = now_ns();
            const Tensor z2 = g.forward_pass2(Mode::Eval);
            const std::int64_t c = now_ns();
            t1[std::size_t(r)] = b - a;
            t2[std::size_t(r)] = c - b;
            if (r == 0) {
                rec.entropy = e;
                rec.label_exit = std::uint8_t(classify(z1));
                rec.label_full = std::uint8_t(classify(z2));
            }
        }
        rec.pass1_ns = median_of(t1);
        rec.pass2_ns = median_of(t2);
    }
    return records;
}

InferenceRecord gate_record(const DualRecord& dual, const GateConfig& gate,
                            const PathFlops& flops) {
    InferenceRecord rec;
    rec.index = dual.index;
    rec.true_label = dual.true_label;
    rec.snr_db = dual.snr_db;
    rec.entropy = dual.entropy;
    rec.exit_taken = dual.entropy < gate.threshold;
    if (rec.exit_taken) {
        rec.pred_label = dual.label_exit;
        rec.latency_ns = dual.pass1_ns;
        rec.flops = flops.exit_path() + flops.entropy;
    } else {
        rec.pred_label = dual.label_full;
        rec.latency_ns = dual.pass1_ns + dual.pass2_ns;
        rec.flops = flops.full_path() + flops.entropy;
    }
    return rec;
}

void write_inference_log(const std::vector<InferenceRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "index,true_label,pred_label,snr_db,exit_taken,entropy,latency_ns,flops\n";
    char line[256];
    for (const auto& r : records) {
        std::snprintf(line, sizeof line, "%u,%d,%d,%d,%d,%.9g,%lld,%lld\n", r.index,
                      int(r.true_label), int(r.pred_label), int(r.snr_db), r.exit_taken ? 1 : 0,
                      r.entropy, static_cast<long long>(r.latency_ns),
                      static_cast<long long>(r.flops));
        out << line;
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<InferenceRecord> read_inference_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("inference log: missing header", 0);
    if (line != "index,true_label,pred_label,snr_db,exit_taken,entropy,latency_ns,flops")
        throw FormatError("inference log: unexpected header", 0);

    std::vector<InferenceRecord> out;
    std::uint64_t offset = line.size() + 1;
    while (std::getline(in, line)) {
        if (line.empty()) { offset += 1; continue; }
        InferenceRecord r;
        unsigned idx;
        int tl, pl, snr, exited;
        double ent;
        long long lat, fl;
        if (std::sscanf(line.c_str(), "%u,%d,%d,%d,%d,%lf,%lld,%lld", &idx, &tl, &pl, &snr,
                        &exited, &ent, &lat, &fl) != 8)
            throw FormatError("inference log: malformed row '" + line + "'", offset);
        if (tl < 0 || tl >= kNumSchemes || pl < 0 || pl >= kNumSchemes)
            throw FormatError("inference log: label out of range", offset);
        r.index = idx;
        r.true_label = std::uint8_t(tl);
        r.pred_label = std::uint8_t(pl);
        r.snr_db = std::int8_t(snr);
        r.exit_taken = exited != 0;
        r.entropy = ent;
        r.latency_ns = lat;
        r.flops = fl;
        out.push_back(r);
        offset += line.size() + 1;
    }
    return out;
}

} // namespace eeamc
