// eeamc command-line driver: generate | train | eval | sweep | report.
// Flag values override config-file keys; every run writes a provenance
// echo of the fully resolved configuration next to its artifacts.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eeamc/config.hpp"
#include "eeamc/error.hpp"
#include "eeamc/metrics.hpp"
#include "eeamc/train.hpp"
#include "eeamc/weights_io.hpp"

namespace fs = std::filesystem;
using namespace eeamc;

namespace {

// exit codes: 0 ok, 2 config/usage, 3 dataset, 4 checkpoint, 5 io, 6 numeric, 1 other
struct CliError {
    int code;
    std::string message;
};

// Removes everything written by a failed command.
class OutputTracker {
public:
    void add(const std::string& path) { paths_.push_back(path); }
    void commit() { committed_ = true; }
    ~OutputTracker() {
        if (committed_) return;
        for (const auto& p : paths_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

private:
    std::vector<std::string> paths_;
    bool committed_ = false;
};

struct Flags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, variant, dataset, checkpoint, thresholds;
    std::optional<double> threshold;
};

void add_common_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config_path, "Config file (flat section.key = value lines)");
    cmd->add_option("--seed", f.seed, "Override the command's primary seed");
    cmd->add_option("--out", f.out, "Output directory");
    cmd->add_option("--variant", f.variant, "Architecture variant (baseline|v0|v1|v2|v3)");
    cmd->add_option("--threshold", f.threshold, "Entropy gate threshold");
    cmd->add_option("--dataset", f.dataset, "Dataset (AMCD) path");
    cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint (EEWT) path");
}

ExperimentConfig resolve_config(const Flags& f, const char* seed_key) {
    ExperimentConfig cfg;
    try {
        if (!f.config_path.empty()) cfg = parse_config_file(f.config_path);
        if (f.seed) apply_config_key(cfg, seed_key, std::to_string(*f.seed));
        if (f.out) apply_config_key(cfg, "paths.out", *f.out);
        if (f.variant) apply_config_key(cfg, "arch.variant", *f.variant);
        if (f.threshold) apply_config_key(cfg, "gate.threshold", std::to_string(*f.threshold));
        if (f.dataset) apply_config_key(cfg, "paths.dataset", *f.dataset);
        if (f.checkpoint) apply_config_key(cfg, "paths.checkpoint", *f.checkpoint);
        if (f.thresholds) apply_config_key(cfg, "eval.thresholds", *f.thresholds);
        cfg.finalize();
    } catch (const ConfigError& e) {
        throw CliError{2, std::string("config: ") + e.what()};
    } catch (const IoError& e) {
        throw CliError{5, std::string("io: ") + e.what()};
    }
    return cfg;
}

std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
    fs::create_directories(cfg.out_dir);
    return (fs::path(cfg.out_dir) / name).string();
}

void write_provenance(const ExperimentConfig& cfg, const std::string& path,
                      OutputTracker& outputs) {
    std::ofstream out(path);
    if (!out) throw CliError{5, "io: cannot write '" + path + "'"};
    out << echo_config(cfg);
    outputs.add(path);
}

std::string dataset_path_of(const ExperimentConfig& cfg) {
    return cfg.dataset_path.empty() ? out_path(cfg, "dataset.amcd") : cfg.dataset_path;
}

std::string checkpoint_path_of(const ExperimentConfig& cfg) {
    return cfg.checkpoint_path.empty() ? out_path(cfg, cfg.variant + ".eewt")
                                       : cfg.checkpoint_path;
}

std::vector<LabeledExample> load_dataset_checked(const std::string& path) {
    if (!fs::exists(path)) throw CliError{3, "dataset: file not found '" + path + "'"};
    try {
        return read_dataset(path);
    } catch (const FormatError& e) {
        throw CliError{3, "dataset: " + std::string(e.what())};
    } catch (const IoError& e) {
        throw CliError{3, "dataset: " + std::string(e.what())};
    }
}

BranchGraph load_checkpoint_checked(const std::string& path) {
    if (!fs::exists(path)) throw CliError{4, "checkpoint: file not found '" + path + "'"};
    try {
        return load_weights(path);
    } catch (const FormatError& e) {
        throw CliError{4, "checkpoint: " + std::string(e.what())};
    } catch (const IoError& e) {
        throw CliError{4, "checkpoint: " + std::string(e.what())};
    }
}

int cmd_generate(const Flags& flags) {
    const ExperimentConfig cfg = resolve_config(flags, "gen.seed");
    OutputTracker outputs;
    const std::string path = dataset_path_of(cfg);
    const auto examples = generate_dataset(cfg.gen);
    outputs.add(path);
    write_dataset(examples, path);
    write_provenance(cfg, path + ".provenance.txt", outputs);
    outputs.commit();
    std::printf("generate: wrote %zu examples to %s\n", examples.size(), path.c_str());
    return 0;
}

int cmd_train(const Flags& flags) {
    const ExperimentConfig cfg = resolve_config(flags, "train.seed");
    OutputTracker outputs;

    const auto examples = load_dataset_checked(dataset_path_of(cfg));
    const SplitResult splits = split_dataset(examples, cfg.split_seed);
    const Variant variant = variant_from_string(cfg.variant);

    BranchGraph g = build_ee_variant(variant, cfg.arch);
    TrainHistory history;
    if (variant == Variant::Baseline)
        history = train_baseline(g, splits.train, splits.val, cfg.train);
    else
        history = train_ee(g, splits.train, splits.val, cfg.train);

    const std::string ckpt = checkpoint_path_of(cfg);
    outputs.add(ckpt);
    save_weights(g, ckpt);
    const std::string meta = ckpt + ".meta";
    outputs.add(meta);
    write_checkpoint_sidecar(cfg.train, history, variant, meta);
    const std::string hist = out_path(cfg, cfg.variant + "_history.csv");
    outputs.add(hist);
    write_history_csv(history, hist);
    write_provenance(cfg, ckpt + ".provenance.txt", outputs);
    outputs.commit();

    std::printf("train: %s for %zu epochs, final val acc (exit %.4f, backbone %.4f), wrote %s\n",
                cfg.variant.c_str(), history.size(),
                history.empty() ? 0.0 : history.back().val_acc_exit,
                history.empty() ? 0.0 : history.back().val_acc_backbone, ckpt.c_str());
    return 0;
}

int cmd_eval(const Flags& flags) {
    const ExperimentConfig cfg = resolve_config(flags, "data.split_seed");
    OutputTracker outputs;

    const auto examples = load_dataset_checked(dataset_path_of(cfg));
    const SplitResult splits = split_dataset(examples, cfg.split_seed);
    BranchGraph g = load_checkpoint_checked(checkpoint_path_of(cfg));

    const auto records = infer_set(g, splits.test, cfg.gate, cfg.eval_repeats);
    const MetricsReport report =
        aggregate(records, variant_name(g.variant), cfg.gate.threshold, cfg.gen.seed);

    const std::string log = out_path(cfg, "inference_log.csv");
    outputs.add(log);
    write_inference_log(records, log);
    const std::string rep = out_path(cfg, "report.csv");
    outputs.add(rep);
    emit_report_csv(report, rep);
    const std::string conf = out_path(cfg, "confusion.csv");
    outputs.add(conf);
    emit_confusion_csv(report, conf);
    write_provenance(cfg, rep + ".provenance.txt", outputs);
    outputs.commit();

    std::size_t correct = 0, exits = 0;
    for (const auto& r : records) {
        correct += r.pred_label == r.true_label;
        exits += r.exit_taken;
    }
    std::printf("eval: %zu samples, accuracy %.4f, exit fraction %.4f, wrote %s\n",
                records.size(), double(correct) / double(records.size()),
                double(exits) / double(records.size()), rep.c_str());
    return 0;
}

int cmd_sweep(const Flags& flags) {
    const ExperimentConfig cfg = resolve_config(flags, "data.split_seed");
    OutputTracker outputs;

    const auto examples = load_dataset_checked(dataset_path_of(cfg));
    const SplitResult splits = split_dataset(examples, cfg.split_seed);
    BranchGraph g = load_checkpoint_checked(checkpoint_path_of(cfg));
    if (!g.has_exit())
        throw CliError{2, "config: sweep needs an early-exit checkpoint, got baseline"};

    const auto sweep =
        threshold_sweep(g, splits.test, cfg.sweep_thresholds, cfg.eval_repeats, cfg.gen.seed);

    const std::string path = out_path(cfg, "sweep.csv");
    outputs.add(path);
    emit_sweep_csv(sweep, path);
    write_provenance(cfg, path + ".provenance.txt", outputs);
    outputs.commit();

    std::printf("sweep: %zu thresholds over %zu samples, wrote %s\n", sweep.size(),
                splits.test.size(), path.c_str());
    return 0;
}

int cmd_report(const Flags& flags, const std::string& log_path) {
    const ExperimentConfig cfg = resolve_config(flags, "data.split_seed");
    OutputTracker outputs;

    if (!fs::exists(log_path)) throw CliError{3, "dataset: log file not found '" + log_path + "'"};
    std::vector<InferenceRecord> records;
    try {
        records = read_inference_log(log_path);
    } catch (const FormatError& e) {
        throw CliError{3, "dataset: " + std::string(e.what())};
    }
    if (records.empty()) throw CliError{3, "dataset: log '" + log_path + "' holds no records"};

    const MetricsReport report =
        aggregate(records, cfg.variant, cfg.gate.threshold, cfg.gen.seed);
    const std::string rep = out_path(cfg, "report.csv");
    outputs.add(rep);
    emit_report_csv(report, rep);
    const std::string conf = out_path(cfg, "confusion.csv");
    outputs.add(conf);
    emit_confusion_csv(report, conf);
    write_provenance(cfg, rep + ".provenance.txt", outputs);
    outputs.commit();

    std::printf("report: aggregated %zu records, wrote %s\n", records.size(), rep.c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Early-exit CNN pipeline for automatic modulation classification"};
    app.require_subcommand(1);

    Flags flags;
    std::string report_log;

    CLI::App* generate = app.add_subcommand("generate", "Synthesize an IQ-frame dataset");
    CLI::App* train = app.add_subcommand("train", "Train a variant on an AMCD dataset");
    CLI::App* eval = app.add_subcommand("eval", "Gated inference over the test split");
    CLI::App* sweep = app.add_subcommand("sweep", "Evaluate a list of gate thresholds");
    CLI::App* report = app.add_subcommand("report", "Aggregate an inference log into reports");
    for (CLI::App* cmd : {generate, train, eval, sweep, report}) add_common_flags(*&cmd, flags);
    sweep->add_option("--thresholds", flags.thresholds,
                      "Comma-separated gate thresholds (default 0.05,0.35,0.6)");
    report->add_option("log", report_log, "Inference log CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (generate->parsed()) return cmd_generate(flags);
        if (train->parsed()) return cmd_train(flags);
        if (eval->parsed()) return cmd_eval(flags);
        if (sweep->parsed()) return cmd_sweep(flags);
        if (report->parsed()) return cmd_report(flags, report_log);
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return e.code;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: config: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: numeric: %s\n", e.what());
        return 6;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: io: %s\n", e.what());
        return 5;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
