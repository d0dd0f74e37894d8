#include "eeamc/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "eeamc/error.hpp"

namespace eeamc {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (patience < 0) throw ConfigError("train: patience must be >= 0");
    opt1.validate();
    opt2.validate();
}

std::pair<double, double> train_step_ee(BranchGraph& g, const Tensor& x,
                                        const std::vector<std::uint8_t>& labels,
                                        Optimizer& opt1, Optimizer& opt2, Rng& dropout_rng,
                                        const EEStepOptions& opts) {
    if (!g.has_exit()) throw StateError("train_step_ee: graph has no exit head");
    if (x.dim(0) < 1) throw ConfigError("train_step_ee: empty batch");

    g.zero_grads();
    const Tensor y1 = g.forward_pass1(x, Mode::Train, &dropout_rng);
    const Tensor y2 = g.forward_pass2(Mode::Train, &dropout_rng);

    auto [loss1, grad1] = cross_entropy_batch(y1, labels);
    auto [loss2, grad2] = cross_entropy_batch(y2, labels);
    if (!std::isfinite(loss1) || !std::isfinite(loss2))
        throw NumericError("train_step_ee: non-finite loss (loss1=" + std::to_string(loss1) +
                           ", loss2=" + std::to_string(loss2) + ")");

    auto apply1 = [&] {
        if (!opts.update_theta1) return;
        g.backward_theta1(grad1);
        opt1.step(g.theta1_params());
    };
    auto apply2 = [&] {
        if (!opts.update_theta2) return;
        g.backward_theta2(grad2);
        opt2.step(g.theta2_params());
    };
    if (opts.theta2_first) {
        apply2();
        apply1();
    } else {
        apply1();
        apply2();
    }
    return {loss1, loss2};
}

double train_step_baseline(BranchGraph& g, const Tensor& x,
                           const std::vector<std::uint8_t>& labels, Optimizer& opt,
                           Rng& dropout_rng) {
    if (g.has_exit()) throw StateError("train_step_baseline: expected a baseline graph");
    g.zero_grads();
    const Tensor y = g.forward_backbone(x, Mode::Train, &dropout_rng);
    auto [loss, grad] = cross_entropy_batch(y, labels);
    if (!std::isfinite(loss))
        throw NumericError("train_step_baseline: non-finite loss");
    g.backward_theta2(grad);  // baseline holds every layer in the tail
    opt.step(g.theta2_params());
    return loss;
}

EvalAccuracy evaluate_graph(BranchGraph& g, std::span<const LabeledExample> examples,
                            int batch_size) {
    if (examples.empty()) throw ConfigError("evaluate_graph: empty example set");
    std::size_t hit_exit = 0, hit_backbone = 0;
    for (std::size_t start = 0; start < examples.size(); start += std::size_t(batch_size)) {
        const std::size_t n = std::min(std::size_t(batch_size), examples.size() - start);
        const Tensor x = examples_to_tensor(examples.data() + start, n);
        Tensor z_backbone, z_exit;
        if (g.has_exit()) {
            z_exit = g.forward_pass1(x, Mode::Eval);
            z_backbone = g.forward_pass2(Mode::Eval);
        } else {
            z_backbone = g.forward_backbone(x, Mode::Eval);
        }
        for (std::size_t r = 0; r < n; ++r) {
            const int truth = examples[start + r].label;
            auto row_argmax = [&](const Tensor& z) {
                int best = 0;
                for (int j = 1; j < z.dim(1); ++j)
                    if (z(int(r), j) > z(int(r), best)) best = j;
                return best;
            };
            if (row_argmax(z_backbone) == truth) ++hit_backbone;
            if (g.has_exit() && row_argmax(z_exit) == truth) ++hit_exit;
        }
    }
    EvalAccuracy acc;
    acc.backbone_acc = double(hit_backbone) / double(examples.size());
    acc.exit_acc = g.has_exit() ? double(hit_exit) / double(examples.size()) : acc.backbone_acc;
    return acc;
}

namespace {

struct EpochRunner {
    std::span<const LabeledExample> train_set;
    std::vector<std::uint32_t> order;
    Rng shuffle_rng;
    bool shuffle;
    int batch_size;

    EpochRunner(std::span<const LabeledExample> set, Rng rng, bool do_shuffle, int bs)
        : train_set(set), order(set.size()), shuffle_rng(rng), shuffle(do_shuffle),
          batch_size(bs) {
        std::iota(order.begin(), order.end(), 0u);
    }

    template <typename StepFn>
    void run_epoch(StepFn&& step) {
        if (shuffle) deterministic_shuffle(order.data(), order.size(), shuffle_rng);
        std::vector<LabeledExample> batch;
        std::vector<std::uint8_t> labels;
        for (std::size_t start = 0; start < order.size(); start += std::size_t(batch_size)) {
            const std::size_t n = std::min(std::size_t(batch_size), order.size() - start);
            batch.assign(n, LabeledExample{});
            labels.assign(n, 0);
            for (std::size_t r = 0; r < n; ++r) {
                batch[r] = train_set[order[start + r]];
                labels[r] = batch[r].label;
            }
            const Tensor x = examples_to_tensor(batch.data(), n);
            step(x, labels, n);
        }
    }
};

template <typename StepFn>
TrainHistory train_loop(BranchGraph& g, std::span<const LabeledExample> train_set,
                        std::span<const LabeledExample> val_set, const TrainConfig& cfg,
                        bool dual_loss, StepFn&& make_step) {
    cfg.validate();
    if (train_set.empty() || val_set.empty())
        throw ConfigError("train: empty train or validation set");

    Rng master(cfg.seed);
    Rng init_rng = master.fork(1);
    Rng shuffle_rng = master.fork(2);
    Rng dropout_rng = master.fork(3);
    g.init_params(init_rng);

    auto step = make_step(dropout_rng);
    EpochRunner runner(train_set, shuffle_rng, cfg.shuffle, cfg.batch_size);

    TrainHistory history;
    double best_val = -1.0;
    int since_best = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double sum1 = 0.0, sum2 = 0.0;
        std::size_t seen = 0;
        runner.run_epoch([&](const Tensor& x, const std::vector<std::uint8_t>& labels,
                             std::size_t n) {
            const auto [l1, l2] = step(x, labels);
            sum1 += l1 * double(n);
            sum2 += l2 * double(n);
            seen += n;
        });
        const EvalAccuracy acc = evaluate_graph(g, val_set);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        EpochStats st;
        st.loss1 = dual_loss ? sum1 / double(seen) : sum2 / double(seen);
        st.loss2 = sum2 / double(seen);
        st.val_acc_exit = acc.exit_acc;
        st.val_acc_backbone = acc.backbone_acc;
        st.seconds = secs;
        history.push_back(st);

        if (cfg.patience > 0) {
            if (acc.backbone_acc > best_val) {
                best_val = acc.backbone_acc;
                since_best = 0;
            } else if (++since_best >= cfg.patience) {
                break;
            }
        }
    }
    return history;
}

} // namespace

TrainHistory train_ee(BranchGraph& g, std::span<const LabeledExample> train_set,
                      std::span<const LabeledExample> val_set, const TrainConfig& cfg) {
    if (!g.has_exit()) throw StateError("train_ee: graph has no exit head");
    Optimizer opt1(cfg.opt1), opt2(cfg.opt2);
    return train_loop(g, train_set, val_set, cfg, true, [&](Rng& dropout_rng) {
        return [&g, &opt1, &opt2, &dropout_rng](const Tensor& x,
                                                const std::vector<std::uint8_t>& labels) {
            return train_step_ee(g, x, labels, opt1, opt2, dropout_rng);
        };
    });
}

TrainHistory train_baseline(BranchGraph& g, std::span<const LabeledExample> train_set,
                            std::span<const LabeledExample> val_set, const TrainConfig& cfg) {
    if (g.has_exit()) throw StateError("train_baseline: expected a baseline graph");
    Optimizer opt(cfg.opt2);
    return train_loop(g, train_set, val_set, cfg, false, [&](Rng& dropout_rng) {
        return [&g, &opt, &dropout_rng](const Tensor& x,
                                        const std::vector<std::uint8_t>& labels) {
            const double loss = train_step_baseline(g, x, labels, opt, dropout_rng);
            return std::pair<double, double>(loss, loss);
        };
    });
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "epoch,loss1,loss2,val_acc_exit,val_acc_backbone,seconds\n";
    char line[256];
    for (std::size_t e = 0; e < history.size(); ++e) {
        const auto& st = history[e];
        std::snprintf(line, sizeof line, "%zu,%.9g,%.9g,%.6f,%.6f,%.3f\n", e + 1, st.loss1,
                      st.loss2, st.val_acc_exit, st.val_acc_backbone, st.seconds);
        out << line;
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

void write_checkpoint_sidecar(const TrainConfig& cfg, const TrainHistory& history,
                              Variant variant, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    auto opt_str = [](const OptimizerSpec& o) {
        return o.kind == OptimizerKind::Adam ? "adam" : "sgd";
    };
    out << "arch.variant=" << variant_name(variant) << "\n";
    out << "train.epochs=" << cfg.epochs << "\n";
    out << "train.batch_size=" << cfg.batch_size << "\n";
    out << "train.optimizer=" << opt_str(cfg.opt1) << "\n";
    out << "train.lr=" << cfg.opt1.lr << "\n";
    out << "train.seed=" << cfg.seed << "\n";
    out << "train.shuffle=" << (cfg.shuffle ? "true" : "false") << "\n";
    out << "train.patience=" << cfg.patience << "\n";
    out << "final.epochs_run=" << history.size() << "\n";
    if (!history.empty()) {
        const auto& last = history.back();
        out << "final.loss1=" << last.loss1 << "\n";
        out << "final.loss2=" << last.loss2 << "\n";
        out << "final.val_acc_exit=" << last.val_acc_exit << "\n";
        out << "final.val_acc_backbone=" << last.val_acc_backbone << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

} // namespace eeamc
