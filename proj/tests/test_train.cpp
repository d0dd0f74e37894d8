#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "eeamc/train.hpp"
#include "support/toy.hpp"

using namespace eeamc;

namespace {

std::vector<float> snapshot(std::vector<ParamRef> params) {
    std::vector<float> out;
    for (const auto& p : params)
        out.insert(out.end(), p.value->data(), p.value->data() + p.value->size());
    return out;
}

bool bitwise_equal(const std::vector<float>& a, const std::vector<float>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

struct StepFixture {
    BranchGraph g;
    Tensor x;
    std::vector<std::uint8_t> labels;

    explicit StepFixture(std::uint64_t seed, int batch = 8) {
        g = build_ee_variant(Variant::V1, toy::tiny_arch(0.3f));
        Rng rng(seed);
        g.init_params(rng);
        auto examples = toy::make_examples(batch, rng);
        x = examples_to_tensor(examples.data(), examples.size());
        for (const auto& ex : examples) labels.push_back(ex.label);
    }
};

} // namespace

TEST_CASE("loss2-only step leaves every theta1 parameter bitwise unchanged") {
    StepFixture f(100);
    const auto before_t1 = snapshot(f.g.theta1_params());
    const auto before_t2 = snapshot(f.g.theta2_params());
    Optimizer opt1(OptimizerSpec::adam(1e-3f)), opt2(OptimizerSpec::adam(1e-3f));
    Rng drop(1);
    EEStepOptions opts;
    opts.update_theta1 = false;
    train_step_ee(f.g, f.x, f.labels, opt1, opt2, drop, opts);
    CHECK(bitwise_equal(before_t1, snapshot(f.g.theta1_params())));
    CHECK_FALSE(bitwise_equal(before_t2, snapshot(f.g.theta2_params())));
}

TEST_CASE("loss1-only step leaves every tail parameter bitwise unchanged") {
    StepFixture f(101);
    const auto before_t1 = snapshot(f.g.theta1_params());
    const auto before_t2 = snapshot(f.g.theta2_params());
    Optimizer opt1(OptimizerSpec::adam(1e-3f)), opt2(OptimizerSpec::adam(1e-3f));
    Rng drop(1);
    EEStepOptions opts;
    opts.update_theta2 = false;
    train_step_ee(f.g, f.x, f.labels, opt1, opt2, drop, opts);
    CHECK_FALSE(bitwise_equal(before_t1, snapshot(f.g.theta1_params())));
    CHECK(bitwise_equal(before_t2, snapshot(f.g.theta2_params())));
}

TEST_CASE("theta updates commute bitwise on the disjoint partitions") {
    auto run = [](bool theta2_first) {
        StepFixture f(102);
        Optimizer opt1(OptimizerSpec::adam(1e-3f)), opt2(OptimizerSpec::adam(1e-3f));
        Rng drop(9);
        EEStepOptions opts;
        opts.theta2_first = theta2_first;
        train_step_ee(f.g, f.x, f.labels, opt1, opt2, drop, opts);
        return snapshot(f.g.all_params());
    };
    CHECK(bitwise_equal(run(false), run(true)));
}

TEST_CASE("gradient partition: common delta comes from loss1 alone") {
    // replaying the step with loss2 suppressed reproduces the exact same
    // common-layer parameters
    auto common_params_after = [](bool suppress_loss2) {
        StepFixture f(103);
        Optimizer opt1(OptimizerSpec::adam(1e-3f)), opt2(OptimizerSpec::adam(1e-3f));
        Rng drop(4);
        EEStepOptions opts;
        opts.update_theta2 = !suppress_loss2;
        train_step_ee(f.g, f.x, f.labels, opt1, opt2, drop, opts);
        std::vector<float> out;
        for (auto& l : f.g.common) {
            std::vector<ParamRef> refs;
            l.collect_params(refs);
            for (const auto& p : refs)
                out.insert(out.end(), p.value->data(), p.value->data() + p.value->size());
        }
        return out;
    };
    CHECK(bitwise_equal(common_params_after(false), common_params_after(true)));
}

TEST_CASE("one step on a one-sample batch decreases loss1") {
    BranchGraph g = build_ee_variant(Variant::V1, toy::tiny_arch(0.0f));
    Rng rng(104);
    g.init_params(rng);
    auto examples = toy::make_examples(1, rng, 0.0);
    const Tensor x = examples_to_tensor(examples.data(), 1);
    const std::vector<std::uint8_t> labels{examples[0].label};

    auto eval_loss1 = [&] {
        const Tensor z1 = g.forward_pass1(x, Mode::Eval);
        Tensor flat({10});
        for (int i = 0; i < 10; ++i) flat[std::size_t(i)] = z1(0, i);
        return cross_entropy(flat, labels[0]).first;
    };
    const double before = eval_loss1();
    Optimizer opt1(OptimizerSpec::adam(1e-3f)), opt2(OptimizerSpec::adam(1e-3f));
    Rng drop(1);
    train_step_ee(g, x, labels, opt1, opt2, drop);
    CHECK(eval_loss1() < before);
}

TEST_CASE("same seed reproduces histories and parameters exactly") {
    Rng data_rng(105);
    const auto train_set = toy::make_examples(96, data_rng);
    const auto val_set = toy::make_examples(32, data_rng);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 32;
    cfg.seed = 2024;

    auto run = [&] {
        BranchGraph g = build_ee_variant(Variant::V1, toy::tiny_arch(0.3f));
        const TrainHistory h = train_ee(g, train_set, val_set, cfg);
        return std::make_pair(h, snapshot(g.all_params()));
    };
    const auto [h1, p1] = run();
    const auto [h2, p2] = run();
    REQUIRE(h1.size() == h2.size());
    for (std::size_t e = 0; e < h1.size(); ++e) {
        CHECK(h1[e].loss1 == h2[e].loss1);
        CHECK(h1[e].loss2 == h2[e].loss2);
        CHECK(h1[e].val_acc_exit == h2[e].val_acc_exit);
        CHECK(h1[e].val_acc_backbone == h2[e].val_acc_backbone);
    }
    CHECK(bitwise_equal(p1, p2));
}

TEST_CASE("config invariants") {
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.epochs = 1;
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("empty datasets are rejected") {
    BranchGraph g = build_ee_variant(Variant::V1, toy::tiny_arch());
    Rng rng(106);
    const auto some = toy::make_examples(8, rng);
    TrainConfig cfg;
    cfg.epochs = 1;
    CHECK_THROWS_AS(train_ee(g, {}, some, cfg), ConfigError);
    CHECK_THROWS_AS(train_ee(g, some, {}, cfg), ConfigError);
}

TEST_CASE("train_ee rejects a baseline graph, train_baseline rejects variants") {
    Rng rng(107);
    const auto data = toy::make_examples(8, rng);
    TrainConfig cfg;
    cfg.epochs = 1;
    BranchGraph baseline = build_baseline(toy::tiny_arch());
    CHECK_THROWS_AS(train_ee(baseline, data, data, cfg), StateError);
    BranchGraph v1 = build_ee_variant(Variant::V1, toy::tiny_arch());
    CHECK_THROWS_AS(train_baseline(v1, data, data, cfg), StateError);
}

TEST_CASE("untrained model sits at chance level on random labels") {
    BranchGraph g = build_baseline(toy::tiny_arch());
    Rng rng(108);
    g.init_params(rng);
    const auto data = toy::make_examples(2000, rng, 0.05, /*random_labels=*/true);
    const EvalAccuracy acc = evaluate_graph(g, data);
    CHECK(acc.backbone_acc > 0.07);
    CHECK(acc.backbone_acc < 0.13);
}

TEST_CASE("baseline loss trends down over five epochs on a separable toy set") {
    Rng rng(109);
    const auto train_set = toy::make_examples(256, rng, 0.02);
    const auto val_set = toy::make_examples(64, rng, 0.02);
    BranchGraph g = build_baseline(toy::tiny_arch(0.0f));
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.batch_size = 32;
    cfg.seed = 7;
    const TrainHistory h = train_baseline(g, train_set, val_set, cfg);
    REQUIRE(h.size() == 5);
    CHECK(h.back().loss2 < h.front().loss2);
    for (const auto& st : h) {
        CHECK(std::isfinite(st.loss1));
        CHECK(std::isfinite(st.loss2));
    }
}

TEST_CASE("early stopping with patience cuts the epoch loop short") {
    Rng rng(110);
    const auto train_set = toy::make_examples(64, rng);
    const auto val_set = toy::make_examples(32, rng);
    BranchGraph g = build_ee_variant(Variant::V1, toy::tiny_arch());
    TrainConfig cfg;
    cfg.epochs = 40;
    cfg.batch_size = 32;
    cfg.patience = 2;
    const TrainHistory h = train_ee(g, train_set, val_set, cfg);
    CHECK(h.size() < 40);
}
