#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "eeamc/optimizer.hpp"

using namespace eeamc;

namespace {

struct OneParam {
    Tensor value{{1}};
    Tensor grad{{1}};
    std::vector<ParamRef> refs() { return {{&value, &grad, "p"}}; }
};

} // namespace

TEST_CASE("sgd arithmetic: 1.0 - 0.1 * 0.5 = 0.95") {
    OneParam p;
    p.value[0] = 1.0f;
    p.grad[0] = 0.5f;
    Optimizer opt(OptimizerSpec::sgd(0.1f));
    opt.step(p.refs());
    CHECK(p.value[0] == doctest::Approx(0.95).epsilon(1e-7));
}

TEST_CASE("zero gradient leaves parameters untouched") {
    OneParam p;
    p.value[0] = 2.5f;
    Optimizer opt(OptimizerSpec::sgd(0.1f));
    opt.step(p.refs());
    CHECK(p.value[0] == 2.5f);
}

TEST_CASE("adam first step moves by roughly lr in the gradient direction") {
    // At t=1 the bias-corrected update is lr * g / (|g| + eps); magnitude
    // lr up to the eps correction, sign of g.
    for (const float g : {0.7f, -0.003f, 12.0f}) {
        OneParam p;
        p.value[0] = 0.0f;
        p.grad[0] = g;
        Optimizer opt(OptimizerSpec::adam(1e-3f));
        opt.step(p.refs());
        const double expected = -1e-3 * double(g) / (std::abs(double(g)) + 1e-8);
        CHECK(p.value[0] == doctest::Approx(expected).epsilon(1e-4));
    }
}

TEST_CASE("adam bias correction across two steps") {
    // Constant gradient g: m-hat and v-hat equal g and g^2 at every step,
    // so each update is lr * g / (|g| + eps).
    OneParam p;
    p.value[0] = 1.0f;
    Optimizer opt(OptimizerSpec::adam(0.01f));
    for (int i = 0; i < 2; ++i) {
        p.grad[0] = 2.0f;
        opt.step(p.refs());
    }
    CHECK(p.value[0] == doctest::Approx(1.0 - 2 * 0.01).epsilon(1e-5));
    CHECK(opt.step_count() == 2);
}

TEST_CASE("non-finite gradient raises a numeric error naming the parameter") {
    OneParam p;
    p.grad[0] = std::numeric_limits<float>::quiet_NaN();
    Optimizer opt(OptimizerSpec::adam(1e-3f));
    CHECK_THROWS_WITH_AS(opt.step(p.refs()), doctest::Contains("p"), NumericError);
}

TEST_CASE("spec validation") {
    CHECK_THROWS_AS(Optimizer(OptimizerSpec::sgd(0.0f)), ConfigError);
    OptimizerSpec bad = OptimizerSpec::adam(1e-3f);
    bad.beta1 = 1.0f;
    CHECK_THROWS_AS((void)Optimizer{bad}, ConfigError);
}

TEST_CASE("sgd momentum accumulates velocity") {
    OneParam p;
    p.value[0] = 0.0f;
    Optimizer opt(OptimizerSpec::sgd(0.1f, 0.9f));
    p.grad[0] = 1.0f;
    opt.step(p.refs());  // v=1, p=-0.1
    p.grad[0] = 1.0f;
    opt.step(p.refs());  // v=1.9, p=-0.29
    CHECK(p.value[0] == doctest::Approx(-0.29).epsilon(1e-6));
}
