#pragma once

#include <string>
#include <vector>

#include "eeamc/layers.hpp"

namespace eeamc {

enum class OptimizerKind { SGD, Adam };

struct OptimizerSpec {
    OptimizerKind kind = OptimizerKind::Adam;
    float lr = 1e-3f;
    float momentum = 0.0f;                     // SGD
    float beta1 = 0.9f, beta2 = 0.999f;        // Adam
    float eps = 1e-8f;

    static OptimizerSpec adam(float lr = 1e-3f) { return {OptimizerKind::Adam, lr, 0.0f, 0.9f, 0.999f, 1e-8f}; }
    static OptimizerSpec sgd(float lr, float momentum = 0.0f) {
        return {OptimizerKind::SGD, lr, momentum, 0.0f, 0.0f, 0.0f};
    }
    void validate() const;
};

/// Owns per-parameter moment buffers for one parameter group. The buffer
/// layout is fixed by the first step() call; subsequent calls must pass the
/// same group in the same order.
class Optimizer {
public:
    explicit Optimizer(OptimizerSpec spec);

    void step(const std::vector<ParamRef>& params);

    long step_count() const { return t_; }
    const OptimizerSpec& spec() const { return spec_; }

private:
    OptimizerSpec spec_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
    bool attached_ = false;
};

} // namespace eeamc
