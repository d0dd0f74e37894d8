#include "eeamc/optimizer.hpp"

#include <cmath>

#include "eeamc/error.hpp"

namespace eeamc {

void OptimizerSpec::validate() const {
    if (!(lr > 0.0f)) throw ConfigError("optimizer: learning rate must be > 0");
    if (kind == OptimizerKind::Adam) {
        if (!(beta1 >= 0.0f && beta1 < 1.0f && beta2 >= 0.0f && beta2 < 1.0f))
            throw ConfigError("optimizer: betas must lie in [0,1)");
        if (!(eps > 0.0f)) throw ConfigError("optimizer: eps must be > 0");
    } else {
        if (!(momentum >= 0.0f && momentum < 1.0f))
            throw ConfigError("optimizer: momentum must lie in [0,1)");
    }
}

Optimizer::Optimizer(OptimizerSpec spec) : spec_(spec) { spec_.validate(); }

void Optimizer::step(const std::vector<ParamRef>& params) {
    if (!attached_) {
        m_.reserve(params.size());
        for (const auto& p : params) {
            Tensor z = *p.value;
            z.zero();
            m_.push_back(z);
        }
        if (spec_.kind == OptimizerKind::Adam) v_ = m_;
        attached_ = true;
    }
    if (params.size() != m_.size())
        throw StateError("optimizer: parameter group changed between steps");

    ++t_;
    const double lr = spec_.lr;

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& value = *params[pi].value;
        const Tensor& grad = *params[pi].grad;
        if (!value.same_shape(grad) || !value.same_shape(m_[pi]))
            throw StateError("optimizer: shape mismatch for " + params[pi].name);
        if (!grad.all_finite())
            throw NumericError("optimizer: non-finite gradient in " + params[pi].name);

        if (spec_.kind == OptimizerKind::SGD) {
            Tensor& vel = m_[pi];
            if (spec_.momentum != 0.0f) {
                for (std::size_t i = 0; i < value.size(); ++i) {
                    vel[i] = spec_.momentum * vel[i] + grad[i];
                    value[i] = float(double(value[i]) - lr * double(vel[i]));
                }
            } else {
                for (std::size_t i = 0; i < value.size(); ++i)
                    value[i] = float(double(value[i]) - lr * double(grad[i]));
            }
        } else {
            Tensor& m = m_[pi];
            Tensor& v = v_[pi];
            const double b1 = spec_.beta1, b2 = spec_.beta2;
            const double bc1 = 1.0 - std::pow(b1, double(t_));
            const double bc2 = 1.0 - std::pow(b2, double(t_));
            for (std::size_t i = 0; i < value.size(); ++i) {
                const double g = grad[i];
                const double mi = b1 * double(m[i]) + (1.0 - b1) * g;
                const double vi = b2 * double(v[i]) + (1.0 - b2) * g * g;
                m[i] = float(mi);
                v[i] = float(vi);
                const double mhat = mi / bc1;
                const double vhat = vi / bc2;
                value[i] = float(double(value[i]) - lr * mhat / (std::sqrt(vhat) + spec_.eps));
            }
        }
    }
}

} // namespace eeamc
