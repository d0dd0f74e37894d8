#include "eeamc/layers.hpp"

#include <cmath>
#include <cstring>

#include "eeamc/error.hpp"
#include "eeamc/kernels.hpp"

namespace eeamc {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Conv1D: return "Conv1D";
        case LayerKind::ReLU: return "ReLU";
        case LayerKind::MaxPool1D: return "MaxPool1D";
        case LayerKind::BatchNorm1D: return "BatchNorm1D";
        case LayerKind::Dense: return "Dense";
        case LayerKind::Dropout: return "Dropout";
        case LayerKind::Softmax: return "Softmax";
    }
    return "?";
}

Layer Layer::conv1d(std::string name, int in_ch, int out_ch, int k, int stride, int pad) {
    if (in_ch <= 0 || out_ch <= 0 || k <= 0 || stride <= 0 || pad < 0)
        throw ConfigError("conv1d '" + name + "': extents must be positive");
    Layer l;
    l.kind = LayerKind::Conv1D;
    l.name = std::move(name);
    l.in_channels = in_ch;
    l.out_channels = out_ch;
    l.kernel = k;
    l.stride = stride;
    l.padding = pad;
    l.weight = Tensor({out_ch, in_ch, k});
    l.bias = Tensor({out_ch});
    l.grad_weight = Tensor({out_ch, in_ch, k});
    l.grad_bias = Tensor({out_ch});
    return l;
}

Layer Layer::relu(std::string name) {
    Layer l;
    l.kind = LayerKind::ReLU;
    l.name = std::move(name);
    return l;
}

Layer Layer::maxpool1d(std::string name, int window, int stride) {
    if (window <= 0 || stride <= 0)
        throw ConfigError("maxpool1d '" + name + "': extents must be positive");
    Layer l;
    l.kind = LayerKind::MaxPool1D;
    l.name = std::move(name);
    l.window = window;
    l.pool_stride = stride;
    return l;
}

Layer Layer::batchnorm1d(std::string name, int channels, float momentum, float epsilon) {
    if (channels <= 0) throw ConfigError("batchnorm1d '" + name + "': channels must be positive");
    if (!(epsilon > 0.0f)) throw ConfigError("batchnorm1d '" + name + "': epsilon must be > 0");
    Layer l;
    l.kind = LayerKind::BatchNorm1D;
    l.name = std::move(name);
    l.channels = channels;
    l.momentum = momentum;
    l.epsilon = epsilon;
    l.gamma = Tensor::full({channels}, 1.0f);
    l.beta = Tensor({channels});
    l.grad_gamma = Tensor({channels});
    l.grad_beta = Tensor({channels});
    l.running_mean = Tensor({channels});
    l.running_var = Tensor::full({channels}, 1.0f);
    return l;
}

Layer Layer::dense(std::string name, int in_dim, int out_dim) {
    if (in_dim <= 0 || out_dim <= 0)
        throw ConfigError("dense '" + name + "': extents must be positive");
    Layer l;
    l.kind = LayerKind::Dense;
    l.name = std::move(name);
    l.in_dim = in_dim;
    l.out_dim = out_dim;
    l.weight = Tensor({out_dim, in_dim});
    l.bias = Tensor({out_dim});
    l.grad_weight = Tensor({out_dim, in_dim});
    l.grad_bias = Tensor({out_dim});
    return l;
}

Layer Layer::dropout(std::string name, float rate) {
    if (!(rate >= 0.0f && rate < 1.0f))
        throw ConfigError("dropout '" + name + "': rate must be in [0,1)");
    Layer l;
    l.kind = LayerKind::Dropout;
    l.name = std::move(name);
    l.rate = rate;
    return l;
}

Layer Layer::softmax(std::string name) {
    Layer l;
    l.kind = LayerKind::Softmax;
    l.name = std::move(name);
    return l;
}

void Layer::init_params(Rng& rng) {
    auto kaiming_uniform = [&rng](Tensor& w, int fan_in) {
        const double bound = std::sqrt(6.0 / double(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = float(rng.uniform(-bound, bound));
    };
    switch (kind) {
        case LayerKind::Conv1D:
            kaiming_uniform(weight, in_channels * kernel);
            bias.zero();
            break;
        case LayerKind::Dense:
            kaiming_uniform(weight, in_dim);
            bias.zero();
            break;
        case LayerKind::BatchNorm1D:
            gamma.fill(1.0f);
            beta.zero();
            running_mean.zero();
            running_var.fill(1.0f);
            break;
        default:
            break;
    }
}

void Layer::validate_forward_shape(const Tensor& x) const {
    switch (kind) {
        case LayerKind::Conv1D: {
            if (x.rank() != 3 || x.dim(1) != in_channels)
                throw ConfigError("conv1d '" + name + "': expected (N," +
                                  std::to_string(in_channels) + ",L) input, got " + x.shape_str());
            const int lo = conv1d_output_length(x.dim(2), kernel, stride, padding);
            if (lo < 1)
                throw ConfigError("conv1d '" + name + "': output length " + std::to_string(lo) +
                                  " < 1 for input " + x.shape_str());
            break;
        }
        case LayerKind::MaxPool1D:
            if (x.rank() != 3)
                throw ConfigError("maxpool1d '" + name + "': expected rank-3 input, got " +
                                  x.shape_str());
            if (x.dim(2) < window)
                throw ConfigError("maxpool1d '" + name + "': window " + std::to_string(window) +
                                  " exceeds input length " + std::to_string(x.dim(2)));
            break;
        case LayerKind::BatchNorm1D:
            if (x.rank() != 3 || x.dim(1) != channels)
                throw ConfigError("batchnorm1d '" + name + "': expected (N," +
                                  std::to_string(channels) + ",L) input, got " + x.shape_str());
            break;
        case LayerKind::Dense: {
            const int flat = x.rank() == 3 ? x.dim(1) * x.dim(2) : (x.rank() == 2 ? x.dim(1) : 0);
            if (flat != in_dim)
                throw ConfigError("dense '" + name + "': expected flattened width " +
                                  std::to_string(in_dim) + ", got " + x.shape_str());
            break;
        }
        case LayerKind::Softmax:
            if (x.rank() != 2)
                throw ConfigError("softmax '" + name + "': expected (N,C) input, got " +
                                  x.shape_str());
            break;
        default:
            break;
    }
}

Tensor Layer::forward(const Tensor& x, Mode mode, Rng* rng) {
    validate_forward_shape(x);
    mode_cache_ = mode;
    fwd_called_ = true;

    switch (kind) {
        case LayerKind::Conv1D: {
            if (!x.all_finite())
                throw NumericError("conv1d '" + name + "': non-finite input");
            const int n = x.dim(0), l = x.dim(2);
            const int lo = conv1d_output_length(l, kernel, stride, padding);
            Tensor y({n, out_channels, lo});
            kernels::conv1d_forward(x.data(), n, in_channels, l, weight.data(), bias.data(),
                                    out_channels, kernel, stride, padding, y.data(), lo);
            in_cache_ = x;
            return y;
        }
        case LayerKind::ReLU: {
            Tensor y = x;
            kernels::relu_forward(x.data(), x.size(), y.data());
            in_cache_ = x;
            return y;
        }
        case LayerKind::MaxPool1D: {
            const int n = x.dim(0), c = x.dim(1), l = x.dim(2);
            const int lo = maxpool1d_output_length(l, window, pool_stride);
            Tensor y({n, c, lo});
            pool_argmax_.assign(std::size_t(n) * c * lo, 0);
            kernels::maxpool1d_forward(x.data(), n, c, l, window, pool_stride, y.data(), lo,
                                       pool_argmax_.data());
            in_cache_ = x;
            return y;
        }
        case LayerKind::BatchNorm1D: {
            const int n = x.dim(0), l = x.dim(2);
            Tensor y = x;
            bn_mean_.assign(std::size_t(channels), 0.0);
            bn_inv_std_.assign(std::size_t(channels), 0.0);
            if (mode == Mode::Train) {
                std::vector<double> var(static_cast<std::size_t>(channels));
                kernels::batchnorm_stats(x.data(), n, channels, l, bn_mean_.data(), var.data());
                for (int c = 0; c < channels; ++c) {
                    bn_inv_std_[std::size_t(c)] = 1.0 / std::sqrt(var[std::size_t(c)] + epsilon);
                    running_mean[std::size_t(c)] =
                        float((1.0 - momentum) * running_mean[std::size_t(c)] +
                              momentum * bn_mean_[std::size_t(c)]);
                    running_var[std::size_t(c)] =
                        float((1.0 - momentum) * running_var[std::size_t(c)] +
                              momentum * var[std::size_t(c)]);
                }
            } else {
                for (int c = 0; c < channels; ++c) {
                    bn_mean_[std::size_t(c)] = running_mean[std::size_t(c)];
                    bn_inv_std_[std::size_t(c)] =
                        1.0 / std::sqrt(double(running_var[std::size_t(c)]) + epsilon);
                }
            }
            kernels::batchnorm_apply(x.data(), n, channels, l, bn_mean_.data(),
                                     bn_inv_std_.data(), gamma.data(), beta.data(), y.data());
            in_cache_ = x;
            return y;
        }
        case LayerKind::Dense: {
            const int n = x.dim(0);
            dense_in_rank_ = x.rank();
            if (x.rank() == 3) {
                dense_in_c_ = x.dim(1);
                dense_in_l_ = x.dim(2);
            }
            Tensor y({n, out_dim});
            kernels::dense_forward(x.data(), n, in_dim, weight.data(), bias.data(), out_dim,
                                   y.data());
            in_cache_ = x;
            return y;
        }
        case LayerKind::Dropout: {
            if (mode == Mode::Eval) {
                drop_mask_ = Tensor();
                return x;
            }
            if (rng == nullptr)
                throw StateError("dropout '" + name + "': train-mode forward needs an RNG");
            Tensor y = x;
            drop_mask_ = x;
            const float keep_scale = 1.0f / (1.0f - rate);
            for (std::size_t i = 0; i < x.size(); ++i) {
                // mask drawn serially so results do not depend on threading
                const float m = rng->uniform() < double(rate) ? 0.0f : keep_scale;
                drop_mask_[i] = m;
                y[i] = x[i] * m;
            }
            return y;
        }
        case LayerKind::Softmax: {
            Tensor y = x;
            kernels::softmax_forward(x.data(), x.dim(0), x.dim(1), y.data());
            out_cache_ = y;
            return y;
        }
    }
    throw StateError("unreachable layer kind");
}

Tensor Layer::backward(const Tensor& grad_out) {
    if (!fwd_called_)
        throw StateError("layer '" + name + "': backward before forward");

    switch (kind) {
        case LayerKind::Conv1D: {
            const Tensor& x = in_cache_;
            const int n = x.dim(0), l = x.dim(2);
            const int lo = grad_out.dim(2);
            kernels::conv1d_backward_params(grad_out.data(), n, out_channels, lo, x.data(),
                                            in_channels, l, kernel, stride, padding,
                                            grad_weight.data(), grad_bias.data());
            Tensor gx({n, in_channels, l});
            kernels::conv1d_backward_input(grad_out.data(), n, out_channels, lo, weight.data(),
                                           in_channels, kernel, stride, padding, gx.data(), l);
            return gx;
        }
        case LayerKind::ReLU: {
            Tensor gx = grad_out;
            kernels::relu_backward(in_cache_.data(), grad_out.data(), grad_out.size(), gx.data());
            return gx;
        }
        case LayerKind::MaxPool1D: {
            const int n = in_cache_.dim(0), c = in_cache_.dim(1), l = in_cache_.dim(2);
            Tensor gx({n, c, l});
            kernels::maxpool1d_backward(grad_out.data(), n, c, grad_out.dim(2),
                                        pool_argmax_.data(), gx.data(), l);
            return gx;
        }
        case LayerKind::BatchNorm1D: {
            const Tensor& x = in_cache_;
            const int n = x.dim(0), l = x.dim(2);
            Tensor gx = x;
            if (mode_cache_ == Mode::Train) {
                kernels::batchnorm_backward(x.data(), grad_out.data(), n, channels, l,
                                            bn_mean_.data(), bn_inv_std_.data(), gamma.data(),
                                            gx.data(), grad_gamma.data(), grad_beta.data());
            } else {
                // running statistics are constants in eval mode
                for (int c = 0; c < channels; ++c) {
                    const double scale = double(gamma[std::size_t(c)]) * bn_inv_std_[std::size_t(c)];
                    double gg = 0.0, gb = 0.0;
                    for (int in = 0; in < n; ++in)
                        for (int t = 0; t < l; ++t) {
                            const std::size_t i = (std::size_t(in) * channels + c) * l + t;
                            const double g = grad_out[i];
                            gx[i] = float(scale * g);
                            gg += g * (double(x[i]) - bn_mean_[std::size_t(c)]) *
                                  bn_inv_std_[std::size_t(c)];
                            gb += g;
                        }
                    grad_gamma[std::size_t(c)] += float(gg);
                    grad_beta[std::size_t(c)] += float(gb);
                }
            }
            return gx;
        }
        case LayerKind::Dense: {
            const Tensor& x = in_cache_;
            const int n = x.dim(0);
            kernels::dense_backward_params(grad_out.data(), n, out_dim, x.data(), in_dim,
                                           grad_weight.data(), grad_bias.data());
            Tensor gx = dense_in_rank_ == 3 ? Tensor({n, dense_in_c_, dense_in_l_})
                                            : Tensor({n, in_dim});
            kernels::dense_backward_input(grad_out.data(), n, out_dim, weight.data(), in_dim,
                                          gx.data());
            return gx;
        }
        case LayerKind::Dropout: {
            if (drop_mask_.empty()) return grad_out;  // eval forward was identity
            Tensor gx = grad_out;
            for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = grad_out[i] * drop_mask_[i];
            return gx;
        }
        case LayerKind::Softmax: {
            // full Jacobian: gx_i = p_i * (g_i - sum_j g_j p_j)
            const Tensor& p = out_cache_;
            Tensor gx = grad_out;
            const int n = p.dim(0), c = p.dim(1);
            for (int in = 0; in < n; ++in) {
                double dot = 0.0;
                for (int j = 0; j < c; ++j)
                    dot += double(grad_out(in, j)) * double(p(in, j));
                for (int j = 0; j < c; ++j)
                    gx(in, j) = float(double(p(in, j)) * (double(grad_out(in, j)) - dot));
            }
            return gx;
        }
    }
    throw StateError("unreachable layer kind");
}

void Layer::zero_grads() {
    if (!grad_weight.empty()) grad_weight.zero();
    if (!grad_bias.empty()) grad_bias.zero();
    if (!grad_gamma.empty()) grad_gamma.zero();
    if (!grad_beta.empty()) grad_beta.zero();
}

std::size_t Layer::param_count() const {
    return weight.size() + bias.size() + gamma.size() + beta.size();
}

void Layer::collect_params(std::vector<ParamRef>& out) {
    if (kind == LayerKind::Conv1D || kind == LayerKind::Dense) {
        out.push_back({&weight, &grad_weight, name + ".weight"});
        out.push_back({&bias, &grad_bias, name + ".bias"});
    } else if (kind == LayerKind::BatchNorm1D) {
        out.push_back({&gamma, &grad_gamma, name + ".gamma"});
        out.push_back({&beta, &grad_beta, name + ".beta"});
    }
}

void Layer::clear_caches() {
    in_cache_ = Tensor();
    out_cache_ = Tensor();
    drop_mask_ = Tensor();
    pool_argmax_.clear();
    bn_mean_.clear();
    bn_inv_std_.clear();
    fwd_called_ = false;
}

std::pair<double, Tensor> cross_entropy(const Tensor& probs, int label) {
    const int c = probs.rank() == 2 ? probs.dim(1) : probs.dim(0);
    if (label < 0 || label >= c)
        throw ConfigError("cross_entropy: label " + std::to_string(label) + " out of range");
    const double p = std::max(double(probs[std::size_t(label)]), 1e-12);
    const double loss = -std::log(p);
    Tensor grad = probs;
    grad[std::size_t(label)] -= 1.0f;
    return {loss, grad};
}

std::pair<double, Tensor> cross_entropy_batch(const Tensor& probs,
                                              const std::vector<std::uint8_t>& labels) {
    const int n = probs.dim(0), c = probs.dim(1);
    if (int(labels.size()) != n)
        throw ConfigError("cross_entropy_batch: label count mismatch");
    Tensor grad = probs;
    double loss = 0.0;
    const float inv_n = 1.0f / float(n);
    for (int in = 0; in < n; ++in) {
        const int lab = labels[std::size_t(in)];
        if (lab < 0 || lab >= c)
            throw ConfigError("cross_entropy_batch: label out of range");
        loss += -std::log(std::max(double(probs(in, lab)), 1e-12));
        grad(in, lab) -= 1.0f;
        for (int j = 0; j < c; ++j) grad(in, j) *= inv_n;
    }
    return {loss / n, grad};
}

int classify(const Tensor& probs) {
    int best = 0;
    const std::size_t n = probs.size();
    for (std::size_t i = 1; i < n; ++i)
        if (probs[i] > probs[std::size_t(best)]) best = int(i);
    return best;
}

} // namespace eeamc
