#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eeamc/rng.hpp"
#include "eeamc/tensor.hpp"

namespace eeamc {

enum class Mode { Train, Eval };

enum class LayerKind : std::uint8_t {
    Conv1D = 1,
    ReLU = 2,
    MaxPool1D = 3,
    BatchNorm1D = 4,
    Dense = 5,
    Dropout = 6,
    Softmax = 7,
};

const char* layer_kind_name(LayerKind k);

// Handle to one parameter tensor and its gradient, tagged for diagnostics.
struct ParamRef {
    Tensor* value;
    Tensor* grad;
    std::string name;
};

/// One network layer: static configuration, parameters, gradients and the
/// forward caches backward needs. Conv-stage activations are (N, C, L);
/// Dense flattens (N, C, L) input to (N, C*L) implicitly and restores the
/// shape on backward.
class Layer {
public:
    LayerKind kind;
    std::string name;

    // Conv1D
    int in_channels = 0, out_channels = 0, kernel = 0, stride = 1, padding = 0;
    // MaxPool1D
    int window = 0, pool_stride = 0;
    // BatchNorm1D
    int channels = 0;
    float momentum = 0.1f, epsilon = 1e-5f;
    // Dense
    int in_dim = 0, out_dim = 0;
    // Dropout
    float rate = 0.0f;

    Tensor weight, bias, grad_weight, grad_bias;     // Conv1D / Dense
    Tensor gamma, beta, grad_gamma, grad_beta;       // BatchNorm1D
    Tensor running_mean, running_var;                // BatchNorm1D buffers

    static Layer conv1d(std::string name, int in_ch, int out_ch, int k, int stride, int pad);
    static Layer relu(std::string name);
    static Layer maxpool1d(std::string name, int window, int stride);
    static Layer batchnorm1d(std::string name, int channels, float momentum = 0.1f,
                             float epsilon = 1e-5f);
    static Layer dense(std::string name, int in_dim, int out_dim);
    static Layer dropout(std::string name, float rate);
    static Layer softmax(std::string name);

    // Kaiming-uniform fan-in for conv/dense weights, zero bias, unit gamma.
    void init_params(Rng& rng);

    Tensor forward(const Tensor& x, Mode mode, Rng* rng = nullptr);
    Tensor backward(const Tensor& grad_out);

    void zero_grads();
    std::size_t param_count() const;
    void collect_params(std::vector<ParamRef>& out);

    bool has_params() const { return kind == LayerKind::Conv1D || kind == LayerKind::Dense ||
                                     kind == LayerKind::BatchNorm1D; }

    // Drops caches; parameters and buffers survive.
    void clear_caches();

private:
    void validate_forward_shape(const Tensor& x) const;

    // caches
    Tensor in_cache_;
    Tensor out_cache_;             // softmax keeps probs
    Tensor drop_mask_;
    std::vector<int> pool_argmax_;
    std::vector<double> bn_mean_, bn_inv_std_;
    Mode mode_cache_ = Mode::Eval;
    bool fwd_called_ = false;
    int dense_in_rank_ = 0;        // restore (N,C,L) on backward through Dense
    int dense_in_c_ = 0, dense_in_l_ = 0;
};

// -ln(probs[label]) with the probability clamped at 1e-12; the returned
// gradient is with respect to the logits feeding the softmax that produced
// `probs`, i.e. probs - onehot(label).
std::pair<double, Tensor> cross_entropy(const Tensor& probs, int label);

// Batch-mean loss over rows of probs (N, C); gradient scaled by 1/N.
std::pair<double, Tensor> cross_entropy_batch(const Tensor& probs,
                                              const std::vector<std::uint8_t>& labels);

// Argmax with lowest-index tie-break.
int classify(const Tensor& probs);

} // namespace eeamc
