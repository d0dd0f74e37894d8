#include "eeamc/graph.hpp"

#include "eeamc/error.hpp"

namespace eeamc {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::Baseline: return "baseline";
        case Variant::V0: return "v0";
        case Variant::V1: return "v1";
        case Variant::V2: return "v2";
        case Variant::V3: return "v3";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "baseline") return Variant::Baseline;
    if (s == "v0") return Variant::V0;
    if (s == "v1") return Variant::V1;
    if (s == "v2") return Variant::V2;
    if (s == "v3") return Variant::V3;
    throw ConfigError("unknown variant '" + s + "' (expected baseline|v0|v1|v2|v3)");
}

namespace {

Tensor run_layers(std::vector<Layer>& layers, Tensor x, Mode mode, Rng* rng) {
    for (auto& layer : layers) x = layer.forward(x, mode, rng);
    return x;
}

// Backward through a head that ends in Softmax, entered with the gradient
// at the logits (the fused softmax+cross-entropy gradient), so the softmax
// layer itself is skipped.
Tensor backward_skip_softmax(std::vector<Layer>& layers, Tensor grad) {
    if (layers.empty() || layers.back().kind != LayerKind::Softmax)
        throw StateError("head does not end in softmax");
    for (int i = int(layers.size()) - 2; i >= 0; --i) grad = layers[std::size_t(i)].backward(grad);
    return grad;
}

} // namespace

Tensor BranchGraph::forward_pass1(const Tensor& x, Mode mode, Rng* rng) {
    if (!has_exit())
        throw StateError("forward_pass1: graph '" + std::string(variant_name(variant)) +
                         "' has no exit head");
    q_cache = run_layers(common, x, mode, rng);
    q_valid = true;
    return run_layers(exit_head, q_cache, mode, rng);
}

Tensor BranchGraph::forward_pass2(Mode mode, Rng* rng) {
    if (!q_valid) throw StateError("forward_pass2: no cached Q (run forward_pass1 first)");
    return run_layers(tail, q_cache, mode, rng);
}

Tensor BranchGraph::forward_backbone(const Tensor& x, Mode mode, Rng* rng) {
    return run_layers(tail, run_layers(common, x, mode, rng), mode, rng);
}

void BranchGraph::backward_theta1(const Tensor& grad_logits) {
    Tensor g = backward_skip_softmax(exit_head, grad_logits);
    for (int i = int(common.size()) - 1; i >= 0; --i) g = common[std::size_t(i)].backward(g);
}

void BranchGraph::backward_theta2(const Tensor& grad_logits) {
    backward_skip_softmax(tail, grad_logits);  // gradient at Q intentionally dropped
}

void BranchGraph::init_params(Rng& rng) {
    for (auto& l : common) l.init_params(rng);
    for (auto& l : exit_head) l.init_params(rng);
    for (auto& l : tail) l.init_params(rng);
}

void BranchGraph::zero_grads() {
    for (auto& l : common) l.zero_grads();
    for (auto& l : exit_head) l.zero_grads();
    for (auto& l : tail) l.zero_grads();
}

void BranchGraph::clear_caches() {
    for (auto& l : common) l.clear_caches();
    for (auto& l : exit_head) l.clear_caches();
    for (auto& l : tail) l.clear_caches();
    q_cache = Tensor();
    q_valid = false;
}

std::vector<ParamRef> BranchGraph::theta1_params() {
    std::vector<ParamRef> out;
    for (auto& l : common) l.collect_params(out);
    for (auto& l : exit_head) l.collect_params(out);
    return out;
}

std::vector<ParamRef> BranchGraph::theta2_params() {
    std::vector<ParamRef> out;
    for (auto& l : tail) l.collect_params(out);
    return out;
}

std::vector<ParamRef> BranchGraph::all_params() {
    auto out = theta1_params();
    auto t2 = theta2_params();
    out.insert(out.end(), t2.begin(), t2.end());
    return out;
}

std::size_t BranchGraph::param_count() const {
    std::size_t n = 0;
    for (const auto& l : common) n += l.param_count();
    for (const auto& l : exit_head) n += l.param_count();
    for (const auto& l : tail) n += l.param_count();
    return n;
}

} // namespace eeamc
