#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eeamc/layers.hpp"

namespace eeamc {

enum class Variant : std::uint8_t { Baseline = 0, V0 = 1, V1 = 2, V2 = 3, V3 = 4 };

const char* variant_name(Variant v);
Variant variant_from_string(const std::string& s);

/// Multi-branch network. `common` feeds both heads; `exit_head` is the
/// intermediate classifier; `tail` completes the backbone. The baseline
/// keeps everything in `tail` and has no exit head. Pass 1 caches the
/// branch-point activation Q so pass 2 never re-executes the common layers.
///
/// theta1 = params(common) + params(exit_head); theta2 = params(tail).
struct BranchGraph {
    Variant variant = Variant::Baseline;
    std::vector<Layer> common;
    std::vector<Layer> exit_head;
    std::vector<Layer> tail;

    Tensor q_cache;
    bool q_valid = false;

    bool has_exit() const { return !exit_head.empty(); }

    /// Common layers then exit head; stores Q. Throws StateError on a
    /// baseline graph.
    Tensor forward_pass1(const Tensor& x, Mode mode, Rng* rng = nullptr);

    /// Tail only, starting from the cached Q. Throws StateError when no
    /// pass 1 populated the cache.
    Tensor forward_pass2(Mode mode, Rng* rng = nullptr);

    /// Monolithic common + tail forward (the backbone on its own).
    Tensor forward_backbone(const Tensor& x, Mode mode, Rng* rng = nullptr);

    /// Backprop loss-1: through the exit head and on through the common
    /// layers. `grad_logits` is the gradient at the exit head's logits.
    void backward_theta1(const Tensor& grad_logits);

    /// Backprop loss-2: through the tail only. The gradient reaching Q is
    /// discarded; common-layer parameters never see loss 2.
    void backward_theta2(const Tensor& grad_logits);

    void init_params(Rng& rng);
    void zero_grads();
    void clear_caches();

    std::vector<ParamRef> theta1_params();
    std::vector<ParamRef> theta2_params();
    std::vector<ParamRef> all_params();
    std::size_t param_count() const;
};

} // namespace eeamc
