#include "eeamc/arch.hpp"

#include <string>

#include "eeamc/error.hpp"
#include "eeamc/kernels.hpp"

namespace eeamc {

void ArchConfig::validate() const {
    for (int i = 0; i < 6; ++i) {
        if (conv_channels[std::size_t(i)] <= 0)
            throw ConfigError("arch: conv channel count must be positive (block " +
                              std::to_string(i + 1) + ")");
        if (conv_kernels[std::size_t(i)] <= 0)
            throw ConfigError("arch: conv kernel size must be positive (block " +
                              std::to_string(i + 1) + ")");
    }
    for (int w : fc_widths)
        if (w <= 0) throw ConfigError("arch: FC widths must be positive");
    if (fc_widths[2] != num_classes)
        throw ConfigError("arch: final FC width must equal the class count");
    if (exit_fc_width <= 0) throw ConfigError("arch: exit FC width must be positive");
    if (!(dropout_rate >= 0.0f && dropout_rate < 1.0f))
        throw ConfigError("arch: dropout rate must lie in [0,1)");
    if (num_classes != 10) throw ConfigError("arch: class count is fixed at 10");
    if (input_channels <= 0 || input_length <= 0)
        throw ConfigError("arch: input extents must be positive");
}

int branch_block(Variant v) {
    switch (v) {
        case Variant::V0: return 1;
        case Variant::V1: return 2;
        case Variant::V2: return 4;
        case Variant::V3: return 5;
        default: throw ConfigError("branch_block: baseline has no branch point");
    }
}

ActShape layer_output_shape(const Layer& layer, const ActShape& in) {
    switch (layer.kind) {
        case LayerKind::Conv1D: {
            if (in.flat || in.c != layer.in_channels)
                throw ConfigError("layer '" + layer.name + "': channel mismatch");
            const int lo = conv1d_output_length(in.l, layer.kernel, layer.stride, layer.padding);
            if (lo < 1)
                throw ConfigError("layer '" + layer.name + "': output length shrinks below 1");
            return {false, layer.out_channels, lo, 0};
        }
        case LayerKind::MaxPool1D: {
            if (in.flat) throw ConfigError("layer '" + layer.name + "': pool needs a (C,L) map");
            if (in.l < layer.window)
                throw ConfigError("layer '" + layer.name + "': window exceeds input length");
            const int lo = maxpool1d_output_length(in.l, layer.window, layer.pool_stride);
            if (lo < 1)
                throw ConfigError("layer '" + layer.name + "': output length shrinks below 1");
            return {false, in.c, lo, 0};
        }
        case LayerKind::BatchNorm1D:
            if (in.flat || in.c != layer.channels)
                throw ConfigError("layer '" + layer.name + "': channel mismatch");
            return in;
        case LayerKind::Dense: {
            const std::int64_t width = in.elements();
            if (width != layer.in_dim)
                throw ConfigError("layer '" + layer.name + "': flattened width " +
                                  std::to_string(width) + " != " + std::to_string(layer.in_dim));
            return {true, 0, 0, layer.out_dim};
        }
        case LayerKind::ReLU:
        case LayerKind::Dropout:
        case LayerKind::Softmax:
            return in;
    }
    throw ConfigError("layer '" + layer.name + "': unknown kind");
}

std::int64_t layer_flops(const Layer& layer, const ActShape& in) {
    const ActShape out = layer_output_shape(layer, in);
    switch (layer.kind) {
        case LayerKind::Conv1D:
            return std::int64_t(layer.out_channels) * out.l * layer.in_channels * layer.kernel;
        case LayerKind::Dense:
            return std::int64_t(layer.in_dim) * layer.out_dim;
        default:
            return out.elements();
    }
}

namespace {

struct Builder {
    const ArchConfig& cfg;
    std::vector<Layer> layers;
    std::vector<std::size_t> block_end;  // layer count after each conv block
    ActShape shape;

    explicit Builder(const ArchConfig& c)
        : cfg(c), shape{false, c.input_channels, c.input_length, 0} {}

    void push(Layer l) {
        shape = layer_output_shape(l, shape);
        layers.push_back(std::move(l));
    }

    void conv_blocks() {
        int in_ch = cfg.input_channels;
        for (int b = 0; b < 6; ++b) {
            const std::string idx = std::to_string(b + 1);
            const int out_ch = cfg.conv_channels[std::size_t(b)];
            const int k = cfg.conv_kernels[std::size_t(b)];
            push(Layer::conv1d("conv" + idx, in_ch, out_ch, k, 1, (k - 1) / 2));
            push(Layer::relu("relu" + idx));
            if (cfg.pool_bn_after[std::size_t(b)]) {
                push(Layer::maxpool1d("pool" + idx, cfg.pool_window, cfg.pool_stride));
                push(Layer::batchnorm1d("bn" + idx, out_ch, cfg.bn_momentum, cfg.bn_epsilon));
            }
            block_end.push_back(layers.size());
            in_ch = out_ch;
        }
    }

    void classifier_tail() {
        push(Layer::maxpool1d("pool_final", cfg.pool_window, cfg.pool_stride));
        int width = int(shape.elements());
        push(Layer::dense("fc1", width, cfg.fc_widths[0]));
        push(Layer::dropout("drop1", cfg.dropout_rate));
        push(Layer::dense("fc2", cfg.fc_widths[0], cfg.fc_widths[1]));
        push(Layer::dropout("drop2", cfg.dropout_rate));
        push(Layer::dense("fc3", cfg.fc_widths[1], cfg.fc_widths[2]));
        push(Layer::softmax("softmax"));
    }
};

std::vector<Layer> build_exit_head(const ArchConfig& cfg, ActShape q_shape) {
    std::vector<Layer> head;
    auto push = [&](Layer l) {
        q_shape = layer_output_shape(l, q_shape);
        head.push_back(std::move(l));
    };
    push(Layer::maxpool1d("exit_pool", cfg.pool_window, cfg.pool_stride));
    push(Layer::dense("exit_fc1", int(q_shape.elements()), cfg.exit_fc_width));
    push(Layer::dropout("exit_drop", cfg.dropout_rate));
    push(Layer::dense("exit_fc2", cfg.exit_fc_width, cfg.num_classes));
    push(Layer::softmax("exit_softmax"));
    return head;
}

} // namespace

BranchGraph build_baseline(const ArchConfig& cfg) {
    cfg.validate();
    Builder b(cfg);
    b.conv_blocks();
    b.classifier_tail();
    BranchGraph g;
    g.variant = Variant::Baseline;
    g.tail = std::move(b.layers);
    return g;
}

BranchGraph build_ee_variant(Variant v, const ArchConfig& cfg) {
    if (v == Variant::Baseline) return build_baseline(cfg);
    cfg.validate();
    Builder b(cfg);
    b.conv_blocks();

    // Q shape at the branch point.
    const std::size_t split = b.block_end[std::size_t(branch_block(v) - 1)];
    ActShape q_shape{false, cfg.input_channels, cfg.input_length, 0};
    for (std::size_t i = 0; i < split; ++i)
        q_shape = layer_output_shape(b.layers[i], q_shape);

    b.classifier_tail();

    BranchGraph g;
    g.variant = v;
    g.common.assign(b.layers.begin(), b.layers.begin() + std::ptrdiff_t(split));
    g.tail.assign(b.layers.begin() + std::ptrdiff_t(split), b.layers.end());
    g.exit_head = build_exit_head(cfg, q_shape);
    return g;
}

} // namespace eeamc
