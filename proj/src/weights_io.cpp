#include "eeamc/weights_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "eeamc/error.hpp"

namespace eeamc {

namespace {

constexpr char kMagic[4] = {'E', 'E', 'W', 'T'};
constexpr std::uint32_t kVersion = 1;

struct Writer {
    std::ofstream out;
    std::uint64_t offset = 0;

    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw IoError("cannot open '" + path + "' for writing");
    }
    void bytes(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), std::streamsize(n));
        offset += n;
    }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void u32(std::uint32_t v) { bytes(&v, 4); }
    void f32(float v) { bytes(&v, 4); }
    void floats(const float* p, std::size_t n) { bytes(p, n * 4); }
};

struct Reader {
    std::ifstream in;
    std::uint64_t offset = 0;

    explicit Reader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw IoError("cannot open '" + path + "' for reading");
    }
    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), std::streamsize(n));
        if (std::size_t(in.gcount()) != n)
            throw FormatError("weight file truncated", offset);
        offset += n;
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, 4);
        return v;
    }
    float f32() {
        float v;
        bytes(&v, 4);
        return v;
    }
    void floats(float* p, std::size_t n) { bytes(p, n * 4); }
};

void write_layer(Writer& w, const Layer& l) {
    w.u8(std::uint8_t(l.kind));
    switch (l.kind) {
        case LayerKind::Conv1D:
            w.u32(std::uint32_t(l.in_channels));
            w.u32(std::uint32_t(l.out_channels));
            w.u32(std::uint32_t(l.kernel));
            w.u32(std::uint32_t(l.stride));
            w.u32(std::uint32_t(l.padding));
            w.floats(l.weight.data(), l.weight.size());
            w.floats(l.bias.data(), l.bias.size());
            break;
        case LayerKind::MaxPool1D:
            w.u32(std::uint32_t(l.window));
            w.u32(std::uint32_t(l.pool_stride));
            break;
        case LayerKind::BatchNorm1D:
            w.u32(std::uint32_t(l.channels));
            w.f32(l.momentum);
            w.f32(l.epsilon);
            w.floats(l.gamma.data(), l.gamma.size());
            w.floats(l.beta.data(), l.beta.size());
            w.floats(l.running_mean.data(), l.running_mean.size());
            w.floats(l.running_var.data(), l.running_var.size());
            break;
        case LayerKind::Dense:
            w.u32(std::uint32_t(l.in_dim));
            w.u32(std::uint32_t(l.out_dim));
            w.floats(l.weight.data(), l.weight.size());
            w.floats(l.bias.data(), l.bias.size());
            break;
        case LayerKind::Dropout:
            w.f32(l.rate);
            break;
        case LayerKind::ReLU:
        case LayerKind::Softmax:
            break;
    }
}

Layer read_layer(Reader& r, int& conv_n, int& relu_n, int& pool_n, int& bn_n, int& fc_n,
                 int& drop_n, int& sm_n) {
    const std::uint64_t kind_offset = r.offset;
    const std::uint8_t kind = r.u8();
    switch (LayerKind(kind)) {
        case LayerKind::Conv1D: {
            const int in = int(r.u32()), out = int(r.u32()), k = int(r.u32());
            const int stride = int(r.u32()), pad = int(r.u32());
            Layer l = Layer::conv1d("conv" + std::to_string(++conv_n), in, out, k, stride, pad);
            r.floats(l.weight.data(), l.weight.size());
            r.floats(l.bias.data(), l.bias.size());
            return l;
        }
        case LayerKind::ReLU:
            return Layer::relu("relu" + std::to_string(++relu_n));
        case LayerKind::MaxPool1D: {
            const int window = int(r.u32()), stride = int(r.u32());
            return Layer::maxpool1d("pool" + std::to_string(++pool_n), window, stride);
        }
        case LayerKind::BatchNorm1D: {
            const int c = int(r.u32());
            const float momentum = r.f32();
            const float epsilon = r.f32();
            Layer l = Layer::batchnorm1d("bn" + std::to_string(++bn_n), c, momentum, epsilon);
            r.floats(l.gamma.data(), l.gamma.size());
            r.floats(l.beta.data(), l.beta.size());
            r.floats(l.running_mean.data(), l.running_mean.size());
            r.floats(l.running_var.data(), l.running_var.size());
            return l;
        }
        case LayerKind::Dense: {
            const int in = int(r.u32()), out = int(r.u32());
            Layer l = Layer::dense("fc" + std::to_string(++fc_n), in, out);
            r.floats(l.weight.data(), l.weight.size());
            r.floats(l.bias.data(), l.bias.size());
            return l;
        }
        case LayerKind::Dropout: {
            const float rate = r.f32();
            return Layer::dropout("drop" + std::to_string(++drop_n), rate);
        }
        case LayerKind::Softmax:
            return Layer::softmax("softmax" + std::to_string(++sm_n));
    }
    throw FormatError("unknown layer kind tag " + std::to_string(kind), kind_offset);
}

} // namespace

void save_weights(const BranchGraph& g, const std::string& path) {
    Writer w(path);
    w.bytes(kMagic, 4);
    w.u32(kVersion);
    w.u8(std::uint8_t(g.variant));
    const std::size_t count = g.common.size() + g.exit_head.size() + g.tail.size();
    w.u32(std::uint32_t(count));
    for (const auto& l : g.common) write_layer(w, l);
    for (const auto& l : g.exit_head) write_layer(w, l);
    for (const auto& l : g.tail) write_layer(w, l);
    w.out.flush();
    if (!w.out) throw IoError("write failed for '" + path + "'");
}

BranchGraph load_weights(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.bytes(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("bad magic (expected EEWT)", 0);
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw FormatError("unsupported version " + std::to_string(version), 4);
    const std::uint8_t vtag = r.u8();
    if (vtag > std::uint8_t(Variant::V3)) throw FormatError("bad variant tag", 8);
    const std::uint32_t count = r.u32();

    int conv_n = 0, relu_n = 0, pool_n = 0, bn_n = 0, fc_n = 0, drop_n = 0, sm_n = 0;
    std::vector<Layer> stream;
    stream.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i)
        stream.push_back(read_layer(r, conv_n, relu_n, pool_n, bn_n, fc_n, drop_n, sm_n));

    BranchGraph g;
    g.variant = Variant(vtag);
    if (g.variant == Variant::Baseline) {
        g.tail = std::move(stream);
        return g;
    }

    // The exit head is the five layers ending at the first Softmax.
    std::size_t first_softmax = stream.size();
    for (std::size_t i = 0; i < stream.size(); ++i)
        if (stream[i].kind == LayerKind::Softmax) {
            first_softmax = i;
            break;
        }
    if (first_softmax < 4 || first_softmax == stream.size())
        throw FormatError("cannot locate exit head in layer stream", r.offset);
    const std::size_t head_begin = first_softmax - 4;
    for (std::size_t i = head_begin; i <= first_softmax; ++i)
        stream[i].name = "exit_" + stream[i].name;

    g.common.assign(stream.begin(), stream.begin() + std::ptrdiff_t(head_begin));
    g.exit_head.assign(stream.begin() + std::ptrdiff_t(head_begin),
                       stream.begin() + std::ptrdiff_t(first_softmax + 1));
    g.tail.assign(stream.begin() + std::ptrdiff_t(first_softmax + 1), stream.end());
    if (g.tail.empty() || g.tail.back().kind != LayerKind::Softmax)
        throw FormatError("tail does not end in softmax", r.offset);
    return g;
}

} // namespace eeamc
