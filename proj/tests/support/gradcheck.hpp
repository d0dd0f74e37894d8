#pragma once

// Finite-difference gradient verification for every layer kind. The oracle
// side is an independent double-precision re-implementation of each forward
// map (naive loops, double storage end to end); the scalar objective is
// J(params) = <G, f(params, x)> for a fixed random G, whose analytic
// gradient is exactly what Layer::backward(G) produces.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "eeamc/kernels.hpp"
#include "eeamc/layers.hpp"
#include "eeamc/rng.hpp"
#include "eeamc/tensor.hpp"

namespace gradcheck {

using eeamc::Layer;
using eeamc::Mode;
using eeamc::Rng;
using eeamc::Tensor;

// ---- double-precision naive forwards (the oracle side) ----

inline std::vector<double> conv1d_d(const std::vector<double>& x, int n, int ci, int l,
                                    const std::vector<double>& w, const std::vector<double>& b,
                                    int co, int k, int stride, int pad, int lo) {
    std::vector<double> y(std::size_t(n) * co * lo);
    for (int in = 0; in < n; ++in)
        for (int o = 0; o < co; ++o)
            for (int t = 0; t < lo; ++t) {
                double acc = b[std::size_t(o)];
                for (int c = 0; c < ci; ++c)
                    for (int kk = 0; kk < k; ++kk) {
                        const int idx = t * stride + kk - pad;
                        if (idx >= 0 && idx < l)
                            acc += w[(std::size_t(o) * ci + c) * k + kk] *
                                   x[(std::size_t(in) * ci + c) * l + idx];
                    }
                y[(std::size_t(in) * co + o) * lo + t] = acc;
            }
    return y;
}

inline std::vector<double> dense_d(const std::vector<double>& x, int n, int din,
                                   const std::vector<double>& w, const std::vector<double>& b,
                                   int dout) {
    std::vector<double> y(std::size_t(n) * dout);
    for (int in = 0; in < n; ++in)
        for (int j = 0; j < dout; ++j) {
            double acc = b[std::size_t(j)];
            for (int i = 0; i < din; ++i)
                acc += w[std::size_t(j) * din + i] * x[std::size_t(in) * din + i];
            y[std::size_t(in) * dout + j] = acc;
        }
    return y;
}

inline std::vector<double> relu_d(const std::vector<double>& x) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    return y;
}

inline std::vector<double> maxpool_d(const std::vector<double>& x, int n, int c, int l,
                                     int window, int stride, int lo) {
    std::vector<double> y(std::size_t(n) * c * lo);
    for (std::size_t row = 0; row < std::size_t(n) * c; ++row)
        for (int t = 0; t < lo; ++t) {
            double best = x[row * l + std::size_t(t * stride)];
            for (int ww = 1; ww < window; ++ww)
                best = std::max(best, x[row * l + std::size_t(t * stride + ww)]);
            y[row * lo + std::size_t(t)] = best;
        }
    return y;
}

inline std::vector<double> batchnorm_train_d(const std::vector<double>& x, int n, int c, int l,
                                             const std::vector<double>& gamma,
                                             const std::vector<double>& beta, double eps) {
    const double m = double(n) * l;
    std::vector<double> y(x.size());
    for (int ch = 0; ch < c; ++ch) {
        double mu = 0.0;
        for (int in = 0; in < n; ++in)
            for (int t = 0; t < l; ++t) mu += x[(std::size_t(in) * c + ch) * l + t];
        mu /= m;
        double var = 0.0;
        for (int in = 0; in < n; ++in)
            for (int t = 0; t < l; ++t) {
                const double d = x[(std::size_t(in) * c + ch) * l + t] - mu;
                var += d * d;
            }
        var /= m;
        const double inv = 1.0 / std::sqrt(var + eps);
        for (int in = 0; in < n; ++in)
            for (int t = 0; t < l; ++t) {
                const std::size_t i = (std::size_t(in) * c + ch) * l + t;
                y[i] = gamma[std::size_t(ch)] * (x[i] - mu) * inv + beta[std::size_t(ch)];
            }
    }
    return y;
}

inline std::vector<double> softmax_d(const std::vector<double>& z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double sum = 0.0;
    std::vector<double> p(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

// ---- finite differences ----

struct CheckResult {
    bool ok = true;
    double max_rel_err = 0.0;
    std::string worst;

    void fold(const CheckResult& o) {
        if (o.max_rel_err > max_rel_err) {
            max_rel_err = o.max_rel_err;
            worst = o.worst;
        }
        ok = ok && o.ok;
    }
};

// Central difference of eval() along each coordinate of data[0..n), compared
// against the analytic gradient. Relative error uses a floored denominator
// so near-zero gradient pairs do not blow up the ratio.
inline CheckResult check_against_fd(const std::function<double()>& eval, double* data,
                                    const float* analytic, std::size_t n, const std::string& tag,
                                    double h = 1e-3, double tol = 1e-3, double floor = 1e-4) {
    CheckResult res;
    for (std::size_t i = 0; i < n; ++i) {
        const double keep = data[i];
        data[i] = keep + h;
        const double jp = eval();
        data[i] = keep - h;
        const double jm = eval();
        data[i] = keep;
        const double fd = (jp - jm) / (2.0 * h);
        const double an = analytic[i];
        const double rel = std::abs(an - fd) / std::max(std::max(std::abs(an), std::abs(fd)), floor);
        if (rel > res.max_rel_err) {
            res.max_rel_err = rel;
            res.worst = tag + "[" + std::to_string(i) + "] analytic=" + std::to_string(an) +
                        " fd=" + std::to_string(fd);
        }
        if (rel > tol) res.ok = false;
    }
    return res;
}

inline std::vector<double> random_dvec(std::size_t n, Rng& rng, double lo = -1.0,
                                       double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline Tensor to_f32(const std::vector<double>& v, std::initializer_list<int> shape) {
    Tensor t(shape);
    for (std::size_t i = 0; i < v.size(); ++i) t[i] = float(v[i]);
    return t;
}

inline double dot_with(const std::vector<double>& y, const Tensor& g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += y[i] * double(g[i]);
    return acc;
}

// ---- per-kind single-instance checks ----

inline CheckResult check_conv1d(Rng& rng) {
    const int n = 1 + int(rng.uniform_index(2));
    const int ci = 1 + int(rng.uniform_index(3));
    const int co = 1 + int(rng.uniform_index(3));
    const int k = 1 + int(rng.uniform_index(3));
    const int pad = int(rng.uniform_index(std::uint64_t(k)));
    const int l = k + 2 + int(rng.uniform_index(6));
    const int lo = eeamc::conv1d_output_length(l, k, 1, pad);

    auto xd = random_dvec(std::size_t(n) * ci * l, rng);
    auto wd = random_dvec(std::size_t(co) * ci * k, rng);
    auto bd = random_dvec(std::size_t(co), rng);
    Tensor g = to_f32(random_dvec(std::size_t(n) * co * lo, rng), {n, co, lo});

    Layer layer = Layer::conv1d("c", ci, co, k, 1, pad);
    for (std::size_t i = 0; i < wd.size(); ++i) layer.weight[i] = float(wd[i]);
    for (std::size_t i = 0; i < bd.size(); ++i) layer.bias[i] = float(bd[i]);
    const Tensor x = to_f32(xd, {n, ci, l});
    layer.forward(x, Mode::Train);
    const Tensor gx = layer.backward(g);

    auto eval = [&] { return dot_with(conv1d_d(xd, n, ci, l, wd, bd, co, k, 1, pad, lo), g); };
    CheckResult res;
    res.fold(check_against_fd(eval, wd.data(), layer.grad_weight.data(), wd.size(), "conv.w"));
    res.fold(check_against_fd(eval, bd.data(), layer.grad_bias.data(), bd.size(), "conv.b"));
    res.fold(check_against_fd(eval, xd.data(), gx.data(), xd.size(), "conv.x"));
    return res;
}

inline CheckResult check_dense(Rng& rng) {
    const int n = 1 + int(rng.uniform_index(3));
    const int din = 1 + int(rng.uniform_index(8));
    const int dout = 1 + int(rng.uniform_index(8));
    auto xd = random_dvec(std::size_t(n) * din, rng);
    auto wd = random_dvec(std::size_t(dout) * din, rng);
    auto bd = random_dvec(std::size_t(dout), rng);
    Tensor g = to_f32(random_dvec(std::size_t(n) * dout, rng), {n, dout});

    Layer layer = Layer::dense("d", din, dout);
    for (std::size_t i = 0; i < wd.size(); ++i) layer.weight[i] = float(wd[i]);
    for (std::size_t i = 0; i < bd.size(); ++i) layer.bias[i] = float(bd[i]);
    const Tensor x = to_f32(xd, {n, din});
    layer.forward(x, Mode::Train);
    const Tensor gx = layer.backward(g);

    auto eval = [&] { return dot_with(dense_d(xd, n, din, wd, bd, dout), g); };
    CheckResult res;
    res.fold(check_against_fd(eval, wd.data(), layer.grad_weight.data(), wd.size(), "dense.w"));
    res.fold(check_against_fd(eval, bd.data(), layer.grad_bias.data(), bd.size(), "dense.b"));
    res.fold(check_against_fd(eval, xd.data(), gx.data(), xd.size(), "dense.x"));
    return res;
}

inline CheckResult check_relu(Rng& rng) {
    const int n = 4 + int(rng.uniform_index(12));
    // keep every coordinate away from the kink
    std::vector<double> xd(static_cast<std::size_t>(n));
    for (auto& v : xd) {
        do {
            v = rng.uniform(-1.0, 1.0);
        } while (std::abs(v) < 5e-3);
    }
    Tensor g = to_f32(random_dvec(std::size_t(n), rng), {1, n});
    Layer layer = Layer::relu("r");
    const Tensor x = to_f32(xd, {1, n});
    layer.forward(x, Mode::Train);
    const Tensor gx = layer.backward(g);
    auto eval = [&] { return dot_with(relu_d(xd), g); };
    return check_against_fd(eval, xd.data(), gx.data(), xd.size(), "relu.x");
}

inline CheckResult check_maxpool(Rng& rng) {
    const int c = 1 + int(rng.uniform_index(3));
    const int window = 2 + int(rng.uniform_index(2));
    const int stride = 1 + int(rng.uniform_index(2));
    const int l = window + stride * (2 + int(rng.uniform_index(4)));
    const int lo = eeamc::maxpool1d_output_length(l, window, stride);
    // distinct values keep the max locally smooth for the FD probe
    std::vector<double> xd;
    bool distinct = false;
    while (!distinct) {
        xd = random_dvec(std::size_t(c) * l, rng);
        distinct = true;
        for (std::size_t a = 0; a < xd.size() && distinct; ++a)
            for (std::size_t b = a + 1; b < xd.size(); ++b)
                if (std::abs(xd[a] - xd[b]) < 5e-3) {
                    distinct = false;
                    break;
                }
    }
    Tensor g = to_f32(random_dvec(std::size_t(c) * lo, rng), {1, c, lo});
    Layer layer = Layer::maxpool1d("p", window, stride);
    const Tensor x = to_f32(xd, {1, c, l});
    layer.forward(x, Mode::Train);
    const Tensor gx = layer.backward(g);
    auto eval = [&] { return dot_with(maxpool_d(xd, 1, c, l, window, stride, lo), g); };
    return check_against_fd(eval, xd.data(), gx.data(), xd.size(), "maxpool.x");
}

inline CheckResult check_batchnorm(Rng& rng) {
    const int n = 2 + int(rng.uniform_index(3));
    const int c = 1 + int(rng.uniform_index(3));
    const int l = 2 + int(rng.uniform_index(4));
    auto xd = random_dvec(std::size_t(n) * c * l, rng);
    auto gd = random_dvec(std::size_t(c), rng, 0.5, 1.5);
    auto bd = random_dvec(std::size_t(c), rng);
    const double eps = 1e-5;
    Tensor g = to_f32(random_dvec(std::size_t(n) * c * l, rng), {n, c, l});

    Layer layer = Layer::batchnorm1d("bn", c, 0.1f, float(eps));
    for (std::size_t i = 0; i < gd.size(); ++i) layer.gamma[i] = float(gd[i]);
    for (std::size_t i = 0; i < bd.size(); ++i) layer.beta[i] = float(bd[i]);
    const Tensor x = to_f32(xd, {n, c, l});
    layer.forward(x, Mode::Train);
    const Tensor gx = layer.backward(g);

    auto eval = [&] { return dot_with(batchnorm_train_d(xd, n, c, l, gd, bd, eps), g); };
    CheckResult res;
    res.fold(check_against_fd(eval, gd.data(), layer.grad_gamma.data(), gd.size(), "bn.gamma"));
    res.fold(check_against_fd(eval, bd.data(), layer.grad_beta.data(), bd.size(), "bn.beta"));
    res.fold(check_against_fd(eval, xd.data(), gx.data(), xd.size(), "bn.x"));
    return res;
}

inline CheckResult check_dropout(Rng& rng) {
    // The mask is frozen after one forward; with the mask fixed the map is
    // linear, so FD on the input is exact.
    const int n = 8 + int(rng.uniform_index(8));
    auto xd = random_dvec(std::size_t(n), rng);
    for (auto& v : xd)
        if (std::abs(v) < 1e-3) v = 0.1;  // keep mask recoverable as y/x
    Tensor g = to_f32(random_dvec(std::size_t(n), rng), {1, n});

    Layer layer = Layer::dropout("do", 0.3f);
    Rng drop_rng(rng.next_u64());
    const Tensor x = to_f32(xd, {1, n});
    const Tensor y = layer.forward(x, Mode::Train, &drop_rng);
    const Tensor gx = layer.backward(g);

    std::vector<double> mask(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) mask[std::size_t(i)] = double(y[std::size_t(i)]) / xd[std::size_t(i)];

    auto eval = [&] {
        double acc = 0.0;
        for (int i = 0; i < n; ++i) acc += xd[std::size_t(i)] * mask[std::size_t(i)] * double(g[std::size_t(i)]);
        return acc;
    };
    return check_against_fd(eval, xd.data(), gx.data(), xd.size(), "dropout.x");
}

inline CheckResult check_softmax(Rng& rng) {
    const int c = 3 + int(rng.uniform_index(8));
    auto zd = random_dvec(std::size_t(c), rng, -2.0, 2.0);
    Tensor g = to_f32(random_dvec(std::size_t(c), rng), {1, c});
    Layer layer = Layer::softmax("sm");
    const Tensor z = to_f32(zd, {1, c});
    layer.forward(z, Mode::Eval);
    const Tensor gx = layer.backward(g);
    auto eval = [&] { return dot_with(softmax_d(zd), g); };
    return check_against_fd(eval, zd.data(), gx.data(), zd.size(), "softmax.z");
}

inline CheckResult check_cross_entropy(Rng& rng) {
    const int c = 10;
    auto zd = random_dvec(std::size_t(c), rng, -2.0, 2.0);
    const int label = int(rng.uniform_index(c));

    Layer sm = Layer::softmax("sm");
    const Tensor probs = sm.forward(to_f32(zd, {1, c}), Mode::Eval);
    Tensor flat({c});
    for (int i = 0; i < c; ++i) flat[std::size_t(i)] = probs[std::size_t(i)];
    const auto [loss, grad] = eeamc::cross_entropy(flat, label);
    (void)loss;

    auto eval = [&] {
        const auto p = softmax_d(zd);
        return -std::log(std::max(p[std::size_t(label)], 1e-12));
    };
    return check_against_fd(eval, zd.data(), grad.data(), zd.size(), "ce.z");
}

// Runs `instances` random cases of every layer kind. Prints one line per
// kind when verbose.
inline CheckResult run_gradient_suite(int instances, std::uint64_t seed, bool verbose) {
    struct Kind {
        const char* tag;
        CheckResult (*fn)(Rng&);
    };
    const Kind kinds[] = {
        {"Conv1D", check_conv1d},   {"Dense", check_dense},       {"ReLU", check_relu},
        {"MaxPool1D", check_maxpool}, {"BatchNorm1D", check_batchnorm},
        {"Dropout", check_dropout}, {"Softmax", check_softmax},   {"CrossEntropy", check_cross_entropy},
    };
    CheckResult total;
    Rng rng(seed);
    for (const auto& kind : kinds) {
        CheckResult per_kind;
        for (int i = 0; i < instances; ++i) per_kind.fold(kind.fn(rng));
        if (verbose)
            std::printf("  %-13s %2d instances  max rel err %.3e  %s\n", kind.tag, instances,
                        per_kind.max_rel_err, per_kind.ok ? "ok" : "FAIL");
        total.fold(per_kind);
    }
    return total;
}

} // namespace gradcheck
