#include "eeamc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include <omp.h>

// Production kernels. Parallel loops are always over independent output
// elements (rows, channels, weight slices); every double-precision
// accumulation runs in a fixed order inside one thread, so results do not
// depend on the thread count.

namespace eeamc {

int conv1d_output_length(int l, int k, int stride, int pad) {
    return (l + 2 * pad - k) / stride + 1;
}

int maxpool1d_output_length(int l, int window, int stride) {
    return (l - window) / stride + 1;
}

namespace kernels {

int thread_count() {
    int n = omp_get_max_threads();
    if (const char* env = std::getenv("AMC_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min(n, cap);
    }
    return std::max(1, n);
}

namespace {

// Stride-1 row kernel: y_row[t] += w * x_row[t + off] over the valid range.
inline void axpy_shifted(double* acc, const float* x, double w, int off, int lo, int l) {
    const int t0 = std::max(0, -off);
    const int t1 = std::min(lo, l - off);
    const float* xs = x + off;
    for (int t = t0; t < t1; ++t) acc[t] += w * double(xs[t]);
}

// Generic strided gather for one output row.
inline void conv_row_generic(const float* x, const float* w, double bias, int ci, int l, int k,
                             int stride, int pad, double* acc, int lo) {
    for (int t = 0; t < lo; ++t) acc[t] = bias;
    for (int c = 0; c < ci; ++c) {
        const float* xc = x + std::size_t(c) * l;
        const float* wc = w + std::size_t(c) * k;
        for (int t = 0; t < lo; ++t) {
            double s = 0.0;
            const int base = t * stride - pad;
            for (int kk = 0; kk < k; ++kk) {
                const int idx = base + kk;
                if (idx >= 0 && idx < l) s += double(wc[kk]) * double(xc[idx]);
            }
            acc[t] += s;
        }
    }
}

// 8-chain unrolled dot product of g[t]*x[t] over [t0, t1).
inline double dot_unrolled(const float* g, const float* x, int t0, int t1) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0, a4 = 0, a5 = 0, a6 = 0, a7 = 0;
    int t = t0;
    for (; t + 7 < t1; t += 8) {
        a0 += double(g[t]) * double(x[t]);
        a1 += double(g[t + 1]) * double(x[t + 1]);
        a2 += double(g[t + 2]) * double(x[t + 2]);
        a3 += double(g[t + 3]) * double(x[t + 3]);
        a4 += double(g[t + 4]) * double(x[t + 4]);
        a5 += double(g[t + 5]) * double(x[t + 5]);
        a6 += double(g[t + 6]) * double(x[t + 6]);
        a7 += double(g[t + 7]) * double(x[t + 7]);
    }
    double a = ((a0 + a1) + (a2 + a3)) + ((a4 + a5) + (a6 + a7));
    for (; t < t1; ++t) a += double(g[t]) * double(x[t]);
    return a;
}

inline double sum_unrolled(const float* g, int count) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    int t = 0;
    for (; t + 3 < count; t += 4) {
        a0 += double(g[t]);
        a1 += double(g[t + 1]);
        a2 += double(g[t + 2]);
        a3 += double(g[t + 3]);
    }
    double a = (a0 + a1) + (a2 + a3);
    for (; t < count; ++t) a += double(g[t]);
    return a;
}

} // namespace

void conv1d_forward(const float* x, int n, int ci, int l, const float* w, const float* b,
                    int co, int k, int stride, int pad, float* y, int lo) {
    const int oblocks = (co + 3) / 4;
    const std::size_t jobs = std::size_t(n) * oblocks;
#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> acc(std::size_t(4) * lo);
#pragma omp for schedule(static)
        for (std::ptrdiff_t job = 0; job < std::ptrdiff_t(jobs); ++job) {
            const int in = int(job / oblocks);
            const int ob = int(job % oblocks);
            const int o0 = ob * 4;
            const int nb = std::min(4, co - o0);
            const float* xn = x + std::size_t(in) * ci * l;
            float* yn = y + std::size_t(in) * co * lo;
            if (stride == 1 && nb == 4) {
                double* a0 = acc.data();
                double* a1 = a0 + lo;
                double* a2 = a1 + lo;
                double* a3 = a2 + lo;
                for (int t = 0; t < lo; ++t) {
                    a0[t] = b[o0];
                    a1[t] = b[o0 + 1];
                    a2[t] = b[o0 + 2];
                    a3[t] = b[o0 + 3];
                }
                for (int c = 0; c < ci; ++c) {
                    const float* xc = xn + std::size_t(c) * l;
                    const std::size_t wbase = (std::size_t(o0) * ci + c) * k;
                    const std::size_t wstep = std::size_t(ci) * k;
                    for (int kk = 0; kk < k; ++kk) {
                        const int off = kk - pad;
                        const int t0 = std::max(0, -off);
                        const int t1 = std::min(lo, l - off);
                        const float* xs = xc + off;
                        const double w0 = w[wbase + std::size_t(kk)];
                        const double w1 = w[wbase + wstep + std::size_t(kk)];
                        const double w2 = w[wbase + 2 * wstep + std::size_t(kk)];
                        const double w3 = w[wbase + 3 * wstep + std::size_t(kk)];
                        // one x sweep feeds all four output channels
                        for (int t = t0; t < t1; ++t) {
                            const double xv = xs[t];
                            a0[t] += w0 * xv;
                            a1[t] += w1 * xv;
                            a2[t] += w2 * xv;
                            a3[t] += w3 * xv;
                        }
                    }
                }
                for (int j = 0; j < 4; ++j) {
                    float* yo = yn + std::size_t(o0 + j) * lo;
                    const double* a = acc.data() + std::size_t(j) * lo;
                    for (int t = 0; t < lo; ++t) yo[t] = float(a[t]);
                }
            } else if (stride == 1) {
                for (int j = 0; j < nb; ++j)
                    for (int t = 0; t < lo; ++t) acc[std::size_t(j) * lo + t] = b[o0 + j];
                for (int c = 0; c < ci; ++c) {
                    const float* xc = xn + std::size_t(c) * l;
                    for (int kk = 0; kk < k; ++kk) {
                        const int off = kk - pad;
                        for (int j = 0; j < nb; ++j) {
                            const double wv = w[(std::size_t(o0 + j) * ci + c) * k + kk];
                            axpy_shifted(acc.data() + std::size_t(j) * lo, xc, wv, off, lo, l);
                        }
                    }
                }
                for (int j = 0; j < nb; ++j) {
                    float* yo = yn + std::size_t(o0 + j) * lo;
                    const double* a = acc.data() + std::size_t(j) * lo;
                    for (int t = 0; t < lo; ++t) yo[t] = float(a[t]);
                }
            } else {
                for (int j = 0; j < nb; ++j) {
                    const int o = o0 + j;
                    conv_row_generic(xn, w + std::size_t(o) * ci * k, b[o], ci, l, k, stride,
                                     pad, acc.data(), lo);
                    float* yo = yn + std::size_t(o) * lo;
                    for (int t = 0; t < lo; ++t) yo[t] = float(acc[std::size_t(t)]);
                }
            }
        }
    }
}

void conv1d_backward_input(const float* gy, int n, int co, int lo, const float* w, int ci,
                           int k, int stride, int pad, float* gx, int l) {
    const int cblocks = (ci + 3) / 4;
    const std::size_t jobs = std::size_t(n) * cblocks;
#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> acc(std::size_t(4) * l);
#pragma omp for schedule(static)
        for (std::ptrdiff_t job = 0; job < std::ptrdiff_t(jobs); ++job) {
            const int in = int(job / cblocks);
            const int cb = int(job % cblocks);
            const int c0 = cb * 4;
            const int nb = std::min(4, ci - c0);
            const float* gn = gy + std::size_t(in) * co * lo;
            for (int i = 0; i < nb * l; ++i) acc[std::size_t(i)] = 0.0;
            if (stride == 1 && nb == 4) {
                double* a0 = acc.data();
                double* a1 = a0 + l;
                double* a2 = a1 + l;
                double* a3 = a2 + l;
                for (int o = 0; o < co; ++o) {
                    const float* go = gn + std::size_t(o) * lo;
                    const std::size_t wbase = (std::size_t(o) * ci + c0) * k;
                    for (int kk = 0; kk < k; ++kk) {
                        // gx[c][i] += w[o][c][kk] * gy[o][i + pad - kk]
                        const int off = pad - kk;
                        const int t0 = std::max(0, -off);
                        const int t1 = std::min(l, lo - off);
                        const float* gs = go + off;
                        const double w0 = w[wbase + std::size_t(kk)];
                        const double w1 = w[wbase + std::size_t(k) + std::size_t(kk)];
                        const double w2 = w[wbase + 2 * std::size_t(k) + std::size_t(kk)];
                        const double w3 = w[wbase + 3 * std::size_t(k) + std::size_t(kk)];
                        for (int i = t0; i < t1; ++i) {
                            const double gv = gs[i];
                            a0[i] += w0 * gv;
                            a1[i] += w1 * gv;
                            a2[i] += w2 * gv;
                            a3[i] += w3 * gv;
                        }
                    }
                }
            } else if (stride == 1) {
                for (int j = 0; j < nb; ++j)
                    for (int o = 0; o < co; ++o) {
                        const float* go = gn + std::size_t(o) * lo;
                        for (int kk = 0; kk < k; ++kk) {
                            const double wv = w[(std::size_t(o) * ci + c0 + j) * k + kk];
                            axpy_shifted(acc.data() + std::size_t(j) * l, go, wv, pad - kk, l, lo);
                        }
                    }
            } else {
                for (int j = 0; j < nb; ++j) {
                    double* a = acc.data() + std::size_t(j) * l;
                    for (int o = 0; o < co; ++o) {
                        const float* go = gn + std::size_t(o) * lo;
                        const float* wo = w + (std::size_t(o) * ci + c0 + j) * k;
                        for (int t = 0; t < lo; ++t) {
                            const int base = t * stride - pad;
                            const double g = go[t];
                            for (int kk = 0; kk < k; ++kk) {
                                const int idx = base + kk;
                                if (idx >= 0 && idx < l) a[idx] += double(wo[kk]) * g;
                            }
                        }
                    }
                }
            }
            for (int j = 0; j < nb; ++j) {
                float* gxr = gx + (std::size_t(in) * ci + c0 + j) * l;
                const double* a = acc.data() + std::size_t(j) * l;
                for (int i = 0; i < l; ++i) gxr[i] = float(a[i]);
            }
        }
    }
}

void conv1d_backward_params(const float* gy, int n, int co, int lo, const float* x, int ci,
                            int l, int k, int stride, int pad, float* gw, float* gb) {
    if (stride == 1 && k == 3) {
        // shared zero-padded input rows let all three taps run one fused
        // sweep per (o, c) with the gy loads shared
        const int lp = l + 2 * pad;
        std::vector<float> xpad(std::size_t(n) * ci * lp, 0.0f);
        const std::size_t rows = std::size_t(n) * ci;
#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (std::ptrdiff_t row = 0; row < std::ptrdiff_t(rows); ++row)
            std::copy(x + std::size_t(row) * l, x + std::size_t(row) * l + l,
                      xpad.begin() + std::size_t(row) * lp + pad);

#pragma omp parallel for schedule(static) num_threads(thread_count())
        for (int o = 0; o < co; ++o) {
            for (int c = 0; c < ci; ++c) {
                double acc[3][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}};
                for (int in = 0; in < n; ++in) {
                    const float* g = gy + (std::size_t(in) * co + o) * lo;
                    const float* xp = xpad.data() + (std::size_t(in) * ci + c) * lp;
                    int t = 0;
                    for (; t + 3 < lo; t += 4) {
                        for (int u = 0; u < 4; ++u) {
                            const double gv = g[t + u];
                            acc[0][u] += gv * double(xp[t + u]);
                            acc[1][u] += gv * double(xp[t + u + 1]);
                            acc[2][u] += gv * double(xp[t + u + 2]);
                        }
                    }
                    for (; t < lo; ++t) {
                        const double gv = g[t];
                        acc[0][0] += gv * double(xp[t]);
                        acc[1][0] += gv * double(xp[t + 1]);
                        acc[2][0] += gv * double(xp[t + 2]);
                    }
                }
                float* gwr = gw + (std::size_t(o) * ci + c) * 3;
                for (int kk = 0; kk < 3; ++kk)
                    gwr[kk] += float((acc[kk][0] + acc[kk][1]) + (acc[kk][2] + acc[kk][3]));
            }
            double bsum = 0.0;
            for (int in = 0; in < n; ++in)
                bsum += sum_unrolled(gy + (std::size_t(in) * co + o) * lo, lo);
            gb[o] += float(bsum);
        }
        return;
    }
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (int o = 0; o < co; ++o) {
        for (int c = 0; c < ci; ++c) {
            for (int kk = 0; kk < k; ++kk) {
                const int off = kk - pad;
                double a = 0.0;
                if (stride == 1) {
                    const int t0 = std::max(0, -off);
                    const int t1 = std::min(lo, l - off);
                    for (int in = 0; in < n; ++in) {
                        const float* g = gy + (std::size_t(in) * co + o) * lo;
                        const float* xc = x + (std::size_t(in) * ci + c) * l + off;
                        a += dot_unrolled(g, xc, t0, t1);
                    }
                } else {
                    for (int in = 0; in < n; ++in) {
                        const float* g = gy + (std::size_t(in) * co + o) * lo;
                        const float* xc = x + (std::size_t(in) * ci + c) * l;
                        for (int t = 0; t < lo; ++t) {
                            const int idx = t * stride + off;
                            if (idx >= 0 && idx < l) a += double(g[t]) * double(xc[idx]);
                        }
                    }
                }
                gw[(std::size_t(o) * ci + c) * k + kk] += float(a);
            }
        }
        double bsum = 0.0;
        for (int in = 0; in < n; ++in)
            bsum += sum_unrolled(gy + (std::size_t(in) * co + o) * lo, lo);
        gb[o] += float(bsum);
    }
}

void dense_forward(const float* x, int n, int din, const float* w, const float* b, int dout,
                   float* y) {
    const std::size_t jobs = std::size_t(n) * dout;
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t job = 0; job < std::ptrdiff_t(jobs); ++job) {
        const int in = int(job / dout);
        const int j = int(job % dout);
        const float* xr = x + std::size_t(in) * din;
        const float* wr = w + std::size_t(j) * din;
        y[std::size_t(in) * dout + j] = float(double(b[j]) + dot_unrolled(wr, xr, 0, din));
    }
}

void dense_backward_input(const float* gy, int n, int dout, const float* w, int din, float* gx) {
#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> acc(static_cast<std::size_t>(din));
#pragma omp for schedule(static)
        for (int in = 0; in < n; ++in) {
            const float* gr = gy + std::size_t(in) * dout;
            for (int i = 0; i < din; ++i) acc[std::size_t(i)] = 0.0;
            for (int j = 0; j < dout; ++j) {
                const double g = gr[j];
                const float* wr = w + std::size_t(j) * din;
                for (int i = 0; i < din; ++i) acc[std::size_t(i)] += g * double(wr[i]);
            }
            float* gxr = gx + std::size_t(in) * din;
            for (int i = 0; i < din; ++i) gxr[i] = float(acc[std::size_t(i)]);
        }
    }
}

void dense_backward_params(const float* gy, int n, int dout, const float* x, int din, float* gw,
                           float* gb) {
#pragma omp parallel num_threads(thread_count())
    {
        std::vector<double> acc(static_cast<std::size_t>(din));
#pragma omp for schedule(static)
        for (int j = 0; j < dout; ++j) {
            for (int i = 0; i < din; ++i) acc[std::size_t(i)] = 0.0;
            double bsum = 0.0;
            for (int in = 0; in < n; ++in) {
                const double g = gy[std::size_t(in) * dout + j];
                const float* xr = x + std::size_t(in) * din;
                for (int i = 0; i < din; ++i) acc[std::size_t(i)] += g * double(xr[i]);
                bsum += g;
            }
            float* gwr = gw + std::size_t(j) * din;
            for (int i = 0; i < din; ++i) gwr[i] += float(acc[std::size_t(i)]);
            gb[j] += float(bsum);
        }
    }
}

void relu_forward(const float* x, std::size_t count, float* y) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(count); ++i)
        y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* gy, std::size_t count, float* gx) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t i = 0; i < std::ptrdiff_t(count); ++i)
        gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
}

void maxpool1d_forward(const float* x, int n, int c, int l, int window, int stride, float* y,
                       int lo, int* argmax) {
    const std::size_t rows = std::size_t(n) * c;
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t row = 0; row < std::ptrdiff_t(rows); ++row) {
        const float* xr = x + std::size_t(row) * l;
        float* yr = y + std::size_t(row) * lo;
        int* ar = argmax + std::size_t(row) * lo;
        for (int t = 0; t < lo; ++t) {
            const int base = t * stride;
            int best = base;
            float bv = xr[base];
            for (int ww = 1; ww < window; ++ww) {
                // strict > keeps the lowest index on ties
                if (xr[base + ww] > bv) {
                    bv = xr[base + ww];
                    best = base + ww;
                }
            }
            yr[t] = bv;
            ar[t] = best;
        }
    }
}

void maxpool1d_backward(const float* gy, int n, int c, int lo, const int* argmax, float* gx,
                        int l) {
    const std::size_t rows = std::size_t(n) * c;
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t row = 0; row < std::ptrdiff_t(rows); ++row) {
        const float* gr = gy + std::size_t(row) * lo;
        const int* ar = argmax + std::size_t(row) * lo;
        float* gxr = gx + std::size_t(row) * l;
        for (int i = 0; i < l; ++i) gxr[i] = 0.0f;
        for (int t = 0; t < lo; ++t) gxr[ar[t]] += gr[t];
    }
}

void batchnorm_stats(const float* x, int n, int c, int l, double* mean, double* var) {
    const double m = double(n) * l;
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (int ch = 0; ch < c; ++ch) {
        double s = 0.0, s2 = 0.0;
        for (int in = 0; in < n; ++in) {
            const float* xr = x + (std::size_t(in) * c + ch) * l;
            for (int t = 0; t < l; ++t) {
                const double v = xr[t];
                s += v;
                s2 += v * v;
            }
        }
        const double mu = s / m;
        mean[ch] = mu;
        double v = s2 / m - mu * mu;
        var[ch] = v > 0.0 ? v : 0.0;
    }
}

void batchnorm_apply(const float* x, int n, int c, int l, const double* mean,
                     const double* inv_std, const float* gamma, const float* beta, float* y) {
    const std::size_t rows = std::size_t(n) * c;
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (std::ptrdiff_t row = 0; row < std::ptrdiff_t(rows); ++row) {
        const int ch = int(row % c);
        const float* xr = x + std::size_t(row) * l;
        float* yr = y + std::size_t(row) * l;
        const double mu = mean[ch];
        const double is = inv_std[ch];
        const double g = gamma[ch];
        const double bt = beta[ch];
        for (int t = 0; t < l; ++t) yr[t] = float((double(xr[t]) - mu) * is * g + bt);
    }
}

void batchnorm_backward(const float* x, const float* gy, int n, int c, int l,
                        const double* mean, const double* inv_std, const float* gamma,
                        float* gx, float* ggamma, float* gbeta) {
    const double m = double(n) * l;
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (int ch = 0; ch < c; ++ch) {
        const double mu = mean[ch];
        const double is = inv_std[ch];
        double sum_g = 0.0, sum_gx = 0.0;
        for (int in = 0; in < n; ++in) {
            const std::size_t base = (std::size_t(in) * c + ch) * l;
            for (int t = 0; t < l; ++t) {
                const double g = gy[base + t];
                sum_g += g;
                sum_gx += g * (double(x[base + t]) - mu) * is;
            }
        }
        const double gscale = double(gamma[ch]) * is;
        const double mean_g = sum_g / m;
        const double mean_gx = sum_gx / m;
        for (int in = 0; in < n; ++in) {
            const std::size_t base = (std::size_t(in) * c + ch) * l;
            for (int t = 0; t < l; ++t) {
                const double xhat = (double(x[base + t]) - mu) * is;
                gx[base + t] = float(gscale * (double(gy[base + t]) - mean_g - xhat * mean_gx));
            }
        }
        ggamma[ch] += float(sum_gx);
        gbeta[ch] += float(sum_g);
    }
}

void softmax_forward(const float* logits, int n, int classes, float* probs) {
#pragma omp parallel for schedule(static) num_threads(thread_count())
    for (int in = 0; in < n; ++in) {
        const float* z = logits + std::size_t(in) * classes;
        float* p = probs + std::size_t(in) * classes;
        double mx = z[0];
        for (int j = 1; j < classes; ++j) mx = std::max(mx, double(z[j]));
        double sum = 0.0;
        for (int j = 0; j < classes; ++j) {
            const double e = std::exp(double(z[j]) - mx);
            p[j] = float(e);
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (int j = 0; j < classes; ++j) p[j] = float(double(p[j]) * inv);
    }
}

} // namespace kernels
} // namespace eeamc
