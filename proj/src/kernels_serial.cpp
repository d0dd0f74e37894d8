#include "eeamc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

// Serial reference kernels. Plain loops transcribed from the layer
// definitions, double precision end to end. No blocking, no unrolling, no
// threads. Tests compare the production kernels against these; the kernel
// benchmark reports the speed difference.

namespace eeamc {
namespace refkern {

void conv1d_forward(const float* x, int n, int ci, int l, const float* w, const float* b,
                    int co, int k, int stride, int pad, float* y, int lo) {
    for (int in = 0; in < n; ++in)
        for (int o = 0; o < co; ++o)
            for (int t = 0; t < lo; ++t) {
                double acc = b[o];
                for (int c = 0; c < ci; ++c)
                    for (int kk = 0; kk < k; ++kk) {
                        const int idx = t * stride + kk - pad;
                        if (idx >= 0 && idx < l)
                            acc += double(w[(std::size_t(o) * ci + c) * k + kk]) *
                                   double(x[(std::size_t(in) * ci + c) * l + idx]);
                    }
                y[(std::size_t(in) * co + o) * lo + t] = float(acc);
            }
}

void conv1d_backward_input(const float* gy, int n, int co, int lo, const float* w, int ci,
                           int k, int stride, int pad, float* gx, int l) {
    for (int in = 0; in < n; ++in)
        for (int c = 0; c < ci; ++c)
            for (int i = 0; i < l; ++i) {
                double acc = 0.0;
                for (int o = 0; o < co; ++o)
                    for (int kk = 0; kk < k; ++kk) {
                        // i = t*stride + kk - pad  =>  t = (i - kk + pad) / stride
                        const int num = i - kk + pad;
                        if (num < 0 || num % stride != 0) continue;
                        const int t = num / stride;
                        if (t >= lo) continue;
                        acc += double(w[(std::size_t(o) * ci + c) * k + kk]) *
                               double(gy[(std::size_t(in) * co + o) * lo + t]);
                    }
                gx[(std::size_t(in) * ci + c) * l + i] = float(acc);
            }
}

void conv1d_backward_params(const float* gy, int n, int co, int lo, const float* x, int ci,
                            int l, int k, int stride, int pad, float* gw, float* gb) {
    for (int o = 0; o < co; ++o) {
        for (int c = 0; c < ci; ++c)
            for (int kk = 0; kk < k; ++kk) {
                double acc = 0.0;
                for (int in = 0; in < n; ++in)
                    for (int t = 0; t < lo; ++t) {
                        const int idx = t * stride + kk - pad;
                        if (idx >= 0 && idx < l)
                            acc += double(gy[(std::size_t(in) * co + o) * lo + t]) *
                                   double(x[(std::size_t(in) * ci + c) * l + idx]);
                    }
                gw[(std::size_t(o) * ci + c) * k + kk] += float(acc);
            }
        double bsum = 0.0;
        for (int in = 0; in < n; ++in)
            for (int t = 0; t < lo; ++t) bsum += double(gy[(std::size_t(in) * co + o) * lo + t]);
        gb[o] += float(bsum);
    }
}

void dense_forward(const float* x, int n, int din, const float* w, const float* b, int dout,
                   float* y) {
    for (int in = 0; in < n; ++in)
        for (int j = 0; j < dout; ++j) {
            double acc = b[j];
            for (int i = 0; i < din; ++i)
                acc += double(w[std::size_t(j) * din + i]) * double(x[std::size_t(in) * din + i]);
            y[std::size_t(in) * dout + j] = float(acc);
        }
}

void dense_backward_input(const float* gy, int n, int dout, const float* w, int din, float* gx) {
    for (int in = 0; in < n; ++in)
        for (int i = 0; i < din; ++i) {
            double acc = 0.0;
            for (int j = 0; j < dout; ++j)
                acc += double(w[std::size_t(j) * din + i]) * double(gy[std::size_t(in) * dout + j]);
            gx[std::size_t(in) * din + i] = float(acc);
        }
}

void dense_backward_params(const float* gy, int n, int dout, const float* x, int din, float* gw,
                           float* gb) {
    for (int j = 0; j < dout; ++j) {
        for (int i = 0; i < din; ++i) {
            double acc = 0.0;
            for (int in = 0; in < n; ++in)
                acc += double(gy[std::size_t(in) * dout + j]) * double(x[std::size_t(in) * din + i]);
            gw[std::size_t(j) * din + i] += float(acc);
        }
        double bsum = 0.0;
        for (int in = 0; in < n; ++in) bsum += double(gy[std::size_t(in) * dout + j]);
        gb[j] += float(bsum);
    }
}

void relu_forward(const float* x, std::size_t count, float* y) {
    for (std::size_t i = 0; i < count; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* gy, std::size_t count, float* gx) {
    for (std::size_t i = 0; i < count; ++i) gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
}

void maxpool1d_forward(const float* x, int n, int c, int l, int window, int stride, float* y,
                       int lo, int* argmax) {
    for (std::size_t row = 0; row < std::size_t(n) * c; ++row) {
        const float* xr = x + row * l;
        for (int t = 0; t < lo; ++t) {
            int best = t * stride;
            for (int ww = 1; ww < window; ++ww)
                if (xr[t * stride + ww] > xr[best]) best = t * stride + ww;
            y[row * lo + t] = xr[best];
            argmax[row * lo + t] = best;
        }
    }
}

void maxpool1d_backward(const float* gy, int n, int c, int lo, const int* argmax, float* gx,
                        int l) {
    for (std::size_t i = 0; i < std::size_t(n) * c * l; ++i) gx[i] = 0.0f;
    for (std::size_t row = 0; row < std::size_t(n) * c; ++row)
        for (int t = 0; t < lo; ++t) gx[row * l + argmax[row * lo + t]] += gy[row * lo + t];
}

void batchnorm_stats(const float* x, int n, int c, int l, double* mean, double* var) {
    const double m = double(n) * l;
    for (int ch = 0; ch < c; ++ch) {
        double s = 0.0;
        for (int in = 0; in < n; ++in)
            for (int t = 0; t < l; ++t) s += double(x[(std::size_t(in) * c + ch) * l + t]);
        mean[ch] = s / m;
        double v = 0.0;
        for (int in = 0; in < n; ++in)
            for (int t = 0; t < l; ++t) {
                const double d = double(x[(std::size_t(in) * c + ch) * l + t]) - mean[ch];
                v += d * d;
            }
        var[ch] = v / m;
    }
}

void batchnorm_apply(const float* x, int n, int c, int l, const double* mean,
                     const double* inv_std, const float* gamma, const float* beta, float* y) {
    for (int in = 0; in < n; ++in)
        for (int ch = 0; ch < c; ++ch)
            for (int t = 0; t < l; ++t) {
                const std::size_t i = (std::size_t(in) * c + ch) * l + t;
                y[i] = float((double(x[i]) - mean[ch]) * inv_std[ch] * double(gamma[ch]) +
                             double(beta[ch]));
            }
}

void batchnorm_backward(const float* x, const float* gy, int n, int c, int l,
                        const double* mean, const double* inv_std, const float* gamma,
                        float* gx, float* ggamma, float* gbeta) {
    const double m = double(n) * l;
    for (int ch = 0; ch < c; ++ch) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int in = 0; in < n; ++in)
            for (int t = 0; t < l; ++t) {
                const std::size_t i = (std::size_t(in) * c + ch) * l + t;
                sum_g += double(gy[i]);
                sum_gx += double(gy[i]) * (double(x[i]) - mean[ch]) * inv_std[ch];
            }
        for (int in = 0; in < n; ++in)
            for (int t = 0; t < l; ++t) {
                const std::size_t i = (std::size_t(in) * c + ch) * l + t;
                const double xhat = (double(x[i]) - mean[ch]) * inv_std[ch];
                gx[i] = float(double(gamma[ch]) * inv_std[ch] *
                              (double(gy[i]) - sum_g / m - xhat * sum_gx / m));
            }
        ggamma[ch] += float(sum_gx);
        gbeta[ch] += float(sum_g);
    }
}

void softmax_forward(const float* logits, int n, int classes, float* probs) {
    for (int in = 0; in < n; ++in) {
        const float* z = logits + std::size_t(in) * classes;
        float* p = probs + std::size_t(in) * classes;
        double mx = z[0];
        for (int j = 1; j < classes; ++j) mx = std::max(mx, double(z[j]));
        double sum = 0.0;
        for (int j = 0; j < classes; ++j) sum += std::exp(double(z[j]) - mx);
        for (int j = 0; j < classes; ++j) p[j] = float(std::exp(double(z[j]) - mx) / sum);
    }
}

} // namespace refkern
} // namespace eeamc
