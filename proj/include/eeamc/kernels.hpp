#pragma once

#include <cstddef>

// Numeric kernels for the 1-D CNN stack. Two implementations share this
// interface:
//
//   eeamc::kernels  - production path: OpenMP-parallel over independent
//                     output elements, channel-blocked and unrolled inner
//                     loops. Bitwise deterministic for any thread count
//                     because no floating-point reduction ever crosses a
//                     thread boundary.
//   eeamc::refkern  - naive serial loops, double precision throughout,
//                     written directly from the layer definitions. Kept as
//                     the independent oracle for tests and as the baseline
//                     for the kernel benchmark.
//
// Shapes follow the layer convention: activations (N, C, L) for the conv
// stage and (N, D) for the dense stage, all row-major float32. Reductions
// accumulate in double and round once on store.

namespace eeamc {

#define EEAMC_KERNEL_API                                                                       \
    /* y (N,Co,Lo), Lo = (L + 2*pad - K)/stride + 1 */                                         \
    void conv1d_forward(const float* x, int n, int ci, int l, const float* w, const float* b,  \
                        int co, int k, int stride, int pad, float* y, int lo);                 \
    void conv1d_backward_input(const float* gy, int n, int co, int lo, const float* w, int ci, \
                               int k, int stride, int pad, float* gx, int l);                  \
    /* accumulates into gw (Co,Ci,K) and gb (Co) */                                            \
    void conv1d_backward_params(const float* gy, int n, int co, int lo, const float* x,        \
                                int ci, int l, int k, int stride, int pad, float* gw,          \
                                float* gb);                                                    \
    void dense_forward(const float* x, int n, int din, const float* w, const float* b,         \
                       int dout, float* y);                                                    \
    void dense_backward_input(const float* gy, int n, int dout, const float* w, int din,       \
                              float* gx);                                                      \
    /* accumulates into gw (Dout,Din) and gb (Dout) */                                         \
    void dense_backward_params(const float* gy, int n, int dout, const float* x, int din,      \
                               float* gw, float* gb);                                          \
    void relu_forward(const float* x, std::size_t count, float* y);                            \
    void relu_backward(const float* x, const float* gy, std::size_t count, float* gx);         \
    /* argmax holds, per output element, the source index within its row */                    \
    void maxpool1d_forward(const float* x, int n, int c, int l, int window, int stride,        \
                           float* y, int lo, int* argmax);                                     \
    /* gx is zeroed, then each gy element routed to its recorded index */                      \
    void maxpool1d_backward(const float* gy, int n, int c, int lo, const int* argmax,          \
                            float* gx, int l);                                                 \
    /* per-channel biased statistics over the (N, L) slab */                                   \
    void batchnorm_stats(const float* x, int n, int c, int l, double* mean, double* var);      \
    void batchnorm_apply(const float* x, int n, int c, int l, const double* mean,              \
                         const double* inv_std, const float* gamma, const float* beta,         \
                         float* y);                                                            \
    /* train-mode backward; accumulates ggamma/gbeta */                                        \
    void batchnorm_backward(const float* x, const float* gy, int n, int c, int l,              \
                            const double* mean, const double* inv_std, const float* gamma,     \
                            float* gx, float* ggamma, float* gbeta);                           \
    /* max-subtracted, double-precision exp/sum per row */                                     \
    void softmax_forward(const float* logits, int n, int classes, float* probs);

namespace kernels {
EEAMC_KERNEL_API
// Effective worker count for the parallel kernels (honours AMC_THREADS).
int thread_count();
} // namespace kernels

namespace refkern {
EEAMC_KERNEL_API
} // namespace refkern

#undef EEAMC_KERNEL_API

int conv1d_output_length(int l, int k, int stride, int pad);
int maxpool1d_output_length(int l, int window, int stride);

} // namespace eeamc
