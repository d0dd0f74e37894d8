// Kernel benchmark: production (OpenMP, blocked/unrolled) vs the serial
// reference, on the layer shapes the default architecture actually runs.
// Usage: bench_kernels [batch] [repeats]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "eeamc/kernels.hpp"
#include "eeamc/rng.hpp"

using namespace eeamc;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<float> random_vec(std::size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (auto& x : v) x = float(rng.uniform(-1.0, 1.0));
    return v;
}

struct ConvCase {
    const char* tag;
    int ci, co, l;
};

void bench_conv(const ConvCase& cs, int batch, int reps, Rng& rng) {
    const int k = 3, pad = 1, stride = 1;
    const int lo = conv1d_output_length(cs.l, k, stride, pad);
    auto x = random_vec(std::size_t(batch) * cs.ci * cs.l, rng);
    auto w = random_vec(std::size_t(cs.co) * cs.ci * k, rng);
    auto b = random_vec(std::size_t(cs.co), rng);
    std::vector<float> y(std::size_t(batch) * cs.co * lo);
    std::vector<float> gx(x.size()), gw(w.size()), gb(b.size());

    const double fwd_macs = double(batch) * cs.co * lo * cs.ci * k * reps;

    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        kernels::conv1d_forward(x.data(), batch, cs.ci, cs.l, w.data(), b.data(), cs.co, k,
                                stride, pad, y.data(), lo);
    const double opt_fwd = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        refkern::conv1d_forward(x.data(), batch, cs.ci, cs.l, w.data(), b.data(), cs.co, k,
                                stride, pad, y.data(), lo);
    const double ref_fwd = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
        kernels::conv1d_backward_input(y.data(), batch, cs.co, lo, w.data(), cs.ci, k, stride,
                                       pad, gx.data(), cs.l);
        kernels::conv1d_backward_params(y.data(), batch, cs.co, lo, x.data(), cs.ci, cs.l, k,
                                        stride, pad, gw.data(), gb.data());
    }
    const double opt_bwd = seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r) {
        refkern::conv1d_backward_input(y.data(), batch, cs.co, lo, w.data(), cs.ci, k, stride,
                                       pad, gx.data(), cs.l);
        refkern::conv1d_backward_params(y.data(), batch, cs.co, lo, x.data(), cs.ci, cs.l, k,
                                        stride, pad, gw.data(), gb.data());
    }
    const double ref_bwd = seconds_since(t0);

    std::printf("%-18s fwd %7.2f GMAC/s (ref %6.2f, x%4.1f)   bwd %7.2f GMAC/s (ref %6.2f, x%4.1f)\n",
                cs.tag, fwd_macs / opt_fwd / 1e9, fwd_macs / ref_fwd / 1e9, ref_fwd / opt_fwd,
                2.0 * fwd_macs / opt_bwd / 1e9, 2.0 * fwd_macs / ref_bwd / 1e9,
                ref_bwd / opt_bwd);
}

void bench_dense(const char* tag, int din, int dout, int batch, int reps, Rng& rng) {
    auto x = random_vec(std::size_t(batch) * din, rng);
    auto w = random_vec(std::size_t(dout) * din, rng);
    auto b = random_vec(std::size_t(dout), rng);
    std::vector<float> y(std::size_t(batch) * dout);

    const double macs = double(batch) * din * dout * reps;
    auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        kernels::dense_forward(x.data(), batch, din, w.data(), b.data(), dout, y.data());
    const double opt = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        refkern::dense_forward(x.data(), batch, din, w.data(), b.data(), dout, y.data());
    const double ref = seconds_since(t0);
    std::printf("%-18s fwd %7.2f GMAC/s (ref %6.2f, x%4.1f)\n", tag, macs / opt / 1e9,
                macs / ref / 1e9, ref / opt);
}

} // namespace

int main(int argc, char** argv) {
    const int batch = argc > 1 ? std::atoi(argv[1]) : 128;
    const int reps = argc > 2 ? std::atoi(argv[2]) : 20;
    Rng rng(12345);

    std::printf("kernel benchmark: batch %d, %d repetitions, %d worker thread(s)\n", batch, reps,
                kernels::thread_count());

    // conv blocks of the default plan
    bench_conv({"conv 2x32  L128", 2, 32, 128}, batch, reps, rng);
    bench_conv({"conv 32x32 L128", 32, 32, 128}, batch, reps, rng);
    bench_conv({"conv 32x32 L64", 32, 32, 64}, batch, reps, rng);
    bench_conv({"conv 32x16 L32", 32, 16, 32}, batch, reps, rng);
    bench_dense("dense 128->128", 128, 128, batch, reps * 8, rng);
    bench_dense("dense 1024->64", 1024, 64, batch, reps * 8, rng);
    return 0;
}
