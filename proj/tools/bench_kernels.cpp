// Times the OpenMP kernels against the serial reference implementations and
// verifies bitwise agreement on the way. Useful both as a regression check
// and for sizing experiment profiles on a given machine.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "twopath/kernels.hpp"
#include "twopath/rng.hpp"

using namespace twopath;
using clk = std::chrono::steady_clock;

namespace {

double seconds_since(clk::time_point t0) {
    return std::chrono::duration<double>(clk::now() - t0).count();
}

std::vector<float> random_vec(size_t n, uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n);
    for (auto& x : v) x = rng.uniform(-1.0f, 1.0f);
    return v;
}

struct Result {
    double serial_s = 0.0;
    double parallel_s = 0.0;
    bool bitwise = true;
    double gflop = 0.0;  // per run
};

template <typename SerialFn, typename ParallelFn>
Result bench(SerialFn serial, ParallelFn parallel, std::vector<float>& out_serial,
             std::vector<float>& out_parallel, double flops, int reps) {
    Result r;
    r.gflop = flops * 1e-9;
    serial(out_serial);  // warm
    auto t0 = clk::now();
    for (int i = 0; i < reps; ++i) serial(out_serial);
    r.serial_s = seconds_since(t0) / reps;
    parallel(out_parallel);
    t0 = clk::now();
    for (int i = 0; i < reps; ++i) parallel(out_parallel);
    r.parallel_s = seconds_since(t0) / reps;
    r.bitwise = std::memcmp(out_serial.data(), out_parallel.data(),
                            out_serial.size() * sizeof(float)) == 0;
    return r;
}

void report(const char* name, const Result& r) {
    std::printf("%-28s serial %8.3f ms (%6.2f GF/s)   omp %8.3f ms (%6.2f GF/s)   x%.2f   %s\n",
                name, r.serial_s * 1e3, r.gflop / r.serial_s, r.parallel_s * 1e3,
                r.gflop / r.parallel_s, r.serial_s / r.parallel_s,
                r.bitwise ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 3;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--reps" && i + 1 < argc) reps = std::atoi(argv[++i]);
    }
    std::printf("threads available: %d, reps per timing: %d\n\n", omp_get_max_threads(), reps);

    {  // conv forward at a training-like shape
        const int N = 64, C = 16, H = 16, W = 16, F = 16, ks = 3, pad = 1;
        auto x = random_vec(static_cast<size_t>(N) * C * H * W, 1);
        auto k = random_vec(static_cast<size_t>(F) * C * ks * ks, 2);
        auto b = random_vec(F, 3);
        std::vector<float> ys(static_cast<size_t>(N) * F * H * W), yp(ys.size());
        const double flops = 2.0 * N * F * H * W * C * ks * ks;
        auto r = bench(
            [&](std::vector<float>& y) {
                kernref::conv2d_forward(x.data(), N, C, H, W, k.data(), F, ks, pad, b.data(),
                                        y.data());
            },
            [&](std::vector<float>& y) {
                kern::conv2d_forward(x.data(), N, C, H, W, k.data(), F, ks, pad, b.data(),
                                     y.data());
            },
            ys, yp, flops, reps);
        report("conv2d fwd 64x16x16x16 k3", r);
    }

    {  // conv backward, same shape
        const int N = 64, C = 16, H = 16, W = 16, F = 16, ks = 3, pad = 1;
        auto x = random_vec(static_cast<size_t>(N) * C * H * W, 4);
        auto k = random_vec(static_cast<size_t>(F) * C * ks * ks, 5);
        auto dy = random_vec(static_cast<size_t>(N) * F * H * W, 6);
        std::vector<float> dxs(x.size()), dxp(x.size());
        std::vector<float> dks(k.size()), dkp(k.size()), dbs(F), dbp(F);
        const double flops = 3.0 * 2.0 * N * F * H * W * C * ks * ks;
        auto r = bench(
            [&](std::vector<float>& dx) {
                std::fill(dks.begin(), dks.end(), 0.0f);
                std::fill(dbs.begin(), dbs.end(), 0.0f);
                kernref::conv2d_backward(x.data(), dy.data(), N, C, H, W, k.data(), F, ks, pad,
                                         dx.data(), dks.data(), dbs.data());
            },
            [&](std::vector<float>& dx) {
                std::fill(dkp.begin(), dkp.end(), 0.0f);
                std::fill(dbp.begin(), dbp.end(), 0.0f);
                kern::conv2d_backward(x.data(), dy.data(), N, C, H, W, k.data(), F, ks, pad,
                                      dx.data(), dkp.data(), dbp.data());
            },
            dxs, dxp, flops, reps);
        r.bitwise = r.bitwise && std::memcmp(dks.data(), dkp.data(), dks.size() * 4) == 0 &&
                    std::memcmp(dbs.data(), dbp.data(), dbs.size() * 4) == 0;
        report("conv2d bwd 64x16x16x16 k3", r);
    }

    {  // wide-kernel conv, coarse-pathway-like
        const int N = 64, C = 1, H = 32, W = 32, F = 8, ks = 11, pad = 5;
        auto x = random_vec(static_cast<size_t>(N) * C * H * W, 7);
        auto k = random_vec(static_cast<size_t>(F) * C * ks * ks, 8);
        auto b = random_vec(F, 9);
        std::vector<float> ys(static_cast<size_t>(N) * F * H * W), yp(ys.size());
        const double flops = 2.0 * N * F * H * W * C * ks * ks;
        auto r = bench(
            [&](std::vector<float>& y) {
                kernref::conv2d_forward(x.data(), N, C, H, W, k.data(), F, ks, pad, b.data(),
                                        y.data());
            },
            [&](std::vector<float>& y) {
                kern::conv2d_forward(x.data(), N, C, H, W, k.data(), F, ks, pad, b.data(),
                                     y.data());
            },
            ys, yp, flops, reps);
        report("conv2d fwd 64x1x32x32 k11", r);
    }

    {  // dense head
        const int N = 64, D = 1024, M = 1000;
        auto x = random_vec(static_cast<size_t>(N) * D, 10);
        auto w = random_vec(static_cast<size_t>(D) * M, 11);
        auto b = random_vec(M, 12);
        std::vector<float> ys(static_cast<size_t>(N) * M), yp(ys.size());
        const double flops = 2.0 * N * D * M;
        auto r = bench(
            [&](std::vector<float>& y) {
                kernref::dense_forward(x.data(), N, D, w.data(), b.data(), y.data(), M);
            },
            [&](std::vector<float>& y) {
                kern::dense_forward(x.data(), N, D, w.data(), b.data(), y.data(), M);
            },
            ys, yp, flops, reps);
        report("dense fwd 64x1024 -> 1000", r);
    }

    {  // matmul
        const int M = 512, K = 512, N = 512;
        auto A = random_vec(static_cast<size_t>(M) * K, 13);
        auto B = random_vec(static_cast<size_t>(K) * N, 14);
        std::vector<float> Cs(static_cast<size_t>(M) * N), Cp(Cs.size());
        const double flops = 2.0 * M * K * N;
        auto r = bench(
            [&](std::vector<float>& C) {
                kernref::matmul_nn(A.data(), B.data(), C.data(), M, K, N);
            },
            [&](std::vector<float>& C) { kern::matmul_nn(A.data(), B.data(), C.data(), M, K, N); },
            Cs, Cp, flops, reps);
        report("matmul 512^3", r);
    }

    return 0;
}
