// Microkernel throughput probe for the conv GEMM shapes the CNN actually
// runs. Useful when tuning the blocking or bringing the project up on a new
// machine.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "trajlab/nn/kernels.hpp"

using namespace trajlab::nn;

namespace {

double bench_nn(int m, int k, int n, int reps) {
    std::vector<float> a(static_cast<size_t>(m) * k, 1.0f);
    std::vector<float> b(static_cast<size_t>(k) * n, 0.5f);
    std::vector<float> c(static_cast<size_t>(m) * n);
    gemm_nn(a.data(), b.data(), c.data(), m, k, n, false); // warm-up
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        gemm_nn(a.data(), b.data(), c.data(), m, k, n, false);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return 2.0 * m * k * n * reps / secs / 1e9;
}

double bench_tn(int m, int k, int n, int reps) {
    std::vector<float> a(static_cast<size_t>(k) * m, 1.0f);
    std::vector<float> b(static_cast<size_t>(k) * n, 0.5f);
    std::vector<float> c(static_cast<size_t>(m) * n);
    gemm_tn(a.data(), b.data(), c.data(), m, k, n, true);
    const auto t0 = std::chrono::steady_clock::now();
    for (int r = 0; r < reps; ++r)
        gemm_tn(a.data(), b.data(), c.data(), m, k, n, true);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return 2.0 * static_cast<double>(m) * k * n * reps / secs / 1e9;
}

} // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : 1;
    set_gemm_threads(threads);
    std::printf("gemm threads: %d\n", gemm_threads());

    struct Shape {
        const char* name;
        int m, k, n;
        int reps;
        bool trans;
    };
    const Shape shapes[] = {
        {"conv1@112 fwd", 12544, 9, 32, 100, false},
        {"conv2@112 fwd", 3136, 288, 32, 50, false},
        {"conv3@112 fwd", 784, 288, 64, 100, false},
        {"conv2@112 gw ", 288, 3136, 32, 50, true},
        {"conv2@112 gin", 3136, 32, 288, 50, false},
        {"conv2@448 fwd", 50176, 288, 32, 10, false},
        {"conv2@448 gw ", 288, 50176, 32, 10, true},
    };
    for (const auto& s : shapes) {
        const double gflops =
            s.trans ? bench_tn(s.m, s.k, s.n, s.reps) : bench_nn(s.m, s.k, s.n, s.reps);
        std::printf("%s  %6dx%6dx%3d : %6.1f GFLOP/s\n", s.name, s.m, s.k, s.n, gflops);
    }
    return 0;
}
