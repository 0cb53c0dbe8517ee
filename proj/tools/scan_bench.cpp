// Benchmark for the mass-simplex spiraling scan: parallel kernel vs the
// serial reference. Verifies the two produce bitwise-identical cells, then
// reports wall times and the speedup.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "p3b/spectra.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool identical(const std::vector<p3b::MassMapCell>& a, const std::vector<p3b::MassMapCell>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(&a[i].m1, &b[i].m1, sizeof(double)) != 0 ||
            std::memcmp(&a[i].m2, &b[i].m2, sizeof(double)) != 0 ||
            std::memcmp(&a[i].m3, &b[i].m3, sizeof(double)) != 0 ||
            std::memcmp(a[i].nu.data(), b[i].nu.data(), sizeof(a[i].nu)) != 0 ||
            std::memcmp(a[i].spiral.data(), b[i].spiral.data(), sizeof(a[i].spiral)) != 0 ||
            a[i].all != b[i].all)
            return false;
    }
    return true;
}

}  // namespace

int main(int argc, char** argv) {
    int resolution = 400;
    int repeats = 3;
    if (argc > 1) resolution = std::atoi(argv[1]);
    if (argc > 2) repeats = std::atoi(argv[2]);
    if (resolution < 2 || repeats < 1) {
        std::fprintf(stderr, "usage: %s [resolution >= 2] [repeats >= 1]\n", argv[0]);
        return 2;
    }

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif
    std::printf("resolution: %d  repeats: %d\n", resolution, repeats);

    // Warm-up runs, also used for the equivalence check.
    const std::vector<p3b::MassMapCell> parallel_cells = p3b::spiraling_region_scan(resolution);
    const std::vector<p3b::MassMapCell> serial_cells =
        p3b::spiraling_region_scan_serial(resolution);
    if (!identical(parallel_cells, serial_cells)) {
        std::fprintf(stderr, "FAIL: parallel and serial scans differ\n");
        return 1;
    }
    std::printf("equivalence: %zu cells bitwise identical\n", parallel_cells.size());

    double best_parallel = 1e300, best_serial = 1e300;
    for (int r = 0; r < repeats; ++r) {
        auto t0 = std::chrono::steady_clock::now();
        volatile size_t np = p3b::spiraling_region_scan(resolution).size();
        best_parallel = std::min(best_parallel, seconds_since(t0));
        t0 = std::chrono::steady_clock::now();
        volatile size_t ns = p3b::spiraling_region_scan_serial(resolution).size();
        best_serial = std::min(best_serial, seconds_since(t0));
        (void)np;
        (void)ns;
    }
    std::printf("serial:   %.4f s\n", best_serial);
    std::printf("parallel: %.4f s\n", best_parallel);
    std::printf("speedup:  %.2fx\n", best_serial / best_parallel);
    return 0;
}
