#include "qcurv/simd.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace qcurv::simd {

namespace {

Lane resolve_auto() {
#if defined(__GNUC__) || defined(__clang__)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Lane::Avx2;
#endif
    return Lane::Scalar;
}

Lane initial_lane() {
    if (const char* env = std::getenv("QCURV_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return Lane::Scalar;
        if (std::strcmp(env, "avx2") == 0) {
            if (!avx2_supported())
                throw std::runtime_error("QCURV_SIMD=avx2 but CPU lacks AVX2+FMA");
            return Lane::Avx2;
        }
    }
    return resolve_auto();
}

std::atomic<Lane>& lane_slot() {
    static std::atomic<Lane> lane{initial_lane()};
    return lane;
}

} // namespace

bool avx2_supported() {
#if defined(__GNUC__) || defined(__clang__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Lane active() { return lane_slot().load(std::memory_order_relaxed); }

void force(Lane lane) {
    if (lane == Lane::Auto) lane = resolve_auto();
    if (lane == Lane::Avx2 && !avx2_supported())
        throw std::runtime_error("simd::force: AVX2 not supported on this CPU");
    lane_slot().store(lane, std::memory_order_relaxed);
}

double log_quad_sum_scalar(double a, double b, const double* u, const double* w, std::size_t m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += w[i] * std::log(a - b * u[i]);
    return acc;
}

double log_sum_scalar(const double* x, const double* w, std::size_t m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += w[i] * std::log(x[i]);
    return acc;
}

double dot_scalar(const double* x, const double* y, std::size_t m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += x[i] * y[i];
    return acc;
}

void matvec_scalar(const double* A, const double* x, double* y, std::size_t rows,
                   std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(A + r * cols, x, cols);
}

double log_quad_sum(double a, double b, const double* u, const double* w, std::size_t m) {
    if (active() == Lane::Avx2) return log_quad_sum_avx2(a, b, u, w, m);
    return log_quad_sum_scalar(a, b, u, w, m);
}

double log_sum(const double* x, const double* w, std::size_t m) {
    if (active() == Lane::Avx2) return log_sum_avx2(x, w, m);
    return log_sum_scalar(x, w, m);
}

double dot(const double* x, const double* y, std::size_t m) {
    if (active() == Lane::Avx2) return dot_avx2(x, y, m);
    return dot_scalar(x, y, m);
}

void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols) {
    if (active() == Lane::Avx2) {
        matvec_avx2(A, x, y, rows, cols);
        return;
    }
    matvec_scalar(A, x, y, rows, cols);
}

} // namespace qcurv::simd
