#include "qcurv/simd.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

using namespace qcurv;

namespace {

struct LaneGuard {
    simd::Lane saved = simd::active();
    ~LaneGuard() { simd::force(saved); }
};

} // namespace

TEST_CASE("dispatch honors force() and restores") {
    LaneGuard guard;
    simd::force(simd::Lane::Scalar);
    CHECK(simd::active() == simd::Lane::Scalar);
    if (simd::avx2_supported()) {
        simd::force(simd::Lane::Avx2);
        CHECK(simd::active() == simd::Lane::Avx2);
    }
}

TEST_CASE("AVX2 log kernels match the scalar references" *
          doctest::skip(!simd::avx2_supported())) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> uexp(-280.0, 280.0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    SUBCASE("elementwise vector log accuracy across the full range") {
        for (int i = 0; i < 20000; ++i) {
            double x;
            if (i % 4 == 0)
                x = 1.0 + (u01(rng) - 0.5) * 1e-4;  // near 1: relative accuracy of log m
            else
                x = std::pow(10.0, uexp(rng));
            const double w = 1.0;
            const double got = simd::log_sum_avx2(&x, &w, 1);
            const double ref = std::log(x);
            CHECK(std::abs(got - ref) <= 4e-15 * std::max(std::abs(ref), 1e-12));
        }
    }

    SUBCASE("log_quad_sum equivalence") {
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t m = 1 + rng() % 130;
            std::vector<double> u(m), w(m);
            const double a = 0.1 + 10.0 * u01(rng);
            const double b = 0.9 * a * u01(rng);
            double scale = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                u[i] = 2.0 * u01(rng) - 1.0;
                w[i] = 2.0 * u01(rng) - 1.0;
                scale += std::abs(w[i] * std::log(a - b * u[i]));
            }
            const double got = simd::log_quad_sum_avx2(a, b, u.data(), w.data(), m);
            const double ref = simd::log_quad_sum_scalar(a, b, u.data(), w.data(), m);
            CHECK(std::abs(got - ref) <= 5e-14 * (scale + 1.0));
        }
    }

    SUBCASE("log_sum equivalence") {
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t m = 1 + rng() % 130;
            std::vector<double> x(m), w(m);
            double scale = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                x[i] = std::pow(10.0, uexp(rng));
                w[i] = 2.0 * u01(rng) - 1.0;
                scale += std::abs(w[i] * std::log(x[i]));
            }
            const double got = simd::log_sum_avx2(x.data(), w.data(), m);
            const double ref = simd::log_sum_scalar(x.data(), w.data(), m);
            CHECK(std::abs(got - ref) <= 5e-14 * (scale + 1.0));
        }
    }
}

TEST_CASE("AVX2 dot and matvec match the scalar references" *
          doctest::skip(!simd::avx2_supported())) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    SUBCASE("dot") {
        for (std::size_t m : {1u, 3u, 4u, 15u, 16u, 17u, 64u, 1000u, 2049u}) {
            std::vector<double> x(m), y(m);
            double scale = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                x[i] = dist(rng);
                y[i] = dist(rng);
                scale += std::abs(x[i] * y[i]);
            }
            const double got = simd::dot_avx2(x.data(), y.data(), m);
            const double ref = simd::dot_scalar(x.data(), y.data(), m);
            CHECK(std::abs(got - ref) <= 1e-13 * (scale + 1.0));
        }
    }

    SUBCASE("matvec") {
        const std::size_t rows = 37, cols = 213;
        std::vector<double> A(rows * cols), x(cols), y1(rows), y2(rows);
        for (double& v : A) v = dist(rng);
        for (double& v : x) v = dist(rng);
        simd::matvec_avx2(A.data(), x.data(), y1.data(), rows, cols);
        simd::matvec_scalar(A.data(), x.data(), y2.data(), rows, cols);
        for (std::size_t r = 0; r < rows; ++r)
            CHECK(std::abs(y1[r] - y2[r]) <= 1e-13 * (std::abs(y2[r]) + 1.0));
    }
}

TEST_CASE("dispatched kernels are deterministic across repeated calls") {
    std::vector<double> x(777), w(777);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = 1.0 + 0.001 * static_cast<double>(i);
        w[i] = (i % 2) ? 0.25 : -0.5;
    }
    const double a = simd::log_sum(x.data(), w.data(), x.size());
    const double b = simd::log_sum(x.data(), w.data(), x.size());
    CHECK(a == b);
    const double d1 = simd::dot(x.data(), w.data(), x.size());
    const double d2 = simd::dot(x.data(), w.data(), x.size());
    CHECK(d1 == d2);
}
