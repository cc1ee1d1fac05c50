#include "qcurv/kernel.hpp"

#include "oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <doctest.h>

using namespace qcurv;

TEST_CASE("ring kernel point values") {
    // point source at the origin
    CHECK(ring_kernel(3, 2.0, 0.0) == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
    CHECK(ring_kernel(5, 0.0, 3.0) == doctest::Approx(-std::log(3.0)).epsilon(1e-15));
    // analytic antiderivative values for n = 3
    CHECK(ring_kernel(3, 1.0, 2.0) ==
          doctest::Approx(0.5 - 9.0 / 8.0 * std::log(3.0)).epsilon(1e-13));
    CHECK(ring_kernel(3, 1.0, 1.0) == doctest::Approx(0.5 - std::log(2.0)).epsilon(1e-13));
    // symmetry is structural
    CHECK(ring_kernel(5, 1.0, 2.0) == ring_kernel(5, 2.0, 1.0));

    CHECK_THROWS_AS(ring_kernel(3, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ring_kernel(2, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(ring_kernel(3, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("theta quadrature agrees with the n=3 closed form, diagonal included") {
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        const double r = 0.01 * std::pow(10000.0, i / 24.0);
        for (int j = 0; j < 25; ++j) {
            const double s = 0.01 * std::pow(10000.0, j / 24.0);
            worst = std::max(worst,
                             std::abs(ring_kernel_theta_quad(3, r, s) - ring_kernel_closed3(r, s)));
        }
        worst = std::max(worst,
                         std::abs(ring_kernel_theta_quad(3, r, r) - ring_kernel_closed3(r, r)));
    }
    CHECK(worst <= 1e-10);
}

TEST_CASE("theta quadrature agrees with the n=5 closed form off the diagonal") {
    // the closed form is ill-conditioned at extreme radius ratios, so compare
    // on pairs with moderate s/r and away from the diagonal kink
    double worst = 0.0;
    for (double r : {0.05, 0.3, 1.0, 4.0, 20.0, 80.0}) {
        for (double ratio : {0.3, 0.45, 0.7, 1.6, 2.2, 3.5}) {
            const double s = ratio * r;
            if (std::abs(r - s) < 0.2 * std::sqrt(r * s)) continue;
            worst = std::max(worst, std::abs(ring_kernel_theta_quad(5, r, s) -
                                             testing::ring_kernel_closed5(r, s)));
        }
    }
    CHECK(worst <= 1e-11);
}

TEST_CASE("far-field expansion joins the quadrature smoothly") {
    for (int n : {3, 5}) {
        const double k_above = ring_kernel(n, 100.0, 100.0 * 1.0001e-4);
        const double k_below = ring_kernel(n, 100.0, 100.0 * 0.9999e-4);
        CHECK(std::abs(k_above - k_below) <= 1e-10);
    }
}

TEST_CASE("far-field bound |k + log max| <= 2 (min/max)^2") {
    for (int n : {3, 4, 5, 6}) {
        for (double u : {0.1, 0.03, 0.01}) {
            for (double mx : {0.7, 3.0, 42.0}) {
                const double k = ring_kernel(n, u * mx, mx);
                CHECK(std::abs(k + std::log(mx)) <= 2.0 * u * u);
            }
        }
    }
}

namespace {

RadialFunction spherical_density(std::shared_ptr<const RadialGrid> g) {
    const int n = g->dimension();
    return RadialFunction::sample(g, [n](double r) {
        return factorial(n - 1) * std::exp(n * (std::log(2.0) - std::log1p(r * r)));
    });
}

} // namespace

TEST_CASE("assembled operator: basics and spherical oracle (n = 3)") {
    auto g = RadialGrid::build(3, 100.0, 512, 2.0);
    const KernelOperator op = KernelOperator::assemble(g);

    SUBCASE("zero density maps to zero potential") {
        RadialFunction zero(g, 0.0);
        const RadialFunction pot = op.apply(zero);
        for (double v : pot.values) CHECK(v == 0.0);
    }

    SUBCASE("scaling by two is exact") {
        RadialFunction f = spherical_density(g);
        RadialFunction f2(g);
        for (std::size_t j = 0; j < g->size(); ++j) f2[j] = 2.0 * f[j];
        const RadialFunction p1 = op.apply(f);
        const RadialFunction p2 = op.apply(f2);
        for (std::size_t j = 0; j < g->size(); ++j) CHECK(p2[j] == 2.0 * p1[j]);
    }

    SUBCASE("spherical potential identity within 1e-3 on r <= r_max/2") {
        RadialFunction f = spherical_density(g);
        const RadialFunction pot = op.apply(f);
        const auto& r = g->nodes();
        double c0 = 0.0;
        for (std::size_t j = 1; j < g->size(); ++j)
            c0 += g->volume_weights()[j] * f[j] * std::log(r[j]);
        c0 /= g->constants().gamma_n;
        double dev = 0.0;
        for (std::size_t j = 0; j < g->size() && r[j] <= 50.0; ++j)
            dev = std::max(dev, std::abs(pot[j] + std::log1p(r[j] * r[j]) - c0));
        CHECK(dev <= 1e-3);
    }

    SUBCASE("Laplacian-at-origin functional: spherical density gives -2n") {
        RadialFunction f = spherical_density(g);
        CHECK(std::abs(op.lap0(f) - (-6.0)) <= 1e-4 * 6.0);
    }

    SUBCASE("lap0 functional is linear") {
        RadialFunction f = spherical_density(g);
        RadialFunction h = RadialFunction::sample(g, [](double r) { return std::exp(-r * r); });
        for (double th : {0.25, 0.5, 0.75}) {
            RadialFunction mix(g);
            for (std::size_t j = 0; j < g->size(); ++j)
                mix[j] = (1.0 - th) * f[j] + th * h[j];
            const double lhs = op.lap0(mix);
            const double rhs = (1.0 - th) * op.lap0(f) + th * op.lap0(h);
            CHECK(std::abs(lhs - rhs) <= 1e-12 * (std::abs(lhs) + 1.0));
        }
    }

    SUBCASE("far-node monopole behavior") {
        RadialFunction f(g, 0.0);
        const std::size_t far = g->first_index_at_or_above(50.0);
        f[far] = 3.0;
        const double mass = g->volume_weights()[far] * 3.0;
        const RadialFunction pot = op.apply(f);
        const double expect = -(mass / g->constants().gamma_n) * std::log(g->nodes()[far]);
        CHECK(std::abs(pot[2] - expect) <= 0.01 * std::abs(expect));
    }

    SUBCASE("grid mismatch and non-finite density rejected") {
        auto other = RadialGrid::build(3, 100.0, 256, 2.0);
        RadialFunction f(other, 1.0);
        CHECK_THROWS_AS(op.apply(f), std::invalid_argument);
        RadialFunction bad(g, 1.0);
        bad[3] = std::nan("");
        CHECK_THROWS_AS(op.apply(bad), std::invalid_argument);
    }
}

TEST_CASE("assembled operator: spherical oracle (n = 5)") {
    auto g = RadialGrid::build(5, 100.0, 512, 2.0);
    const KernelOperator op = KernelOperator::assemble(g);
    RadialFunction f = spherical_density(g);
    const RadialFunction pot = op.apply(f);
    const auto& r = g->nodes();
    double c0 = 0.0;
    for (std::size_t j = 1; j < g->size(); ++j)
        c0 += g->volume_weights()[j] * f[j] * std::log(r[j]);
    c0 /= g->constants().gamma_n;
    double dev = 0.0;
    for (std::size_t j = 0; j < g->size() && r[j] <= 50.0; ++j)
        dev = std::max(dev, std::abs(pot[j] + std::log1p(r[j] * r[j]) - c0));
    CHECK(dev <= 1e-3);
    CHECK(std::abs(op.lap0(f) - (-10.0)) <= 1e-4 * 10.0);
}

TEST_CASE("kernel cache round trip") {
    namespace fs = std::filesystem;
    auto g = RadialGrid::build(3, 100.0, 128, 2.0);
    const KernelOperator op = KernelOperator::assemble(g);
    const fs::path path = fs::temp_directory_path() / "qcurv_kernel_cache_test.bin";
    op.save(path);

    SUBCASE("bit-identical reload") {
        auto loaded = KernelOperator::load(path, g);
        REQUIRE(loaded.has_value());
        REQUIRE(loaded->matrix().size() == op.matrix().size());
        for (std::size_t i = 0; i < op.matrix().size(); ++i)
            CHECK(loaded->matrix()[i] == op.matrix()[i]);
        for (std::size_t i = 0; i < op.lap0_weights().size(); ++i)
            CHECK(loaded->lap0_weights()[i] == op.lap0_weights()[i]);
    }
    SUBCASE("keyed by grid parameters") {
        auto g2 = RadialGrid::build(3, 100.0, 256, 2.0);
        CHECK_FALSE(KernelOperator::load(path, g2).has_value());
        auto g3 = RadialGrid::build(3, 100.0, 128, 1.5);
        CHECK_FALSE(KernelOperator::load(path, g3).has_value());
    }
    SUBCASE("missing and truncated files") {
        CHECK_FALSE(KernelOperator::load(fs::temp_directory_path() / "no_such.bin", g));
        const fs::path trunc = fs::temp_directory_path() / "qcurv_kernel_trunc.bin";
        {
            std::ifstream in(path, std::ios::binary);
            std::ofstream out(trunc, std::ios::binary | std::ios::trunc);
            std::vector<char> buf(1000);
            in.read(buf.data(), 1000);
            out.write(buf.data(), in.gcount());
        }
        CHECK_FALSE(KernelOperator::load(trunc, g).has_value());
        fs::remove(trunc);
    }
    fs::remove(path);
}
