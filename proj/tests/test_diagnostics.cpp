#include "qcurv/diagnostics.hpp"

#include "oracle.hpp"

#include <cmath>
#include <stdexcept>

#include <doctest.h>

using namespace qcurv;

namespace {

const KernelOperator& op3() {
    static KernelOperator op = KernelOperator::assemble(RadialGrid::build(3, 100.0, 512, 2.0));
    return op;
}

} // namespace

TEST_CASE("spherical oracle passes on a mid-resolution grid") {
    const SphericalOracleReport rep = spherical_oracle(op3());
    CHECK(rep.mass_error <= 1e-6);
    CHECK(rep.potential_dev <= 1e-3);
    CHECK(rep.const_offset <= 1e-3);
    CHECK(rep.pass);
}

TEST_CASE("conformal invariance: lambda scaling keeps the spherical mass") {
    // independent refinement quadrature plus the analytic power tail
    for (double lambda : {1.0, 2.0}) {
        const SphericalSolution sph{lambda};
        const double truncated = testing::oracle_radial_integral(
            3, [&](double s) { return sph.density(3, s); }, 100.0);
        const double tail_c = factorial(2) * std::pow(2.0 / lambda, 3);
        const double tail = sphere_area(2) * tail_c * std::pow(100.0, -3.0) / 3.0;
        const double target = lambda1(3);
        CHECK(std::abs(truncated + tail - target) <= 1e-6 * target);
    }
}

TEST_CASE("asymptotic fit") {
    auto g = op3().grid_ptr();

    SUBCASE("synthetic exact profile: slope recovered to 1e-10") {
        RadialFunction prof = RadialFunction::sample(
            g, [](double r) { return 4.2 - 3.0 * std::log(std::max(r, 1e-300)); });
        const AsymptoticFit fit = fit_log_slope(prof, -3.0);
        CHECK(std::abs(fit.slope + 3.0) <= 1e-10);
        CHECK(fit.drift <= 1e-10);
    }

    SUBCASE("spherical solution fits slope -2 within 2%") {
        const SphericalSolution sph{1.0};
        RadialFunction prof = RadialFunction::sample(g, [&](double r) { return sph.u(r); });
        const AsymptoticFit fit = fit_log_slope(prof, -2.0);
        CHECK(std::abs(fit.slope - (-2.0)) <= 0.02 * 2.0);
    }

    SUBCASE("window with too few nodes is a configuration error") {
        // strong grading pushes all but a handful of nodes out of [R/4, R/2]
        auto tiny = RadialGrid::build(3, 12.0, 64, 6.0);
        std::size_t in_window = 0;
        for (double r : tiny->nodes())
            if (r >= 3.0 && r <= 6.0) ++in_window;
        REQUIRE(in_window < 8);
        RadialFunction prof(tiny, 1.0);
        CHECK_THROWS_AS(fit_log_slope(prof, -1.0), std::invalid_argument);
    }
}

TEST_CASE("pohozaev arithmetic and guards") {
    const auto c = DimensionalConstants::make(3);
    auto lhs = [&](double kappa) {
        const double kg = kappa / c.gamma_n;
        return kg * (kg - 2.0);
    };
    CHECK(std::abs(lhs(c.lambda1)) <= 1e-15);
    CHECK(std::abs(lhs(0.5 * c.lambda1) - (-1.0)) <= 1e-15);
    CHECK(lhs(1.5 * c.lambda1) == doctest::Approx(3.0).epsilon(1e-15));

    ProblemSpec spec;
    spec.n = 5;
    spec.kappa = 1.0;
    spec.Q = QProfile::quartic(1.0, 1.0);
    spec.variant = Variant::Thm2;
    IterationState st;
    st.v = RadialFunction(op3().grid_ptr(), 0.0);
    CHECK_THROWS_AS(pohozaev_residual(spec, op3(), st), std::invalid_argument);
    spec.n = 3;
    spec.variant = Variant::Thm1;
    CHECK_THROWS_AS(pohozaev_residual(spec, op3(), st), std::invalid_argument);
}

TEST_CASE("pohozaev residual on a converged Thm2 state") {
    ProblemSpec spec;
    spec.n = 3;
    spec.kappa = 2.0 * op3().grid().constants().lambda1;
    spec.Q = QProfile::quartic(2.0, 1.0);
    spec.variant = Variant::Thm2;
    SolverConfig cfg;
    const SolveResult res = solve(spec, cfg, op3());
    REQUIRE(res.status == SolveStatus::Converged);
    const PohozaevResult poh = pohozaev_residual(spec, op3(), res.state);
    CHECK(poh.lhs == doctest::Approx(8.0).epsilon(1e-15));  // (4)(4-2)
    CHECK(poh.residual <= 5e-2);
}

TEST_CASE("nonexistence probe statuses") {
    SolverConfig cfg;
    const double L1 = op3().grid().constants().lambda1;

    SUBCASE("subcritical gaussian converges") {
        const ProbeReport rep = nonexistence_probe(3, 1.0, 1.0, 0.5 * L1, cfg, op3());
        CHECK(rep.status == SolveStatus::Converged);
        CHECK(rep.pohozaev.residual <= 5e-2);
        CHECK_FALSE(rep.obstruction_consistent);  // lhs < 0 below Lambda_1
    }
    SUBCASE("supercritical gaussian never converges cleanly") {
        const ProbeReport rep = nonexistence_probe(3, 1.0, 1.0, 1.5 * L1, cfg, op3());
        CHECK(rep.status != SolveStatus::Converged);
        CHECK(rep.pohozaev.grad_nonpositive);
        CHECK(rep.obstruction_consistent);  // lhs(1.5 L1) = 3 > 0 with r dK/dr <= 0
    }
    SUBCASE("dimension guard") {
        CHECK_THROWS_AS(nonexistence_probe(5, 1.0, 1.0, 1.0, cfg, op3()),
                        std::invalid_argument);
    }
}

TEST_CASE("invariant suite catches constructed failures") {
    auto g = op3().grid_ptr();
    ProblemSpec spec;
    spec.n = 3;
    spec.kappa = 0.5 * g->constants().lambda1;
    spec.Q = QProfile::gaussian(2.0, 1.0);
    spec.variant = Variant::Thm2;
    SolverConfig cfg;

    SolveResult base;
    base.state.v = RadialFunction::sample(g, [](double r) { return 0.1 * std::exp(-r * r); });
    base.state.kappa_current = spec.kappa;
    base.state.t = 1.0;
    base.state.d0 = -1.0;
    RadialFunction q = RadialFunction::sample(g, [&](double r) { return spec.Q(r); });
    base.state.c_v = compute_cv(spec.kappa, q, base.state.v);

    const DiagnosticsReport healthy = run_invariant_suite(spec, cfg, op3(), base);
    CHECK(healthy.flags.normalization);
    CHECK(healthy.flags.d0_negative);

    SUBCASE("shift without refreshing c_v breaks normalization") {
        SolveResult bad = base;
        for (double& x : bad.state.v.values) x += 1.0;
        const DiagnosticsReport rep = run_invariant_suite(spec, cfg, op3(), bad);
        CHECK_FALSE(rep.flags.normalization);
        CHECK(rep.normalization_error > 1.0);
    }
    SUBCASE("positive d0 flips the sign flag") {
        SolveResult bad = base;
        bad.state.d0 = +1.0;
        const DiagnosticsReport rep = run_invariant_suite(spec, cfg, op3(), bad);
        CHECK_FALSE(rep.flags.d0_negative);
    }
}

TEST_CASE("invariant suite on a converged run: every flag passes") {
    ProblemSpec spec;
    spec.n = 3;
    spec.kappa = 0.5 * op3().grid().constants().lambda1;
    spec.Q = QProfile::gaussian(1.0, 1.0);
    spec.variant = Variant::Thm2;
    SolverConfig cfg;
    const SolveResult res = solve(spec, cfg, op3());
    REQUIRE(res.status == SolveStatus::Converged);
    const DiagnosticsReport rep = run_invariant_suite(spec, cfg, op3(), res);
    CHECK(rep.flags.all_hard());
    CHECK(rep.flags.d0_fd_consistent);
    CHECK(rep.laplacian_bound_violations == 0);
    CHECK(rep.asymptotic.target == doctest::Approx(-1.0).epsilon(1e-13));
    CHECK(std::abs(rep.asymptotic.slope - rep.asymptotic.target) <= 0.02);
    REQUIRE(rep.pohozaev.has_value());
    CHECK(rep.pohozaev->residual <= 5e-2);
}

TEST_CASE("diagnostics report serializes to the stable schema") {
    DiagnosticsReport rep;
    rep.normalization_error = std::nan("");
    rep.tail_bound = 1.0 / 0.0;
    const nlohmann::json j = to_json(rep);
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("normalization_error").is_null());  // NaN maps to null
    CHECK(j.at("tail_bound").is_null());
    CHECK(j.at("pohozaev").is_null());
    for (const char* key :
         {"status", "fixed_point_residual", "asymptotic", "laplacian_bound_violations",
          "flags", "c_v", "a_v", "d0", "sup_w", "total_curvature"})
        CHECK(j.contains(key));
    const auto& flags = j.at("flags");
    for (const char* key : {"d0_negative", "av_zero", "b1_ordering", "normalization",
                            "residual_matches", "deltav_bound", "tail"})
        CHECK(flags.contains(key));
}
