#include "qcurv/config.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <doctest.h>

using namespace qcurv;

namespace {

const char* kMinimal = R"(
# minimal solve configuration
[problem]
n = 5
kappa_factor = 2.0
variant = "thm1"
q_type = "constant"
q_value = 24
)";

} // namespace

TEST_CASE("minimal config parses with defaults") {
    const RunConfig c = RunConfig::parse_string(kMinimal);
    CHECK(c.n == 5);
    CHECK(c.kappa_factor == 2.0);
    CHECK_FALSE(c.kappa.has_value());
    CHECK(c.variant == "thm1");
    CHECK(c.q_type == "constant");
    CHECK(c.q_value == 24.0);
    CHECK(c.cells == 2048);
    CHECK(c.r_max == 100.0);
    CHECK(c.grading == 2.0);
    CHECK(c.theta == 0.3);
    CHECK(c.tol == 1e-8);
    CHECK(c.max_iter == 2000);
    CHECK(c.continuation_steps == 8);
    CHECK(c.blowup_sup == 50.0);
    CHECK(c.t == 1.0);
    CHECK(c.mode == "solve");
    CHECK(c.resolved_kappa() == doctest::Approx(2.0 * lambda1(5)).epsilon(1e-15));
}

TEST_CASE("configs round-trip exactly") {
    RunConfig c = RunConfig::parse_string(kMinimal);
    c.p_coeffs = {0.5, -0.037119823848123471};
    c.tol = 3.0303e-9;
    c.kappa_list = {1.0, 2.5, M_PI};
    CHECK(RunConfig::parse_string(c.to_toml()) == c);

    RunConfig d;
    d.n = 3;
    d.kappa = 79.0;
    d.variant = "thm2";
    d.mode = "probe";
    d.q_type = "gaussian";
    d.q_delta = 1.0 / 3.0;
    d.q_lambda = 0.123456789012345678;
    d.kappa_factors = {0.5, 1.0, 1.5};
    CHECK(RunConfig::parse_string(d.to_toml()) == d);
}

TEST_CASE("config validation failures") {
    CHECK_THROWS_AS(RunConfig::parse_string("[problem]\nkappa = 1.0\n"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::parse_string("[problem]\nn = 3\nvariant = \"thm2\"\nq_type = \"constant\"\n"),
                    std::invalid_argument);  // no kappa
    CHECK_THROWS_AS(
        RunConfig::parse_string(
            "[problem]\nn = 3\nkappa = 1\nkappa_factor = 1\nvariant = \"thm2\"\nq_type = \"constant\"\n"),
        std::invalid_argument);  // both kappa forms
    CHECK_THROWS_AS(
        RunConfig::parse_string("[problem]\nn = 3\nkappa = 1\nvariant = \"thm9\"\nq_type = \"constant\"\n"),
        std::invalid_argument);
    CHECK_THROWS_AS(
        RunConfig::parse_string("[problem]\nn = 3\nkappa = 1\nvariant = \"thm2\"\nq_type = \"cubic\"\n"),
        std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::parse_string("[problem]\nn = 3\nn = 4\n"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::parse_string("[problem\nn = 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::parse_string("[problem]\nn == 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::parse_string("[problem]\nn = abc\n"), std::invalid_argument);
    CHECK_THROWS_AS(RunConfig::parse_string("[problem]\nn = 3.5\n"), std::invalid_argument);
}

TEST_CASE("comments and strings interact correctly") {
    const RunConfig c = RunConfig::parse_string(
        "[problem]\n"
        "n = 5            # dimension\n"
        "kappa = 10.0\n"
        "variant = \"thm1\"  # variant with a # in the comment\n"
        "q_type = \"constant\"\n");
    CHECK(c.variant == "thm1");
    CHECK(c.kappa == 10.0);
}

TEST_CASE("tabulated Q profile loads from csv") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "qcurv_qtable_test.csv";
    {
        std::ofstream os(path);
        os << "r,q\n0.0,2.0\n1.0,1.0\n2.0,0.5\n4.0,0.0\n";
    }
    RunConfig c = RunConfig::parse_string(kMinimal);
    c.q_type = "table";
    c.q_table = path.string();
    const QProfile q = c.q_profile();
    CHECK(q(0.0) == 2.0);
    CHECK(q(2.0) == 0.5);
    CHECK(q(10.0) == 0.0);
    fs::remove(path);
}

TEST_CASE("problem and solver conversion") {
    RunConfig c = RunConfig::parse_string(kMinimal);
    const ProblemSpec spec = c.problem();
    CHECK(spec.n == 5);
    CHECK(spec.variant == Variant::Thm1);
    CHECK(spec.kappa == doctest::Approx(2.0 * lambda1(5)).epsilon(1e-15));
    const SolverConfig scfg = c.solver();
    CHECK(scfg.theta == 0.3);
    CHECK(scfg.max_iter == 2000);
}
