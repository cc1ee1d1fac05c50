#pragma once

#include "qcurv/fixed_point.hpp"
#include "qcurv/solver.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qcurv {

/// Everything one run needs: problem, grid and solver parameters plus the
/// probe sweep. Parsed from a single TOML document; round-trips exactly
/// through to_toml()/parse_string().
struct RunConfig {
    // [problem] — n, kappa (or kappa_factor), variant and the Q profile are
    // required; everything else has a default.
    int n = 0;
    std::optional<double> kappa;         ///< absolute target total curvature
    std::optional<double> kappa_factor;  ///< alternatively, multiple of Lambda_1(n)
    std::string variant;                 ///< "thm1" | "thm2"
    std::string mode = "solve";          ///< "solve" | "probe"
    std::string q_type;                  ///< "constant" | "gaussian" | "quartic" | "table"
    double q_value = 1.0;
    double q_delta = 1.0;
    double q_lambda = 1.0;
    std::string q_table;  ///< CSV path for tabulated profiles
    std::vector<double> p_coeffs;

    // [grid]
    int cells = 2048;
    double r_max = 100.0;
    double grading = 2.0;

    // [solver]
    double theta = 0.3;
    double tol = 1e-8;
    int max_iter = 2000;
    int continuation_steps = 8;
    double blowup_sup = 50.0;
    double t = 1.0;

    // [probe]
    std::vector<double> kappa_list;     ///< absolute sweep values
    std::vector<double> kappa_factors;  ///< sweep values as multiples of Lambda_1

    bool operator==(const RunConfig&) const = default;

    static RunConfig parse_string(const std::string& text);
    static RunConfig parse_file(const std::string& path);
    std::string to_toml() const;

    double resolved_kappa() const;          ///< kappa or kappa_factor * Lambda_1(n)
    std::vector<double> resolved_sweep() const;
    QProfile q_profile() const;
    ProblemSpec problem() const;
    SolverConfig solver() const;
};

} // namespace qcurv
