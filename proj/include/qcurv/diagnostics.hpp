#pragma once

#include "qcurv/solver.hpp"

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace qcurv {

/// The standard bubble u(r) = log(2 lambda / (1 + lambda^2 r^2)), the radial
/// spherical solution with total curvature Lambda_1.
struct SphericalSolution {
    double lambda = 1.0;
    double u(double r) const;
    /// (n-1)! e^{n u}
    double density(int n, double r) const;
};

struct SphericalOracleReport {
    double mass = 0.0;            ///< integrate_radial with the exact power tail
    double mass_error = 0.0;      ///< relative error vs Lambda_1
    double potential_dev = 0.0;   ///< sup |pot + log(1+r^2) - const| on r <= r_max/2
    double c0 = 0.0;              ///< (1/gamma_n) ∫ log|y| f dy by grid quadrature
    double const_offset = 0.0;    ///< fitted constant minus c0
    bool pass = false;
};

/// Checks the classified solution against the assembled operator: mass vs
/// Lambda_1 (tolerance 1e-6 relative) and the log-potential representation
/// (1e-3 sup over r <= r_max/2).
SphericalOracleReport spherical_oracle(const KernelOperator& op);

struct AsymptoticFit {
    double slope = 0.0;      ///< fitted coefficient of log r
    double target = 0.0;     ///< -2 kappa / Lambda_1
    double drift = 0.0;      ///< max deviation from the fitted constant
    double intercept = 0.0;
};

/// Least-squares slope of g against log r over nodes in [r_max/4, r_max/2],
/// where g removes the variant's polynomial correction from v.
AsymptoticFit asymptotic_fit(const ProblemSpec& spec, const IterationState& state);

/// Fit of an arbitrary profile against log r on the same window.
AsymptoticFit fit_log_slope(const RadialFunction& g, double target);

struct PohozaevResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double residual = 0.0;         ///< |lhs - rhs| / (1 + |lhs|)
    bool grad_nonpositive = false; ///< r dK/dr <= 0 at every node
};

/// Pohozaev identity residual for a Thm2 state in dimension 3 or 4:
///   (kappa/gamma)(kappa/gamma - 2) = (1/gamma) ∫ (x·∇K) e^{nv} dx
/// with v the log-kernel potential of the final density normalized by
/// log(|y|/|x-y|), h = u - v and K = Q e^{nh}.
PohozaevResult pohozaev_residual(const ProblemSpec& spec, const KernelOperator& op,
                                 const IterationState& state);

struct ProbeReport {
    double kappa = 0.0;
    SolveStatus status = SolveStatus::NotConverged;
    PohozaevResult pohozaev;
    bool obstruction_consistent = false;  ///< lhs > 0 while r dK/dr <= 0 everywhere
};

/// Runs the solver on Q = delta e^{-lambda r^2} (Thm2) and reports the
/// Pohozaev sign diagnostic for the final iterate.
ProbeReport nonexistence_probe(int n, double delta, double lambda, double kappa,
                               const SolverConfig& cfg, const KernelOperator& op);

struct InvariantFlags {
    bool d0_negative = false;
    bool av_zero = false;        ///< Thm1 only; true by definition for Thm2
    bool b1_ordering = false;    ///< Thm1 only; true by definition for Thm2
    bool normalization = false;
    bool residual_matches = false;
    bool residual_within_tol = false;
    bool deltav_bound = false;
    bool tail = false;
    bool d0_fd_consistent = false;

    bool all_hard() const {
        return d0_negative && av_zero && b1_ordering && normalization && residual_matches &&
               residual_within_tol && deltav_bound && tail;
    }
};

struct DiagnosticsReport {
    int schema_version = 1;
    SolveStatus status = SolveStatus::NotConverged;
    double normalization_error = 0.0;
    double fixed_point_residual = 0.0;
    double reported_residual = 0.0;
    AsymptoticFit asymptotic;
    std::optional<PohozaevResult> pohozaev;
    int laplacian_bound_violations = 0;
    double laplacian_bound_max_excess = 0.0;
    double tail_bound = 0.0;
    double c_v = 0.0, a_v = 0.0, d0 = 0.0, d0_fd = 0.0, sup_w = 0.0;
    double total_curvature_value = 0.0;
    InvariantFlags flags;
};

/// Evaluates every runtime invariant of the operator and solver modules on a
/// solve result, recomputing from scratch where the contract demands it.
DiagnosticsReport run_invariant_suite(const ProblemSpec& spec, const SolverConfig& cfg,
                                      const KernelOperator& op, const SolveResult& result);

nlohmann::json to_json(const DiagnosticsReport& rep);
nlohmann::json to_json(const SolveResult& res);

} // namespace qcurv
