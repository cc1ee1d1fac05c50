#pragma once

#include "qcurv/fixed_point.hpp"

#include <string>
#include <vector>

namespace qcurv {

struct SolverConfig {
    double theta = 0.3;          ///< damping, in (0, 1]
    double tol = 1e-8;           ///< sup-norm convergence tolerance on r <= r_max/2
    int max_iter = 2000;         ///< per continuation stage
    int continuation_steps = 8;  ///< geometric kappa stages from kappa/8 to kappa
    double blowup_sup = 50.0;    ///< threshold on sup of w = v + c_v + (1/n) log t
    double t = 1.0;              ///< Leray-Schauder homotopy parameter

    void validate() const;
};

enum class SolveStatus { Converged, NotConverged, BlowUp, AdmissibilityError };
std::string to_string(SolveStatus s);

struct DampingEvent {
    int stage = 0;
    int iteration = 0;
    double theta = 0.0;  ///< value after halving
};

struct SolveResult {
    SolveStatus status = SolveStatus::NotConverged;
    IterationState state;                 ///< final iterate
    RadialFunction u;                     ///< assembled solution (Converged only)
    std::vector<double> residual_history; ///< concatenated over stages
    std::vector<int> stage_iterations;
    std::vector<DampingEvent> damping_schedule;
    std::vector<double> kappa_stages;
    double tail_bound = 0.0;
    double sup_w = 0.0;
};

/// Damped Picard iteration v <- (1-theta) v + theta t T(v) with geometric
/// continuation in kappa; d0 follows the same affine update. The residual is
/// sup_{r <= r_max/2} |t T(v) - v|.
SolveResult solve(const ProblemSpec& spec, const SolverConfig& cfg, const KernelOperator& op);

/// Thm1: u = P + v + c_v - (1 + A_v) r^4; Thm2: u = v + c_v.
/// Requires a converged state.
RadialFunction assemble_solution(const ProblemSpec& spec, const IterationState& state);

/// ∫ Q e^{nu} dx against the grid quadrature.
double total_curvature(const ProblemSpec& spec, const RadialFunction& u);

} // namespace qcurv
