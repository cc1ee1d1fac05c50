#include "qcurv/solver.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace qcurv {

void SolverConfig::validate() const {
    if (!(theta > 0.0) || theta > 1.0)
        throw std::invalid_argument("SolverConfig: theta must lie in (0, 1]");
    if (!(tol > 0.0)) throw std::invalid_argument("SolverConfig: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    if (continuation_steps < 1)
        throw std::invalid_argument("SolverConfig: continuation_steps must be >= 1");
    if (!(t > 0.0) || t > 1.0)
        throw std::invalid_argument("SolverConfig: t must lie in (0, 1]");
}

std::string to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Converged: return "Converged";
        case SolveStatus::NotConverged: return "NotConverged";
        case SolveStatus::BlowUp: return "BlowUp";
        case SolveStatus::AdmissibilityError: return "AdmissibilityError";
    }
    return "Unknown";
}

SolveResult solve(const ProblemSpec& spec, const SolverConfig& cfg, const KernelOperator& op) {
    cfg.validate();
    spec.validate(op.grid());

    const RadialGrid& grid = op.grid();
    const std::size_t N = grid.size();
    const std::size_t half = grid.first_index_at_or_above(0.5 * grid.r_max());

    SolveResult out;
    out.state.v = RadialFunction(op.grid_ptr());
    out.state.d0 = 0.0;
    out.state.t = cfg.t;

    // blow-up is detected on w = v + c_v + (1/n) log t near the origin (the
    // compactness bound lives on a small ball; w grows like r^2 at infinity
    // by construction of the correction term)
    const std::size_t monitor = grid.first_index_at_or_above(1.0);

    const int S = cfg.continuation_steps;
    out.kappa_stages.resize(S);
    for (int s = 0; s < S; ++s)
        out.kappa_stages[s] =
            (S == 1) ? spec.kappa
                     : spec.kappa * std::pow(1.0 / 8.0, double(S - 1 - s) / double(S - 1));

    IterationState& st = out.state;
    TStepResult step;
    bool failed = false;

    for (int s = 0; s < S && !failed; ++s) {
        st.kappa_current = out.kappa_stages[s];
        double theta = cfg.theta;
        std::deque<double> window;  // residuals of the last few iterations
        bool stage_converged = false;
        int iters = 0;

        for (int it = 1; it <= cfg.max_iter; ++it) {
            iters = it;
            step = apply_T(spec, op, st);
            if (step.blowup) {
                out.status = SolveStatus::BlowUp;
                failed = true;
                break;
            }
            st.c_v = step.c_v;
            st.A_v = step.A_v;
            out.tail_bound = step.tail_bound;

            double sup_v = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j <= std::min(monitor, N - 1); ++j)
                sup_v = std::max(sup_v, st.v[j]);
            out.sup_w = sup_v + step.c_v + std::log(cfg.t) / spec.n;
            if (out.sup_w > cfg.blowup_sup) {
                out.status = SolveStatus::BlowUp;
                failed = true;
                break;
            }
            if (step.tail_bound > 1e-6 * st.kappa_current) {
                out.status = SolveStatus::AdmissibilityError;
                failed = true;
                break;
            }

            double res = 0.0;
            for (std::size_t j = 0; j < std::min(half + 1, N); ++j)
                res = std::max(res, std::abs(cfg.t * step.v_out[j] - st.v[j]));
            st.residual = res;
            out.residual_history.push_back(res);

            if (res <= cfg.tol) {
                stage_converged = true;
                break;
            }

            // Halve the damping when the residual exceeds everything in a
            // trailing 50-iteration window, i.e. when its envelope grows.
            // Strictly-consecutive-increase triggers stay inert under
            // oscillatory divergence, while short-window net-growth triggers
            // misfire on stage-start transients and on decaying oscillations;
            // the envelope comparison handles all three. Re-arms after firing.
            if (window.size() >= 50) {
                double wmax = 0.0;
                for (double x : window) wmax = std::max(wmax, x);
                if (res > wmax && theta > 0.05) {
                    theta = std::max(0.5 * theta, 0.05);
                    out.damping_schedule.push_back({s + 1, it, theta});
                    window.clear();
                } else {
                    window.pop_front();
                }
            }
            window.push_back(res);

            for (std::size_t j = 0; j < N; ++j)
                st.v[j] = (1.0 - theta) * st.v[j] + theta * cfg.t * step.v_out[j];
            st.d0 = (1.0 - theta) * st.d0 + theta * cfg.t * step.d0_out;
        }
        out.stage_iterations.push_back(iters);

        if (failed) break;
        if (!stage_converged) {
            // refresh c_v/A_v/residual so the reported state is self-consistent
            step = apply_T(spec, op, st);
            if (!step.blowup) {
                st.c_v = step.c_v;
                st.A_v = step.A_v;
                double res = 0.0;
                for (std::size_t j = 0; j < std::min(half + 1, N); ++j)
                    res = std::max(res, std::abs(cfg.t * step.v_out[j] - st.v[j]));
                st.residual = res;
            }
            out.status = SolveStatus::NotConverged;
            failed = true;
        }
    }

    if (!failed) {
        const bool d0_ok = st.d0 < 0.0;
        const bool av_ok = spec.variant != Variant::Thm1 || st.A_v <= 1e-8;
        if (st.residual <= cfg.tol && d0_ok && av_ok) {
            out.status = SolveStatus::Converged;
            out.u = assemble_solution(spec, st);
        } else {
            out.status = SolveStatus::NotConverged;
        }
    }
    return out;
}

RadialFunction assemble_solution(const ProblemSpec& spec, const IterationState& state) {
    if (!(state.residual <= 1e-4))
        throw std::logic_error("assemble_solution: state has not converged");
    const RadialGrid& grid = *state.v.grid;
    RadialFunction u(state.v.grid);
    const auto& r = grid.nodes();
    if (spec.variant == Variant::Thm1) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const double r4 = r[j] * r[j] * r[j] * r[j];
            u[j] = spec.P(r[j]) + state.v[j] + state.c_v - (1.0 + state.A_v) * r4;
        }
    } else {
        for (std::size_t j = 0; j < grid.size(); ++j) u[j] = state.v[j] + state.c_v;
    }
    return u;
}

double total_curvature(const ProblemSpec& spec, const RadialFunction& u) {
    const RadialGrid& grid = *u.grid;
    const auto& w = grid.volume_weights();
    double acc = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        // through log space: Q underflow against e^{nu} overflow is a clean 0
        const double lf = spec.Q.log_at(grid.nodes()[j]) + spec.n * u[j];
        if (lf >= -745.0) acc += w[j] * std::exp(lf);
    }
    return acc;
}

} // namespace qcurv
