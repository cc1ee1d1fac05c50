#pragma once

#include "qcurv/grid.hpp"
#include "qcurv/kernel.hpp"

#include <limits>
#include <memory>
#include <vector>

namespace qcurv {

enum class Variant { Thm1, Thm2 };

/// Radial curvature profile Q.
struct QProfile {
    enum class Kind { Constant, Gaussian, Quartic, Tabulated };
    Kind kind = Kind::Constant;
    double value = 1.0;   ///< constant profiles
    double delta = 1.0;   ///< amplitude of delta e^{-lambda r^2} / delta e^{-lambda r^4}
    double lambda = 1.0;  ///< decay rate
    std::vector<double> table_r, table_q;  ///< tabulated profile (0 beyond the table)
    std::shared_ptr<const MonotoneCubic> table_interp;

    static QProfile constant(double c) {
        QProfile p;
        p.kind = Kind::Constant;
        p.value = c;
        return p;
    }
    static QProfile gaussian(double d, double l) {
        QProfile p;
        p.kind = Kind::Gaussian;
        p.delta = d;
        p.lambda = l;
        return p;
    }
    static QProfile quartic(double d, double l) {
        QProfile p = gaussian(d, l);
        p.kind = Kind::Quartic;
        return p;
    }
    static QProfile tabulated(std::vector<double> r, std::vector<double> q);

    double operator()(double r) const;
    /// log Q(r); -inf where Q vanishes.
    double log_at(double r) const;
};

/// The full statement of one solve.
struct ProblemSpec {
    int n = 5;
    double kappa = 0.0;
    QProfile Q;
    std::vector<double> P_coeffs;  ///< P(r) = sum_j a_j r^{2j}, 2j <= n-1
    Variant variant = Variant::Thm1;

    double P(double r) const;

    /// Hard preconditions: dimension/variant compatibility, kappa > 0,
    /// polynomial degree, Q(0) > 0 and Q >= 0 on the grid, sup Q e^{nP}
    /// finite for Thm1. Throws std::invalid_argument on violation.
    void validate(const RadialGrid& grid) const;

    /// Thm2 decay hypothesis proxy: Q e^{lambda r^2} representable on the grid
    /// for lambda in {1, 2, 4}. Advisory; the runtime tail bound is the gate.
    bool thm2_admissible(const RadialGrid& grid) const;
};

struct IterationState {
    RadialFunction v;
    double c_v = 0.0;
    double A_v = 0.0;
    double d0 = 0.0;  ///< analytic Δv(0)
    double t = 1.0;
    double kappa_current = 0.0;
    double residual = std::numeric_limits<double>::infinity();
};

/// One application of the operator T (before the Leray-Schauder t factor and
/// before damping).
struct TStepResult {
    RadialFunction v_out;
    double d0_out = 0.0;     ///< analytic Δ(Tv)(0)
    double c_v = 0.0;        ///< normalization constant of the input v
    double A_v = 0.0;        ///< A_v of the input v (Thm1; 0 for Thm2)
    double mass = 0.0;       ///< ∫ K e^{nv} dx before normalization
    double tail_bound = 0.0; ///< density tail estimate beyond r_max
    bool blowup = false;     ///< non-finite normalization or density
};

/// c_v = (1/n) log(kappa / ∫ K e^{nv} dx) against the grid quadrature.
/// Throws std::runtime_error on zero or non-finite mass.
double compute_cv(double kappa_target, const RadialFunction& K_profile, const RadialFunction& v);
double compute_cv(const ProblemSpec& spec, const RadialFunction& v,
                  const RadialFunction& K_profile);

/// max{0, max over nodes r_j >= 10 of (v(r_j) - v(0)) / r_j^4}.
/// Throws when the grid does not extend beyond r = 10.
double compute_Av(const RadialFunction& v);

TStepResult apply_T_thm1(const ProblemSpec& spec, const KernelOperator& op,
                         const IterationState& state);
TStepResult apply_T_thm2(const ProblemSpec& spec, const KernelOperator& op,
                         const IterationState& state);
TStepResult apply_T(const ProblemSpec& spec, const KernelOperator& op,
                    const IterationState& state);

} // namespace qcurv
