#include "qcurv/fixed_point.hpp"

#include "qcurv/simd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qcurv {

namespace {

constexpr double kLogDblMax = 709.0;

/// log of ∫_R^∞ s^{n-1} e^{-rate s^power} ds, power in {2, 4}; -inf when the
/// integral underflows, +inf when rate <= 0.
double log_tail_line_integral(int n, double R, double rate, int power) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    const double sg = static_cast<double>(n) / power;
    double x = rate;
    for (int i = 0; i < power; ++i) x *= R;  // rate * R^power
    if (x < 30.0) {
        // small-exponent regime: direct incomplete gamma via the series/CF
        // (no overflow concerns here)
        double term = 1.0 / sg, sum = term;  // lower series
        for (int k = 1; k < 500; ++k) {
            term *= x / (sg + k);
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        const double lower = std::exp(sg * std::log(x) - x) * sum;
        const double upper = std::tgamma(sg) - lower;
        return std::log(std::max(upper, 1e-300)) - sg * std::log(rate) - std::log(double(power));
    }
    // Γ(sg, x) ~ e^{-x} x^{sg-1} (1 + (sg-1)/x + (sg-1)(sg-2)/x^2)
    const double corr = 1.0 + (sg - 1.0) / x + (sg - 1.0) * (sg - 2.0) / (x * x);
    const double log_gamma_upper = -x + (sg - 1.0) * std::log(x) + std::log(std::max(corr, 1e-300));
    return log_gamma_upper - sg * std::log(rate) - std::log(double(power));
}

double exp_or_saturate(double logv) {
    if (logv > kLogDblMax) return std::numeric_limits<double>::infinity();
    if (logv < -745.0) return 0.0;
    return std::exp(logv);
}

} // namespace

QProfile QProfile::tabulated(std::vector<double> r, std::vector<double> q) {
    if (r.size() != q.size() || r.size() < 2)
        throw std::invalid_argument("QProfile: tabulated profile needs >= 2 matching samples");
    for (std::size_t i = 0; i + 1 < r.size(); ++i)
        if (!(r[i] < r[i + 1]))
            throw std::invalid_argument("QProfile: tabulated radii must increase");
    if (r.front() != 0.0)
        throw std::invalid_argument("QProfile: tabulated profile must start at r = 0");
    QProfile p;
    p.kind = Kind::Tabulated;
    p.table_r = std::move(r);
    p.table_q = std::move(q);
    p.table_interp =
        std::make_shared<MonotoneCubic>(p.table_r, p.table_q, /*even_at_zero=*/true);
    return p;
}

double QProfile::operator()(double r) const {
    switch (kind) {
        case Kind::Constant:
            return value;
        case Kind::Gaussian:
            return delta * std::exp(-lambda * r * r);
        case Kind::Quartic:
            return delta * exp_or_saturate(-lambda * r * r * r * r);
        case Kind::Tabulated: {
            if (r > table_r.back()) return 0.0;
            return std::max(0.0, (*table_interp)(r));
        }
    }
    return 0.0;
}

double QProfile::log_at(double r) const {
    switch (kind) {
        case Kind::Constant:
            return std::log(value);
        case Kind::Gaussian:
            return std::log(delta) - lambda * r * r;
        case Kind::Quartic:
            return std::log(delta) - lambda * r * r * r * r;
        case Kind::Tabulated: {
            const double q = (*this)(r);
            return q > 0.0 ? std::log(q) : -std::numeric_limits<double>::infinity();
        }
    }
    return -std::numeric_limits<double>::infinity();
}

double ProblemSpec::P(double r) const {
    const double r2 = r * r;
    double acc = 0.0, pw = 1.0;
    for (double a : P_coeffs) {
        acc += a * pw;
        pw *= r2;
    }
    return acc;
}

void ProblemSpec::validate(const RadialGrid& grid) const {
    if (n < 3) throw std::invalid_argument("ProblemSpec: n must be >= 3");
    if (n != grid.dimension()) throw std::invalid_argument("ProblemSpec: grid dimension mismatch");
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw std::invalid_argument("ProblemSpec: kappa must be positive and finite");
    if (variant == Variant::Thm1 && n < 5)
        throw std::invalid_argument("ProblemSpec: the Thm1 variant requires n >= 5");
    if (!P_coeffs.empty() && 2 * (static_cast<int>(P_coeffs.size()) - 1) > n - 1)
        throw std::invalid_argument("ProblemSpec: P degree exceeds n-1");
    if (!(Q(0.0) > 0.0)) throw std::invalid_argument("ProblemSpec: requires Q(0) > 0");
    double sup_qp = 0.0;
    for (double r : grid.nodes()) {
        const double q = Q(r);
        if (q < 0.0 || !std::isfinite(q))
            throw std::invalid_argument("ProblemSpec: Q must be finite and >= 0 on the grid");
        if (variant == Variant::Thm1) {
            const double qp = q * std::exp(n * P(r));
            if (!std::isfinite(qp))
                throw std::invalid_argument("ProblemSpec: sup Q e^{nP} not finite on the grid");
            sup_qp = std::max(sup_qp, qp);
        }
    }
    (void)sup_qp;
}

bool ProblemSpec::thm2_admissible(const RadialGrid& grid) const {
    for (double lam : {1.0, 2.0, 4.0}) {
        for (double r : grid.nodes()) {
            const double lt = Q.log_at(r);
            if (lt == -std::numeric_limits<double>::infinity()) continue;
            if (lt + lam * r * r > kLogDblMax) return false;
        }
    }
    return true;
}

double compute_cv(double kappa_target, const RadialFunction& K_profile, const RadialFunction& v) {
    if (K_profile.grid.get() != v.grid.get())
        throw std::invalid_argument("compute_cv: profiles on different grids");
    const auto& w = v.grid->volume_weights();
    double mass = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j)
        mass += w[j] * K_profile[j] * std::exp(v.grid->dimension() * v[j]);
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw std::runtime_error("compute_cv: normalization error (zero or non-finite mass)");
    return (std::log(kappa_target) - std::log(mass)) / v.grid->dimension();
}

double compute_cv(const ProblemSpec& spec, const RadialFunction& v,
                  const RadialFunction& K_profile) {
    return compute_cv(spec.kappa, K_profile, v);
}

double compute_Av(const RadialFunction& v) {
    const RadialGrid& g = *v.grid;
    if (g.r_max() <= 10.0)
        throw std::invalid_argument("compute_Av: grid must extend beyond r = 10");
    const std::size_t j0 = g.first_index_at_or_above(10.0);
    const double v0 = v[0];
    double sup = 0.0;
    for (std::size_t j = j0; j < g.size(); ++j) {
        const double r = g.nodes()[j];
        sup = std::max(sup, (v[j] - v0) / (r * r * r * r));
    }
    return sup;
}

namespace {

struct DensityBuild {
    std::vector<double> f;  // K e^{n(v + c_v)}
    double c_v = 0.0;
    double mass = 0.0;
    bool blowup = false;
};

/// Normalized density K e^{n(v+c_v)} with total mass kappa against the grid
/// quadrature. Built through log K so that far-field underflow of K against
/// overflow of e^{nv} cannot produce NaN; the c_v shift is applied as the
/// exact mass ratio.
DensityBuild build_density(const RadialGrid& grid, const std::vector<double>& logK,
                           const RadialFunction& v, double kappa, int n) {
    DensityBuild out;
    const std::size_t N = grid.size();
    std::vector<double> env(N);
    for (std::size_t j = 0; j < N; ++j) {
        const double lf = logK[j] + n * v[j];
        env[j] = (lf < -745.0) ? 0.0 : std::exp(lf);  // exp(>709) = inf, caught below
        if (std::isnan(env[j])) {
            out.blowup = true;
            return out;
        }
    }
    out.mass = simd::dot(grid.volume_weights().data(), env.data(), N);
    if (!(out.mass > 0.0) || !std::isfinite(out.mass)) {
        out.blowup = true;
        return out;
    }
    out.c_v = (std::log(kappa) - std::log(out.mass)) / n;
    const double ratio = kappa / out.mass;
    out.f = std::move(env);
    for (double& x : out.f) x *= ratio;
    return out;
}

TStepResult apply_T_impl(const ProblemSpec& spec, const KernelOperator& op,
                         const IterationState& state) {
    const RadialGrid& grid = op.grid();
    const auto& r = grid.nodes();
    const std::size_t N = grid.size();
    const int n = spec.n;
    const bool thm1 = spec.variant == Variant::Thm1;

    TStepResult res;
    res.A_v = thm1 ? compute_Av(state.v) : 0.0;

    std::vector<double> logK(N);
    if (thm1) {
        const double damp = n * (1.0 + res.A_v);
        for (std::size_t j = 0; j < N; ++j) {
            const double r4 = r[j] * r[j] * r[j] * r[j];
            logK[j] = spec.Q.log_at(r[j]) + n * spec.P(r[j]) - damp * r4;
        }
    } else {
        for (std::size_t j = 0; j < N; ++j) logK[j] = spec.Q.log_at(r[j]);
    }

    DensityBuild d = build_density(grid, logK, state.v, state.kappa_current, n);
    if (d.blowup) {
        res.blowup = true;
        res.c_v = std::numeric_limits<double>::quiet_NaN();
        return res;
    }
    res.c_v = d.c_v;
    res.mass = d.mass;

    res.v_out = RadialFunction(op.grid_ptr());
    op.apply(d.f, res.v_out.values);

    const double amp = std::abs(state.d0) / (2.0 * n);
    for (std::size_t j = 0; j < N; ++j) {
        const double r2 = r[j] * r[j];
        res.v_out[j] += thm1 ? amp * (r2 - r2 * r2) : amp * r2;
    }
    res.d0_out = op.lap0(d.f) + std::abs(state.d0);

    // density tail beyond r_max: Thm1 uses the v + P_v <= v(0) - r^4 envelope,
    // Thm2 the monotonicity of v - (t/2n)|d0| r^2
    const double om = grid.constants().omega_nm1;
    const double R = grid.r_max();
    if (thm1) {
        double sup_qp = 0.0;
        for (std::size_t j = 0; j < N; ++j)
            sup_qp = std::max(sup_qp, spec.Q(r[j]) * exp_or_saturate(n * spec.P(r[j])));
        const double log_coeff = std::log(std::max(sup_qp, 1e-300)) + n * (state.v[0] + d.c_v);
        res.tail_bound = exp_or_saturate(log_coeff + std::log(om) +
                                         log_tail_line_integral(n, R, double(n), 4));
    } else {
        const double growth = 0.5 * state.t * std::abs(state.d0);  // t|d0|/2 in the r^2 exponent
        const double log_fR = spec.Q.log_at(R) + n * (state.v[N - 1] + d.c_v);
        if (log_fR == -std::numeric_limits<double>::infinity()) {
            res.tail_bound = 0.0;
        } else {
            double rate, log_int;
            switch (spec.Q.kind) {
                case QProfile::Kind::Gaussian:
                    rate = spec.Q.lambda - growth;
                    log_int = rate * R * R + log_tail_line_integral(n, R, rate, 2);
                    break;
                case QProfile::Kind::Quartic:
                    rate = spec.Q.lambda - growth / (2.0 * R * R);
                    log_int = rate * R * R * R * R + log_tail_line_integral(n, R, rate, 4);
                    break;
                case QProfile::Kind::Constant:
                    // no decay at all: the full-space density is not integrable
                    res.tail_bound = std::numeric_limits<double>::infinity();
                    return res;
                case QProfile::Kind::Tabulated:
                default:
                    // profile vanishes beyond its table
                    res.tail_bound = 0.0;
                    return res;
            }
            res.tail_bound = exp_or_saturate(log_fR + std::log(om) + log_int);
        }
    }
    return res;
}

} // namespace

TStepResult apply_T_thm1(const ProblemSpec& spec, const KernelOperator& op,
                         const IterationState& state) {
    if (spec.variant != Variant::Thm1)
        throw std::invalid_argument("apply_T_thm1: spec is not a Thm1 problem");
    return apply_T_impl(spec, op, state);
}

TStepResult apply_T_thm2(const ProblemSpec& spec, const KernelOperator& op,
                         const IterationState& state) {
    if (spec.variant != Variant::Thm2)
        throw std::invalid_argument("apply_T_thm2: spec is not a Thm2 problem");
    return apply_T_impl(spec, op, state);
}

TStepResult apply_T(const ProblemSpec& spec, const KernelOperator& op,
                    const IterationState& state) {
    return apply_T_impl(spec, op, state);
}

} // namespace qcurv
