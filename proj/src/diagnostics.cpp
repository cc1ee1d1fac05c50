#include "qcurv/diagnostics.hpp"

#include "qcurv/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qcurv {

double SphericalSolution::u(double r) const {
    return std::log(2.0 * lambda) - std::log1p(lambda * lambda * r * r);
}

double SphericalSolution::density(int n, double r) const {
    return factorial(n - 1) * std::exp(n * u(r));
}

SphericalOracleReport spherical_oracle(const KernelOperator& op) {
    const RadialGrid& grid = op.grid();
    const int n = grid.dimension();
    const DimensionalConstants& C = grid.constants();
    const SphericalSolution sph{1.0};

    RadialFunction f = RadialFunction::sample(op.grid_ptr(),
                                              [&](double r) { return sph.density(n, r); });

    SphericalOracleReport rep;
    // density <= (n-1)! 2^n r^{-2n} beyond the grid
    const double tail_c = factorial(n - 1) * std::pow(2.0, n);
    const IntegralResult mass = integrate_radial(f, TailModel::power(tail_c, 2.0 * n));
    rep.mass = mass.value;
    rep.mass_error = std::abs(mass.value - C.lambda1) / C.lambda1;

    RadialFunction pot = op.apply(f);
    const auto& w = grid.volume_weights();
    const auto& r = grid.nodes();
    double c0 = 0.0;
    for (std::size_t j = 1; j < grid.size(); ++j) c0 += w[j] * f[j] * std::log(r[j]);
    rep.c0 = c0 / C.gamma_n;

    const std::size_t half = grid.first_index_at_or_above(0.5 * grid.r_max());
    double mean = 0.0;
    std::size_t count = 0;
    for (std::size_t j = 0; j <= std::min(half, grid.size() - 1); ++j, ++count)
        mean += pot[j] + std::log1p(r[j] * r[j]);
    mean /= static_cast<double>(count);
    double dev = 0.0;
    for (std::size_t j = 0; j < count; ++j)
        dev = std::max(dev, std::abs(pot[j] + std::log1p(r[j] * r[j]) - mean));
    rep.potential_dev = dev;
    rep.const_offset = std::abs(mean - rep.c0);
    rep.pass = rep.mass_error <= 1e-6 && rep.potential_dev <= 1e-3 && rep.const_offset <= 1e-3;
    return rep;
}

AsymptoticFit fit_log_slope(const RadialFunction& g, double target) {
    const RadialGrid& grid = *g.grid;
    const double lo = 0.25 * grid.r_max(), hi = 0.5 * grid.r_max();
    const auto& r = grid.nodes();
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < grid.size(); ++j)
        if (r[j] >= lo && r[j] <= hi) {
            xs.push_back(std::log(r[j]));
            ys.push_back(g[j]);
        }
    if (xs.size() < 8)
        throw std::invalid_argument("fit_log_slope: fit window holds fewer than 8 nodes");
    const std::size_t m = xs.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    AsymptoticFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.target = target;
    double mean_res = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean_res += ys[i] - fit.slope * xs[i];
    mean_res /= m;
    for (std::size_t i = 0; i < m; ++i)
        fit.drift = std::max(fit.drift, std::abs(ys[i] - fit.slope * xs[i] - mean_res));
    return fit;
}

AsymptoticFit asymptotic_fit(const ProblemSpec& spec, const IterationState& state) {
    const RadialGrid& grid = *state.v.grid;
    const auto& r = grid.nodes();
    RadialFunction g(state.v.grid);
    const double d0 = state.d0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double r2 = r[j] * r[j];
        if (spec.variant == Variant::Thm1)
            g[j] = state.v[j] - d0 / (2.0 * spec.n) * (r2 * r2 - r2);
        else
            g[j] = state.v[j] - std::abs(d0) / (2.0 * spec.n) * r2;
    }
    const double target = -2.0 * state.kappa_current / grid.constants().lambda1;
    return fit_log_slope(g, target);
}

namespace {

/// Q(r) e^{n x} through log space: underflow goes to 0 instead of 0 * inf.
double density_value(const QProfile& Q, int n, double r, double x) {
    const double lf = Q.log_at(r) + n * x;
    if (lf < -745.0) return 0.0;
    return std::exp(std::min(lf, 709.0));
}

/// Δv(0) estimated independently of the analytic propagation: least-squares
/// fit of v - v(0) against {r^2, r^4, r^6} over the near-origin window.
/// Differentiating the discrete potential at the origin-clustered nodes
/// amplifies quadrature noise by 1/r_1^2, so a finite window is used instead
/// of the tightest stencil.
double d0_curvature_fit(const RadialFunction& v) {
    const RadialGrid& g = *v.grid;
    const auto& r = g.nodes();
    std::size_t hi = g.first_index_at_or_above(0.15);
    hi = std::max<std::size_t>(hi, 13);  // at least 12 interior nodes
    hi = std::min(hi, g.size() - 1);
    const double xmax = r[hi] * r[hi];

    double G[3][3] = {};
    double b[3] = {};
    for (std::size_t j = 1; j <= hi; ++j) {
        const double x = r[j] * r[j] / xmax;  // scaled for conditioning
        const double phi[3] = {x, x * x, x * x * x};
        const double y = v[j] - v[0];
        for (int a = 0; a < 3; ++a) {
            b[a] += phi[a] * y;
            for (int c = 0; c < 3; ++c) G[a][c] += phi[a] * phi[c];
        }
    }
    // 3x3 Gaussian elimination with partial pivoting
    int idx[3] = {0, 1, 2};
    for (int k = 0; k < 3; ++k) {
        int piv = k;
        for (int i = k + 1; i < 3; ++i)
            if (std::abs(G[idx[i]][k]) > std::abs(G[idx[piv]][k])) piv = i;
        std::swap(idx[k], idx[piv]);
        for (int i = k + 1; i < 3; ++i) {
            const double m = G[idx[i]][k] / G[idx[k]][k];
            for (int c = k; c < 3; ++c) G[idx[i]][c] -= m * G[idx[k]][c];
            b[idx[i]] -= m * b[idx[k]];
        }
    }
    double coef[3];
    for (int k = 2; k >= 0; --k) {
        double s = b[idx[k]];
        for (int c = k + 1; c < 3; ++c) s -= G[idx[k]][c] * coef[c];
        coef[k] = s / G[idx[k]][k];
    }
    const double a1 = coef[0] / xmax;  // coefficient of r^2
    return 2.0 * g.dimension() * a1;
}

/// d/dr by 5-point stencils; 0 at the origin (radial symmetry).
std::vector<double> radial_derivative(const RadialFunction& f) {
    const auto& r = f.grid->nodes();
    const std::size_t M = r.size();
    if (M < 5) throw std::invalid_argument("radial_derivative: need at least 5 nodes");
    std::vector<double> out(M, 0.0);
    for (std::size_t j = 1; j < M; ++j) {
        double xs[5], ys[5];
        if (j == 1) {
            xs[0] = -r[1]; xs[1] = 0.0; xs[2] = r[1]; xs[3] = r[2]; xs[4] = r[3];
            ys[0] = f[1];  ys[1] = f[0]; ys[2] = f[1]; ys[3] = f[2]; ys[4] = f[3];
        } else {
            const std::size_t lo = std::min(j - 2, M - 5);
            for (int k = 0; k < 5; ++k) {
                xs[k] = r[lo + k];
                ys[k] = f[lo + k];
            }
        }
        const auto w = fd_weights(r[j], std::span<const double>(xs, 5), 1);
        double d = 0.0;
        for (int k = 0; k < 5; ++k) d += w[k] * ys[k];
        out[j] = d;
    }
    return out;
}

} // namespace

PohozaevResult pohozaev_residual(const ProblemSpec& spec, const KernelOperator& op,
                                 const IterationState& state) {
    if (spec.n != 3 && spec.n != 4)
        throw std::invalid_argument("pohozaev_residual: identity used in dimensions 3 and 4 only");
    if (spec.variant != Variant::Thm2)
        throw std::invalid_argument("pohozaev_residual: defined for Thm2 states");

    const RadialGrid& grid = op.grid();
    const DimensionalConstants& C = grid.constants();
    const auto& r = grid.nodes();
    const auto& w = grid.volume_weights();
    const std::size_t N = grid.size();

    // u = v + c_v; f = Q e^{nu}
    RadialFunction f(op.grid_ptr());
    for (std::size_t j = 0; j < N; ++j)
        f[j] = density_value(spec.Q, spec.n, r[j], state.v[j] + state.c_v);

    RadialFunction pot = op.apply(f);
    double c0 = 0.0;
    for (std::size_t j = 1; j < N; ++j) c0 += w[j] * f[j] * std::log(r[j]);
    c0 /= C.gamma_n;

    RadialFunction v_poh(op.grid_ptr());
    RadialFunction K_poh(op.grid_ptr());
    for (std::size_t j = 0; j < N; ++j) {
        v_poh[j] = pot[j] + c0;
        const double h = (state.v[j] + state.c_v) - v_poh[j];
        K_poh[j] = density_value(spec.Q, spec.n, r[j], h);
    }

    const std::vector<double> dK = radial_derivative(K_poh);

    PohozaevResult res;
    const double kg = state.kappa_current / C.gamma_n;
    res.lhs = kg * (kg - 2.0);
    double rhs = 0.0;
    double max_rgrad = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < N; ++j) {
        const double rgrad = r[j] * dK[j];
        max_rgrad = std::max(max_rgrad, rgrad);
        rhs += w[j] * rgrad * std::exp(std::min(spec.n * v_poh[j], 709.0));
    }
    // Symmetrizing the log-kernel double integral ∫(x·∇v)Ke^{nv} gives
    // -κ²/2γ on one side and -κ - (1/n)∫(x·∇K)e^{nv} on the other, hence the
    // 2/n in front of the gradient integral (equal to 1 in the classical
    // two-dimensional Liouville identity).
    res.rhs = (2.0 / spec.n) * rhs / C.gamma_n;
    res.residual = std::abs(res.lhs - res.rhs) / (1.0 + std::abs(res.lhs));
    res.grad_nonpositive = max_rgrad <= 1e-10 * (1.0 + std::abs(max_rgrad));
    return res;
}

ProbeReport nonexistence_probe(int n, double delta, double lambda, double kappa,
                               const SolverConfig& cfg, const KernelOperator& op) {
    if (n != 3 && n != 4)
        throw std::invalid_argument("nonexistence_probe: dimensions 3 and 4 only");
    ProbeReport rep;
    rep.kappa = kappa;
    ProblemSpec spec;
    spec.n = n;
    spec.kappa = kappa;
    spec.Q = QProfile::gaussian(delta, lambda);
    spec.variant = Variant::Thm2;

    const SolveResult result = solve(spec, cfg, op);
    rep.status = result.status;
    if (result.state.v.all_finite() && std::isfinite(result.state.c_v)) {
        rep.pohozaev = pohozaev_residual(spec, op, result.state);
        // the obstruction pairs the prescribed kappa's LHS sign with the
        // gradient sign of the final iterate
        const double kg = kappa / op.grid().constants().gamma_n;
        rep.obstruction_consistent = kg * (kg - 2.0) > 0.0 && rep.pohozaev.grad_nonpositive;
    }
    return rep;
}

DiagnosticsReport run_invariant_suite(const ProblemSpec& spec, const SolverConfig& cfg,
                                      const KernelOperator& op, const SolveResult& result) {
    const RadialGrid& grid = op.grid();
    const auto& r = grid.nodes();
    const auto& w = grid.volume_weights();
    const std::size_t N = grid.size();
    const IterationState& st = result.state;
    const bool thm1 = spec.variant == Variant::Thm1;

    DiagnosticsReport rep;
    rep.status = result.status;
    rep.tail_bound = result.tail_bound;
    rep.c_v = st.c_v;
    rep.a_v = st.A_v;
    rep.d0 = st.d0;
    rep.sup_w = result.sup_w;
    rep.reported_residual = st.residual;

    if (!st.v.all_finite() || !std::isfinite(st.c_v)) {
        rep.normalization_error = std::numeric_limits<double>::quiet_NaN();
        rep.fixed_point_residual = std::numeric_limits<double>::quiet_NaN();
        return rep;
    }

    // normalization recomputed from scratch with the state's own c_v
    {
        double mass = 0.0;
        const double av = thm1 ? compute_Av(st.v) : 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            const double r4 = r[j] * r[j] * r[j] * r[j];
            double x = st.v[j] + st.c_v;
            if (thm1) x += spec.P(r[j]) - (1.0 + av) * r4;
            mass += w[j] * density_value(spec.Q, spec.n, r[j], x);
        }
        const double target = st.kappa_current > 0 ? st.kappa_current : spec.kappa;
        rep.normalization_error = std::abs(mass - target) / target;
        rep.flags.normalization = rep.normalization_error <= 1e-12;
    }

    // fixed-point residual recomputed with a fresh T application
    {
        const TStepResult step = apply_T(spec, op, st);
        if (!step.blowup) {
            const std::size_t half = grid.first_index_at_or_above(0.5 * grid.r_max());
            double res = 0.0;
            for (std::size_t j = 0; j <= std::min(half, N - 1); ++j)
                res = std::max(res, std::abs(cfg.t * step.v_out[j] - st.v[j]));
            rep.fixed_point_residual = res;
            rep.flags.residual_matches =
                std::abs(res - st.residual) <= 1e-12 * (1.0 + std::abs(st.residual));
            rep.flags.residual_within_tol = res <= cfg.tol;
        }
    }

    rep.flags.d0_negative = st.d0 < 0.0;
    rep.flags.av_zero = thm1 ? (st.A_v <= 1e-8) : true;

    // converged-profile ordering: sup_{r > 1} v <= inf_{r <= 1} v (Thm1)
    if (thm1) {
        double sup_out = -std::numeric_limits<double>::infinity();
        double inf_in = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < N; ++j) {
            if (r[j] > 1.0)
                sup_out = std::max(sup_out, st.v[j]);
            else
                inf_in = std::min(inf_in, st.v[j]);
        }
        rep.flags.b1_ordering = sup_out <= inf_in + 1e-6;
    } else {
        rep.flags.b1_ordering = true;
    }

    // discrete Laplacian bound
    {
        const RadialFunction lap = radial_laplacian(st.v);
        const double amp = cfg.t * std::abs(st.d0) / (2.0 * spec.n);
        int violations = 0;
        double max_excess = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            const double r2 = r[j] * r[j];
            const double bound = thm1 ? amp * (2.0 * spec.n - 4.0 * (spec.n + 2) * r2)
                                      : amp * 2.0 * spec.n;
            const double slack = 1e-4 * (1.0 + r2);
            const double excess = lap[j] - (bound + slack);
            if (excess > 0.0) {
                ++violations;
                max_excess = std::max(max_excess, excess);
            }
        }
        rep.laplacian_bound_violations = violations;
        rep.laplacian_bound_max_excess = max_excess;
        rep.flags.deltav_bound = violations == 0;
    }

    rep.d0_fd = d0_curvature_fit(st.v);
    rep.flags.d0_fd_consistent = std::abs(st.d0 - rep.d0_fd) <= 1e-3 * (1.0 + std::abs(st.d0));

    rep.flags.tail = result.tail_bound <= 1e-6 * (st.kappa_current > 0 ? st.kappa_current : spec.kappa);

    if (result.status == SolveStatus::Converged) {
        rep.asymptotic = asymptotic_fit(spec, st);
        rep.total_curvature_value = total_curvature(spec, result.u);
        if (!thm1 && (spec.n == 3 || spec.n == 4))
            rep.pohozaev = pohozaev_residual(spec, op, st);
    }
    return rep;
}

namespace {

nlohmann::json num_or_null(double x) {
    if (std::isfinite(x)) return x;
    return nullptr;
}

} // namespace

nlohmann::json to_json(const DiagnosticsReport& rep) {
    nlohmann::json j;
    j["schema_version"] = rep.schema_version;
    j["status"] = to_string(rep.status);
    j["normalization_error"] = num_or_null(rep.normalization_error);
    j["fixed_point_residual"] = num_or_null(rep.fixed_point_residual);
    j["reported_residual"] = num_or_null(rep.reported_residual);
    j["asymptotic"] = {{"slope", num_or_null(rep.asymptotic.slope)},
                       {"target", num_or_null(rep.asymptotic.target)},
                       {"drift", num_or_null(rep.asymptotic.drift)},
                       {"intercept", num_or_null(rep.asymptotic.intercept)}};
    if (rep.pohozaev)
        j["pohozaev"] = {{"lhs", num_or_null(rep.pohozaev->lhs)},
                         {"rhs", num_or_null(rep.pohozaev->rhs)},
                         {"residual", num_or_null(rep.pohozaev->residual)},
                         {"grad_nonpositive", rep.pohozaev->grad_nonpositive}};
    else
        j["pohozaev"] = nullptr;
    j["laplacian_bound_violations"] = rep.laplacian_bound_violations;
    j["laplacian_bound_max_excess"] = num_or_null(rep.laplacian_bound_max_excess);
    j["tail_bound"] = num_or_null(rep.tail_bound);
    j["c_v"] = num_or_null(rep.c_v);
    j["a_v"] = num_or_null(rep.a_v);
    j["d0"] = num_or_null(rep.d0);
    j["d0_fd"] = num_or_null(rep.d0_fd);
    j["sup_w"] = num_or_null(rep.sup_w);
    j["total_curvature"] = num_or_null(rep.total_curvature_value);
    j["flags"] = {{"d0_negative", rep.flags.d0_negative},
                  {"av_zero", rep.flags.av_zero},
                  {"b1_ordering", rep.flags.b1_ordering},
                  {"normalization", rep.flags.normalization},
                  {"residual_matches", rep.flags.residual_matches},
                  {"residual_within_tol", rep.flags.residual_within_tol},
                  {"deltav_bound", rep.flags.deltav_bound},
                  {"tail", rep.flags.tail},
                  {"d0_fd_consistent", rep.flags.d0_fd_consistent}};
    return j;
}

nlohmann::json to_json(const SolveResult& res) {
    nlohmann::json j;
    j["status"] = to_string(res.status);
    j["stage_iterations"] = res.stage_iterations;
    j["kappa_stages"] = res.kappa_stages;
    nlohmann::json sched = nlohmann::json::array();
    for (const DampingEvent& e : res.damping_schedule)
        sched.push_back({{"stage", e.stage}, {"iteration", e.iteration}, {"theta", e.theta}});
    j["damping_schedule"] = sched;
    j["residual_final"] = num_or_null(res.state.residual);
    j["c_v"] = num_or_null(res.state.c_v);
    j["a_v"] = num_or_null(res.state.A_v);
    j["d0"] = num_or_null(res.state.d0);
    j["t"] = res.state.t;
    j["kappa_current"] = num_or_null(res.state.kappa_current);
    j["sup_w"] = num_or_null(res.sup_w);
    j["tail_bound"] = num_or_null(res.tail_bound);
    nlohmann::json hist = nlohmann::json::array();
    for (double x : res.residual_history) hist.push_back(num_or_null(x));
    j["residual_history"] = hist;
    return j;
}

} // namespace qcurv
