#include "qcurv/cli.hpp"

#include "qcurv/config.hpp"
#include "qcurv/diagnostics.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

namespace qcurv::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Final-iterate profile, gated or not (failure reports still carry u).
RadialFunction profile_from_state(const ProblemSpec& spec, const IterationState& st) {
    RadialFunction u(st.v.grid);
    const auto& r = st.v.grid->nodes();
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (spec.variant == Variant::Thm1) {
            const double r4 = r[j] * r[j] * r[j] * r[j];
            u[j] = spec.P(r[j]) + st.v[j] + st.c_v - (1.0 + st.A_v) * r4;
        } else {
            u[j] = st.v[j] + st.c_v;
        }
    }
    return u;
}

KernelOperator obtain_kernel(std::shared_ptr<const RadialGrid> grid,
                             const std::string& cache_path) {
    if (!cache_path.empty()) {
        if (auto cached = KernelOperator::load(cache_path, grid)) return std::move(*cached);
    }
    KernelOperator op = KernelOperator::assemble(grid);
    if (!cache_path.empty()) op.save(cache_path);
    return op;
}

void write_solution_csv(const fs::path& path, const ProblemSpec& spec, const SolveResult& res) {
    const RadialFunction u = res.status == SolveStatus::Converged
                                 ? res.u
                                 : profile_from_state(spec, res.state);
    const RadialFunction lap = radial_laplacian(res.state.v);
    std::ofstream os(path, std::ios::trunc);
    os << "r,u,v,lap_v\n";
    const auto& r = res.state.v.grid->nodes();
    for (std::size_t j = 0; j < r.size(); ++j)
        os << fmt17(r[j]) << ',' << fmt17(u[j]) << ',' << fmt17(res.state.v[j]) << ','
           << fmt17(lap[j]) << '\n';
}

void write_plotdata_csv(const fs::path& path, const ProblemSpec& spec, const SolveResult& res,
                        const AsymptoticFit& fit) {
    std::ofstream os(path, std::ios::trunc);
    os << "r,depoly,fit\n";
    const auto& r = res.state.v.grid->nodes();
    for (std::size_t j = 0; j < r.size(); ++j) {
        if (r[j] < 1.0) continue;
        const double r2 = r[j] * r[j];
        double g;
        if (spec.variant == Variant::Thm1)
            g = res.state.v[j] - res.state.d0 / (2.0 * spec.n) * (r2 * r2 - r2);
        else
            g = res.state.v[j] - std::abs(res.state.d0) / (2.0 * spec.n) * r2;
        const double model = fit.slope * std::log(r[j]) + fit.intercept;
        os << fmt17(r[j]) << ',' << fmt17(g) << ',' << fmt17(model) << '\n';
    }
}

} // namespace

int cmd_solve(const std::string& config_path, const std::string& out_dir,
              const std::string& cache_path) {
    RunConfig cfg;
    ProblemSpec spec;
    std::shared_ptr<const RadialGrid> grid;
    try {
        cfg = RunConfig::parse_file(config_path);
        if (cfg.mode != "solve") throw std::invalid_argument("config: mode must be \"solve\"");
        grid = RadialGrid::build(cfg.n, cfg.r_max, cfg.cells, cfg.grading);
        spec = cfg.problem();
        spec.validate(*grid);
        cfg.solver().validate();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    fs::create_directories(out_dir);
    const KernelOperator op = obtain_kernel(grid, cache_path);
    const SolverConfig scfg = cfg.solver();
    const SolveResult result = solve(spec, scfg, op);
    const DiagnosticsReport diag = run_invariant_suite(spec, scfg, op, result);

    write_solution_csv(fs::path(out_dir) / "solution.csv", spec, result);
    if (result.status == SolveStatus::Converged)
        write_plotdata_csv(fs::path(out_dir) / "plotdata.csv", spec, result, diag.asymptotic);

    nlohmann::json report;
    report["schema_version"] = 1;
    report["config_toml"] = cfg.to_toml();
    report["solve"] = to_json(result);
    report["diagnostics"] = to_json(diag);
    {
        std::ofstream os(fs::path(out_dir) / "report.json", std::ios::trunc);
        os << report.dump(2) << "\n";
    }

    const bool ok = result.status == SolveStatus::Converged && diag.flags.all_hard();
    std::cout << "status: " << to_string(result.status)
              << "  residual: " << fmt17(result.state.residual) << "  d0: " << fmt17(result.state.d0)
              << "  A_v: " << fmt17(result.state.A_v) << "\n";
    return ok ? 0 : 1;
}

int cmd_probe(const std::string& config_path, const std::string& out_dir) {
    RunConfig cfg;
    std::vector<double> sweep;
    try {
        cfg = RunConfig::parse_file(config_path);
        sweep = cfg.resolved_sweep();
        if (sweep.empty()) throw std::invalid_argument("config: probe needs a non-empty kappa sweep");
        if (cfg.n != 3 && cfg.n != 4)
            throw std::invalid_argument("config: probe runs in dimensions 3 and 4");
        if (cfg.q_type != "gaussian")
            throw std::invalid_argument("config: probe expects a gaussian Q profile");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    fs::create_directories(out_dir);
    auto grid = RadialGrid::build(cfg.n, cfg.r_max, cfg.cells, cfg.grading);
    const KernelOperator op = KernelOperator::assemble(grid);
    const SolverConfig scfg = cfg.solver();

    std::ofstream os(fs::path(out_dir) / "probe.csv", std::ios::trunc);
    os << "kappa,status,pohozaev_lhs,pohozaev_rhs,obstruction_consistent\n";
    for (double kappa : sweep) {
        const ProbeReport rep =
            nonexistence_probe(cfg.n, cfg.q_delta, cfg.q_lambda, kappa, scfg, op);
        os << fmt17(rep.kappa) << ',' << to_string(rep.status) << ','
           << fmt17(rep.pohozaev.lhs) << ',' << fmt17(rep.pohozaev.rhs) << ','
           << (rep.obstruction_consistent ? "true" : "false") << '\n';
        std::cout << "kappa = " << rep.kappa << ": " << to_string(rep.status) << "\n";
    }
    return 0;
}

namespace {

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

/// sampled radii for the kernel cross-checks
std::vector<double> kernel_sample_radii(int count) {
    std::vector<double> rs;
    for (int i = 0; i < count; ++i)
        rs.push_back(0.01 * std::pow(10000.0, double(i) / (count - 1)));  // 0.01 .. 100
    return rs;
}

} // namespace

int cmd_verify(bool fast) {
    using std::abs;
    std::vector<Check> checks;
    auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        checks.push_back({name, pass, detail});
    };
    const bool inject_kernel = [] {
        const char* env = std::getenv("QCURV_VERIFY_INJECT");
        return env && std::strcmp(env, "kernel") == 0;
    }();
    const int M = fast ? 512 : 2048;

    // constants
    {
        const double targets[4] = {4 * M_PI * M_PI, 16 * M_PI * M_PI, 24 * std::pow(M_PI, 3),
                                   128 * std::pow(M_PI, 3)};
        double worst = 0;
        for (int n = 3; n <= 6; ++n)
            worst = std::max(worst, abs(lambda1(n) - targets[n - 3]) / targets[n - 3]);
        add("constants/lambda1-closed-forms", worst <= 1e-14, "max rel err " + fmt17(worst));
    }
    {
        double worst = 0;
        for (int n = 3; n <= 12; ++n) {
            const auto c = DimensionalConstants::make(n);
            worst = std::max(worst, abs(c.lambda1 - 2.0 * c.gamma_n) / c.lambda1);
        }
        add("constants/gamma-half-lambda1", worst <= 1e-15, "max rel err " + fmt17(worst));
    }
    {
        double worst = 0;
        for (int n = 2; n <= 12; ++n) {
            const double ratio = sphere_area(n) / sphere_area(n - 1);
            const double target =
                std::sqrt(M_PI) * gamma_half_integer(n) / gamma_half_integer(n + 1);
            worst = std::max(worst, abs(ratio - target) / target);
        }
        add("constants/sphere-area-recurrence", worst <= 1e-14, "max rel err " + fmt17(worst));
    }

    // grid (quadrature-only checks always run at the default resolution;
    // only kernel assembly is reduced in fast mode)
    {
        auto g = RadialGrid::build(3, 10.0, 256, 2.0);
        const auto& w = g->volume_weights();
        double sum = 0;
        for (double x : w) sum += x;
        const double err = abs(sum - g->ball_volume()) / g->ball_volume();
        add("grid/ball-volume", err <= 1e-12, "rel err " + fmt17(err));
    }
    auto gridq3 = RadialGrid::build(3, 100.0, 2048, 2.0);
    auto grid3 = fast ? RadialGrid::build(3, 100.0, M, 2.0) : gridq3;
    {
        RadialFunction f =
            RadialFunction::sample(gridq3, [](double r) { return std::exp(-r * r); });
        const double val = integrate_radial(f).value;
        const double target = std::pow(M_PI, 1.5);
        const double err = abs(val - target) / target;
        add("grid/gaussian-mass", err <= 1e-8, "rel err " + fmt17(err));
    }
    {
        RadialFunction f =
            RadialFunction::sample(gridq3, [](double r) { return std::pow(r, 4); });
        const RadialFunction lap = radial_laplacian(f);
        double worst = 0;
        bool ok = true;
        for (std::size_t j = 0; j < f.size(); ++j) {
            const double r2 = gridq3->nodes()[j] * gridq3->nodes()[j];
            const double err = abs(lap[j] - 4.0 * (3 + 2) * r2);
            worst = std::max(worst, err / (1 + r2));
            if (err > 1e-6 * (1 + r2)) ok = false;
        }
        add("grid/laplacian-quartic", ok, "max scaled err " + fmt17(worst));
    }

    // ring kernel
    {
        const auto rs = kernel_sample_radii(fast ? 12 : 40);
        double worst = 0;
        for (double r : rs)
            for (double s : rs)
                worst = std::max(worst, abs(ring_kernel_theta_quad(3, r, s) -
                                            ring_kernel_closed3(r, s)));
        for (int i = 0; i < 30; ++i) {
            const double r = 0.05 * std::pow(2000.0, double(i) / 29.0);
            worst = std::max(worst, abs(ring_kernel_theta_quad(3, r, r) -
                                        ring_kernel_closed3(r, r)));
        }
        add("kernel/closed-form-vs-quadrature", worst <= 1e-10, "max abs err " + fmt17(worst));
    }
    {
        const auto rs = kernel_sample_radii(fast ? 12 : 30);
        double worst = 0;
        for (int n : {3, 5, 6})
            for (double r : rs)
                for (double s : rs)
                    worst = std::max(worst, abs(ring_kernel(n, r, s) - ring_kernel(n, s, r)));
        add("kernel/symmetry", worst <= 1e-12, "max abs asymmetry " + fmt17(worst));
    }
    {
        bool ok = true;
        double worst = 0;
        for (int n : {3, 5}) {
            for (double u : {0.1, 0.05, 0.01}) {
                for (double mx : {0.5, 5.0, 50.0}) {
                    const double k = ring_kernel(n, mx, u * mx);
                    const double bound = 2.0 * u * u;
                    worst = std::max(worst, abs(k + std::log(mx)) / (u * u));
                    if (abs(k + std::log(mx)) > bound) ok = false;
                }
            }
        }
        add("kernel/far-field-bound", ok, "max |k+log max|/u^2 = " + fmt17(worst));
    }

    // assembled operator, n = 3
    KernelOperator op3 = KernelOperator::assemble(grid3);
    if (inject_kernel)
        op3.perturb_entry(grid3->first_index_at_or_above(1.0),
                          grid3->first_index_at_or_above(0.5), 1e-2);
    {
        const SphericalOracleReport rep = spherical_oracle(op3);
        add("kernel/spherical-potential-n3", rep.potential_dev <= 1e-3 && rep.const_offset <= 1e-3,
            "sup dev " + fmt17(rep.potential_dev));
    }
    {
        const SphericalSolution sph{1.0};
        RadialFunction f =
            RadialFunction::sample(gridq3, [&](double r) { return sph.density(3, r); });
        const double mass =
            integrate_radial(f, TailModel::power(factorial(2) * 8.0, 6.0)).value;
        const double err = abs(mass - gridq3->constants().lambda1) / gridq3->constants().lambda1;
        add("oracle/spherical-mass-n3", err <= 1e-6, "rel err " + fmt17(err));
    }
    {
        const SphericalSolution sph{1.0};
        RadialFunction f =
            RadialFunction::sample(grid3, [&](double r) { return sph.density(3, r); });
        const double got = op3.lap0(f);
        const double err = abs(got - (-6.0)) / 6.0;
        add("kernel/lap0-spherical-n3", err <= 1e-4, "got " + fmt17(got));
    }

    // n = 5 oracles
    {
        auto grid5 = RadialGrid::build(5, 100.0, 2048, 2.0);
        const SphericalSolution sph{1.0};
        RadialFunction f =
            RadialFunction::sample(grid5, [&](double r) { return sph.density(5, r); });
        const double tail_c = factorial(4) * 32.0;
        const double mass = integrate_radial(f, TailModel::power(tail_c, 10.0)).value;
        const double target = grid5->constants().lambda1;
        const double err = abs(mass - target) / target;
        add("oracle/spherical-mass-n5", err <= 1e-6, "rel err " + fmt17(err));
        if (!fast) {
            const KernelOperator op5 = KernelOperator::assemble(grid5);
            const SphericalOracleReport rep = spherical_oracle(op5);
            add("kernel/spherical-potential-n5",
                rep.potential_dev <= 1e-3 && rep.const_offset <= 1e-3,
                "sup dev " + fmt17(rep.potential_dev));
        }
    }

    // diagnostics fits and arithmetic
    {
        RadialFunction g = RadialFunction::sample(
            grid3, [](double r) { return 7.5 - 3.0 * std::log(std::max(r, 1e-300)); });
        const AsymptoticFit fit = fit_log_slope(g, -3.0);
        add("diagnostics/synthetic-log-fit",
            abs(fit.slope + 3.0) <= 1e-10 && fit.drift <= 1e-10,
            "slope " + fmt17(fit.slope) + " drift " + fmt17(fit.drift));
    }
    {
        const auto c = DimensionalConstants::make(3);
        auto lhs = [&](double kappa) {
            const double kg = kappa / c.gamma_n;
            return kg * (kg - 2.0);
        };
        const bool ok = abs(lhs(c.lambda1)) <= 1e-15 && abs(lhs(0.5 * c.lambda1) + 1.0) <= 1e-15;
        add("diagnostics/pohozaev-lhs", ok, "lhs(L1) = " + fmt17(lhs(c.lambda1)));
    }

    // invariant-suite failure injections on a constructed state
    {
        ProblemSpec spec;
        spec.n = 3;
        spec.kappa = 0.5 * grid3->constants().lambda1;
        spec.Q = QProfile::gaussian(2.0, 1.0);
        spec.variant = Variant::Thm2;
        SolverConfig scfg;

        SolveResult base;
        base.state.v = RadialFunction::sample(grid3, [](double r) { return 0.1 * std::exp(-r * r); });
        base.state.kappa_current = spec.kappa;
        base.state.t = 1.0;
        base.state.d0 = -1.0;
        RadialFunction q3 = RadialFunction::sample(grid3, [&](double r) { return spec.Q(r); });
        base.state.c_v = compute_cv(spec.kappa, q3, base.state.v);

        const DiagnosticsReport healthy = run_invariant_suite(spec, scfg, op3, base);
        SolveResult shifted = base;
        for (double& x : shifted.state.v.values) x += 1.0;  // stale c_v
        const DiagnosticsReport broken = run_invariant_suite(spec, scfg, op3, shifted);
        add("invariants/normalization-injection-caught",
            healthy.flags.normalization && !broken.flags.normalization,
            "healthy err " + fmt17(healthy.normalization_error) + ", corrupted err " +
                fmt17(broken.normalization_error));

        SolveResult possign = base;
        possign.state.d0 = +1.0;
        const DiagnosticsReport broken2 = run_invariant_suite(spec, scfg, op3, possign);
        add("invariants/d0-sign-injection-caught",
            healthy.flags.d0_negative && !broken2.flags.d0_negative, "");
    }

    // determinism of the operator application
    {
        ProblemSpec spec;
        spec.n = 3;
        spec.kappa = grid3->constants().lambda1;
        spec.Q = QProfile::quartic(2.0, 1.0);
        spec.variant = Variant::Thm2;
        IterationState st;
        st.v = RadialFunction::sample(grid3, [](double r) { return -0.05 * r * r / (1 + r); });
        st.d0 = -0.5;
        st.t = 1.0;
        st.kappa_current = spec.kappa;
        const TStepResult a = apply_T(spec, op3, st);
        const TStepResult b = apply_T(spec, op3, st);
        const bool identical =
            a.v_out.values == b.v_out.values && a.d0_out == b.d0_out && a.c_v == b.c_v;
        add("determinism/apply-T-bit-identical", identical, "");
    }

    bool all = true;
    for (const Check& c : checks) {
        all = all && c.pass;
        std::printf("[%s] %-45s %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
    }
    std::printf("%zu checks, %s\n", checks.size(), all ? "all passed" : "FAILURES present");
    return all ? 0 : 1;
}

} // namespace qcurv::cli
