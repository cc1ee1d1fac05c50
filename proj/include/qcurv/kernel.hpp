#pragma once

#include "qcurv/grid.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace qcurv {

/// Mean of log(1/|x-y|) over the sphere |y| = s, evaluated at |x| = r.
/// Symmetric in (r, s); finite everywhere except r = s = 0 (throws).
/// n = 3 uses the closed form
///   1/2 - ((r+s)^2 log(r+s) - (r-s)^2 log|r-s|) / (4 r s),
/// other n a Gauss-Legendre quadrature in the polar angle (single 64-point
/// panel away from the diagonal, geometrically graded composite panels near
/// it, where the integrand develops a log endpoint singularity).
double ring_kernel(int n, double r, double s);

/// Quadrature path regardless of n (cross-checked against the n = 3 closed
/// form in tests).
double ring_kernel_theta_quad(int n, double r, double s);

/// n = 3 closed form (requires r, s > 0).
double ring_kernel_closed3(double r, double s);

/// Discrete logarithmic potential operator on a radial grid: a dense matrix
/// mapping a density sampled at the nodes to
///   (1/γ_n) ∫ log(1/|x-y|) f(|y|) dy
/// at the nodes, assembled by a Nystrom product rule with local subdivision
/// of the cells adjacent to the diagonal kink, plus the analytic
/// Laplacian-at-origin functional
///   Δ(potential)(0) = -((n-2)/γ_n) ∫ f(|y|)/|y|^2 dy.
class KernelOperator {
public:
    static KernelOperator assemble(std::shared_ptr<const RadialGrid> grid);

    const RadialGrid& grid() const { return *grid_; }
    std::shared_ptr<const RadialGrid> grid_ptr() const { return grid_; }

    RadialFunction apply(const RadialFunction& density) const;
    void apply(std::span<const double> density, std::span<double> out) const;

    double lap0(std::span<const double> density) const;
    double lap0(const RadialFunction& density) const { return lap0(density.values); }

    std::span<const double> matrix() const { return matrix_; }
    std::span<const double> lap0_weights() const { return lap0_w_; }

    /// Fault-injection hook for the verify suite's self-check.
    void perturb_entry(std::size_t i, std::size_t j, double delta);

    /// Binary cache keyed by (n, cells, r_max, grading); little-endian
    /// row-major float64. load returns nullopt when the file is absent or
    /// keyed differently.
    void save(const std::filesystem::path& path) const;
    static std::optional<KernelOperator> load(const std::filesystem::path& path,
                                              std::shared_ptr<const RadialGrid> grid);

private:
    KernelOperator() = default;

    std::shared_ptr<const RadialGrid> grid_;
    std::vector<double> matrix_;  // (M+1)^2 row-major
    std::vector<double> lap0_w_;  // M+1
};

} // namespace qcurv
