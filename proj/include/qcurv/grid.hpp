#pragma once

#include "qcurv/constants.hpp"
#include "qcurv/numeric.hpp"

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

namespace qcurv {

/// Decay descriptor for the integrand beyond r_max. The tail contribution is
/// estimated analytically and reported alongside the truncated integral.
struct TailModel {
    enum class Kind { None, PowerLaw, GaussianExp, QuarticExp };
    Kind kind = Kind::None;
    double coeff = 0.0;  ///< C in C s^{-p}, C e^{-a s^2}, C e^{-a s^4}
    double rate = 0.0;   ///< p, respectively a

    static TailModel none() { return {}; }
    static TailModel power(double c, double p) { return {Kind::PowerLaw, c, p}; }
    static TailModel gaussian(double c, double a) { return {Kind::GaussianExp, c, a}; }
    static TailModel quartic(double c, double a) { return {Kind::QuarticExp, c, a}; }
};

/// One cell of a product-integration rule: ∫_cell f(s) s^p ds ≈ Σ beta_m f(r_{first+m}).
struct CellRule {
    int first = 0;
    int count = 0;
    std::array<double, 5> beta{};
};

/// Graded radial grid on [0, r_max] with product-integration weights for the
/// radial measures s^p that appear in full-space integrals of radial
/// functions. Nodes r_j = r_max (j/M)^grading. Immutable after construction.
class RadialGrid {
public:
    static std::shared_ptr<const RadialGrid> build(int n, double r_max, int cells,
                                                   double grading);

    int dimension() const { return consts_.n; }
    double r_max() const { return r_max_; }
    double grading() const { return grading_; }
    int cell_count() const { return cells_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }
    const DimensionalConstants& constants() const { return consts_; }

    /// Weights W_j with Σ_j W_j f(r_j) ≈ ∫_0^R f(s) s^p ds, exact for f
    /// piecewise-cubic on the grid (linear on the first cell). Cached per p.
    const std::vector<double>& measure_weights(int p) const;

    /// Per-cell decomposition of measure_weights(p).
    std::vector<CellRule> cell_rules(int p) const;

    /// ω_{n-1} · measure_weights(n-1): Σ_j vol_j f(r_j) ≈ ∫_{B_R} f(|y|) dy.
    const std::vector<double>& volume_weights() const { return vol_weights_; }

    double ball_volume() const;  ///< ω_{n-1} R^n / n

    /// First node index j with r_j >= r (size() if none).
    std::size_t first_index_at_or_above(double r) const;

private:
    RadialGrid() = default;

    DimensionalConstants consts_;
    double r_max_ = 0, grading_ = 0;
    int cells_ = 0;
    std::vector<double> nodes_;
    std::vector<double> vol_weights_;
    struct Cache;
    std::shared_ptr<Cache> cache_;
};

/// A scalar radial profile sampled at the grid nodes. Off-node evaluation uses
/// a monotone cubic interpolant with even extension through the origin.
struct RadialFunction {
    std::shared_ptr<const RadialGrid> grid;
    std::vector<double> values;

    RadialFunction() = default;
    explicit RadialFunction(std::shared_ptr<const RadialGrid> g, double fill = 0.0);
    static RadialFunction sample(std::shared_ptr<const RadialGrid> g,
                                 const std::function<double(double)>& f);

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t j) const { return values[j]; }
    double& operator[](std::size_t j) { return values[j]; }

    bool all_finite() const;
    MonotoneCubic interpolant() const;
    double eval(double r) const;

    /// CSV with columns r,value at full precision.
    void write_csv(std::ostream& os) const;
};

struct IntegralResult {
    double value = 0.0;  ///< truncated integral plus tail estimate
    double tail = 0.0;   ///< the tail estimate alone
};

/// ∫_{R^n} f(|y|) dy via the grid volume weights, plus the analytic tail
/// estimate of the supplied decay model beyond r_max.
IntegralResult integrate_radial(const RadialFunction& f, const TailModel& tail = TailModel::none());
IntegralResult integrate_radial(const RadialGrid& grid, std::span<const double> f,
                                const TailModel& tail = TailModel::none());

/// Δf = f'' + (n-1) f'/r on the grid by 5-point finite differences (local
/// degree-4 fits on the graded nodes); at the origin n f''(0) via the even
/// extension. Requires at least 5 nodes.
RadialFunction radial_laplacian(const RadialFunction& f);

} // namespace qcurv
