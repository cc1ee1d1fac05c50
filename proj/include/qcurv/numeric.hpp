#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qcurv {

/// Gauss-Legendre rule on [-1, 1]. Nodes ascending, weights positive.
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights computed by Newton iteration on the Legendre recurrence;
/// results are cached per order.
const GaussRule& gauss_legendre(int order);

/// Finite-difference weights on an arbitrary stencil (Fornberg's algorithm).
/// Returns weights w such that f^(deriv)(x0) ~ sum_i w[i] f(stencil[i]).
std::vector<double> fd_weights(double x0, std::span<const double> stencil, int deriv);

/// Shape-preserving cubic Hermite interpolant (Fritsch-Carlson slopes).
/// Built over strictly increasing abscissae; evaluation at a knot returns the
/// stored ordinate exactly. An even extension through x = 0 is assumed when
/// even_at_zero is set: the slope at the first knot (which must be 0) is
/// pinned to zero.
class MonotoneCubic {
public:
    MonotoneCubic() = default;
    MonotoneCubic(std::span<const double> x, std::span<const double> y, bool even_at_zero);

    double operator()(double x) const;
    bool valid() const { return !x_.empty(); }

private:
    std::vector<double> x_, y_, d_;  // knots, values, endpoint slopes
};

} // namespace qcurv
