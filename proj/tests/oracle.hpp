#pragma once

// Test-side reference quadrature, independent of the production
// product-integration weights: composite 16-point Gauss-Legendre over graded
// panels at >= 4x the default resolution. Used to freeze expected values.

#include <functional>

namespace qcurv::testing {

/// ∫_0^R f(s) s^{n-1} ds by composite Gauss on quadratically graded panels.
double oracle_radial_line_integral(int n, const std::function<double(double)>& f, double R,
                                   int panels = 8192);

/// Full-space integral ∫_{B_R} f(|y|) dy = ω_{n-1} ∫_0^R f s^{n-1} ds.
double oracle_radial_integral(int n, const std::function<double(double)>& f, double R,
                              int panels = 8192);

/// (1/γ_n) ∫_{B_R} log(1/|x-y|) f(|y|) dy at |x| = r, panels split and graded
/// around the kernel kink at s = r.
double oracle_potential(int n, const std::function<double(double)>& f, double r, double R);

/// Closed form of the ring-averaged log kernel for n = 5 (polynomial-times-log
/// antiderivatives); valid away from the diagonal.
double ring_kernel_closed5(double r, double s);

} // namespace qcurv::testing
