#include "qcurv/constants.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qcurv {

double factorial(int k) {
    if (k < 0) throw std::domain_error("factorial: negative argument");
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f;
}

double gamma_half_integer(int twice_argument) {
    if (twice_argument < 1)
        throw std::domain_error("gamma_half_integer: argument must be >= 1/2");
    if (twice_argument % 2 == 0) return factorial(twice_argument / 2 - 1);
    // Gamma(m + 1/2) = (2m-1)/2 * (2m-3)/2 * ... * 1/2 * sqrt(pi)
    double g = std::sqrt(M_PI);
    for (int j = 1; j < twice_argument; j += 2) g *= 0.5 * static_cast<double>(j);
    return g;
}

double sphere_area(int k) {
    if (k < 1) throw std::domain_error("sphere_area: dimension must be >= 1");
    // 2 pi^{(k+1)/2} / Gamma((k+1)/2); pi^{(k+1)/2} split into integer and
    // half powers so even and odd k use the same exact path.
    const int twice = k + 1;  // Gamma argument in half-integer units
    double pi_pow = std::pow(M_PI, twice / 2);
    if (twice % 2 == 1) pi_pow *= std::sqrt(M_PI);
    return 2.0 * pi_pow / gamma_half_integer(twice);
}

double lambda1(int n) {
    if (n < 3) throw std::domain_error("lambda1: artifact restricts to n >= 3");
    return factorial(n - 1) * sphere_area(n);
}

DimensionalConstants DimensionalConstants::make(int n) {
    if (n < 3)
        throw std::domain_error("DimensionalConstants: n must be >= 3, got " + std::to_string(n));
    DimensionalConstants c;
    c.n = n;
    c.sphere_area_n = sphere_area(n);
    c.omega_nm1 = sphere_area(n - 1);
    c.factorial_nm1 = factorial(n - 1);
    c.lambda1 = c.factorial_nm1 * c.sphere_area_n;
    c.gamma_n = 0.5 * c.lambda1;
    return c;
}

} // namespace qcurv
