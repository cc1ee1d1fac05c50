#pragma once

namespace qcurv {

/// Dimensional constants shared by every module working on a given problem.
/// Computed once per problem and passed around so all consumers see
/// bit-identical values.
struct DimensionalConstants {
    int n = 0;                 ///< ambient dimension, n >= 3
    double sphere_area_n = 0;  ///< |S^n|
    double omega_nm1 = 0;      ///< |S^{n-1}|
    double lambda1 = 0;        ///< (n-1)! |S^n|, total curvature of the round sphere
    double gamma_n = 0;        ///< lambda1 / 2
    double factorial_nm1 = 0;  ///< (n-1)!

    static DimensionalConstants make(int n);
};

/// Gamma(k/2) for integer k >= 1, by exact half-integer recursion from
/// Gamma(1) = 1 and Gamma(1/2) = sqrt(pi). No approximation beyond rounding.
double gamma_half_integer(int twice_argument);

/// |S^k| = 2 pi^{(k+1)/2} / Gamma((k+1)/2), k >= 1.
double sphere_area(int k);

/// (n-1)! |S^n|, n >= 3.
double lambda1(int n);

/// Exact integer factorial in double precision.
double factorial(int k);

} // namespace qcurv
