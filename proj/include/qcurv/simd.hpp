#pragma once

#include <cstddef>

// Scalar reference kernels plus AVX2 variants for the arithmetic inner loops:
// weighted log sums (ring-kernel quadrature), dot products (quadrature
// reductions) and row-major matrix-vector products (potential application).
// The implementation is picked once per process; on the same machine and
// build, repeated runs therefore reduce in the same order and reproduce
// bit-identical results.

namespace qcurv::simd {

enum class Lane { Auto, Scalar, Avx2 };

/// Active lane after resolving Auto against CPU features and the
/// QCURV_SIMD environment variable (values: scalar, avx2, auto).
Lane active();

/// Override dispatch (tests). Lane::Avx2 on unsupported hardware throws.
void force(Lane lane);

bool avx2_supported();

// ---- dispatched entry points ----

/// sum_i w[i] * log(a - b * u[i]); requires a - b*u[i] > 0 for all i.
double log_quad_sum(double a, double b, const double* u, const double* w, std::size_t m);

/// sum_i w[i] * log(x[i]); requires x[i] > 0 (normal doubles).
double log_sum(const double* x, const double* w, std::size_t m);

double dot(const double* x, const double* y, std::size_t m);

/// y = A x, A row-major rows x cols.
void matvec(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);

// ---- scalar references (always available, used by equivalence tests) ----

double log_quad_sum_scalar(double a, double b, const double* u, const double* w, std::size_t m);
double log_sum_scalar(const double* x, const double* w, std::size_t m);
double dot_scalar(const double* x, const double* y, std::size_t m);
void matvec_scalar(const double* A, const double* x, double* y, std::size_t rows,
                   std::size_t cols);

// ---- AVX2 variants (call only when avx2_supported()) ----

double log_quad_sum_avx2(double a, double b, const double* u, const double* w, std::size_t m);
double log_sum_avx2(const double* x, const double* w, std::size_t m);
double dot_avx2(const double* x, const double* y, std::size_t m);
void matvec_avx2(const double* A, const double* x, double* y, std::size_t rows, std::size_t cols);

} // namespace qcurv::simd
