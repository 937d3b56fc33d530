#pragma once

#include <vector>

#include "latentseg/matrix.hpp"

namespace latentseg::kernels {

// Data-parallel numeric kernels, OpenMP over output rows/elements. Every output
// element is accumulated in the same index order as the serial reference, so
// results are bitwise identical for any thread count.

// C = A * B^T, A is m x k, B is n x k.
Matrix gemm_nt(const Matrix& a, const Matrix& b);
// C = A * B, A is m x k, B is k x n.
Matrix gemm_nn(const Matrix& a, const Matrix& b);
// C = A^T * B, A is k x m, B is k x n.
Matrix gemm_tn(const Matrix& a, const Matrix& b);

// D(i, j) = squared Euclidean distance between row i of x and row j of c.
Matrix pairwise_sqdist(const Matrix& x, const Matrix& c);

// Column means and population variances in one pass.
void colwise_mean_var(const Matrix& x, std::vector<double>& mean, std::vector<double>& var);

// Serial reference implementations, kept for testing and benchmarking.
namespace serial {
Matrix gemm_nt(const Matrix& a, const Matrix& b);
Matrix gemm_nn(const Matrix& a, const Matrix& b);
Matrix gemm_tn(const Matrix& a, const Matrix& b);
Matrix pairwise_sqdist(const Matrix& x, const Matrix& c);
void colwise_mean_var(const Matrix& x, std::vector<double>& mean, std::vector<double>& var);
} // namespace serial

} // namespace latentseg::kernels
