#pragma once

#include <string_view>

#include "toeplitzlda/blockmat.hpp"

namespace toeplitzlda {

enum class SolveMethod { kLevinson, kDense, kDenseIndefinite };

std::string_view to_string(SolveMethod method);

struct SolveReport {
  Matrix solution;        // D x k
  SolveMethod method;
  double residual_norm;   // ||A X - B||_F, computed after the solve
  bool well_conditioned;  // false when a positive definite factorization failed
};

/// Solves to_dense(cov) X = B with the block Levinson recursion in
/// O(N_t^2 N_c^3 + N_t^2 N_c^2 k) time, never forming the dense matrix.
///
/// Every right-hand side is carried through the same recursion. Throws
/// SolveBreakdown naming the step whose forward or backward prediction error
/// block is not positive definite, i.e. when a leading block minor of the
/// matrix is not positive definite.
SolveReport block_levinson_solve(const BlockToeplitzCov& cov, const Matrix& rhs);

/// Cholesky solve of a symmetric positive definite matrix. Throws
/// Error(kNumerical) if the factorization fails.
SolveReport dense_solve(const BlockCov& cov, const Matrix& rhs);

/// Symmetric indefinite solve (pivoted LDL^T) for matrices that lost
/// definiteness. Throws Error(kNumerical) on a singular matrix or a
/// non-finite result. The report is flagged as not well conditioned.
SolveReport dense_indefinite_solve(const BlockCov& cov, const Matrix& rhs);

/// to_dense(cov) * x without materializing the dense matrix.
Matrix block_toeplitz_multiply(const BlockToeplitzCov& cov, const Matrix& x);

}  // namespace toeplitzlda
