#include "toeplitzlda/btsolve.hpp"

#include <string>

#include <Eigen/Cholesky>

#include "toeplitzlda/error.hpp"

namespace toeplitzlda {
namespace {

using ColMatrix = Eigen::MatrixXd;

void check_rhs(Index dim, const Matrix& rhs) {
  if (rhs.rows() != dim) {
    throw Error(ErrorKind::kDimension, "right-hand side has " + std::to_string(rhs.rows()) +
                                           " rows, system dimension is " +
                                           std::to_string(dim));
  }
}

Eigen::LLT<ColMatrix> factor_error_block(const ColMatrix& v, std::size_t step,
                                         const char* which) {
  Eigen::LLT<ColMatrix> llt(v);
  if (llt.info() != Eigen::Success) {
    throw SolveBreakdown(step, std::string(which) +
                                   " prediction error block is not positive definite at "
                                   "Levinson step " +
                                   std::to_string(step) +
                                   "; the leading block minor is indefinite");
  }
  return llt;
}

}  // namespace

std::string_view to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::kLevinson: return "levinson";
    case SolveMethod::kDense: return "dense";
    case SolveMethod::kDenseIndefinite: return "dense_indefinite";
  }
  return "unknown";
}

Matrix block_toeplitz_multiply(const BlockToeplitzCov& cov, const Matrix& x) {
  check_rhs(cov.dims().size(), x);
  const Index nc = cov.dims().n_channels();
  const Index nt = cov.dims().n_times();
  Matrix y = Matrix::Zero(x.rows(), x.cols());
  for (Index i = 0; i < nt; ++i) {
    for (Index j = 0; j < nt; ++j) {
      const auto xj = x.middleRows(j * nc, nc);
      if (j >= i) {
        y.middleRows(i * nc, nc).noalias() += cov.lag(j - i) * xj;
      } else {
        y.middleRows(i * nc, nc).noalias() += cov.lag(i - j).transpose() * xj;
      }
    }
  }
  return y;
}

SolveReport block_levinson_solve(const BlockToeplitzCov& cov, const Matrix& rhs) {
  const BlockDims& dims = cov.dims();
  check_rhs(dims.size(), rhs);
  const Index nc = dims.n_channels();
  const Index nt = dims.n_times();
  const Index k = rhs.cols();

  // Block m of `rev` is lag(N_t - 1 - m)^T, so block row n of the matrix left
  // of the diagonal, [lag(n)^T ... lag(1)^T], is one contiguous slice.
  ColMatrix rev(nc, dims.size());
  for (Index m = 0; m < nt; ++m) rev.middleCols(m * nc, nc) = cov.lag(nt - 1 - m).transpose();

  // Forward predictor F and backward predictor G of the current leading
  // n-block system: T_n F = [Vf; 0; ...], T_n G = [...; 0; Vb].
  ColMatrix fwd = ColMatrix::Zero(dims.size(), nc);
  ColMatrix bwd = ColMatrix::Zero(dims.size(), nc);
  ColMatrix sol = ColMatrix::Zero(dims.size(), k);
  fwd.topRows(nc).setIdentity();
  bwd.topRows(nc).setIdentity();

  ColMatrix vf = cov.lag(0);
  ColMatrix vb = vf;
  auto llt_f = factor_error_block(vf, 0, "forward");
  auto llt_b = llt_f;
  sol.topRows(nc) = llt_b.solve(ColMatrix(rhs.topRows(nc)));

  for (Index n = 1; n < nt; ++n) {
    const auto step = static_cast<std::size_t>(n);
    const auto row = rev.middleCols((nt - 1 - n) * nc, n * nc);

    const ColMatrix delta = row * fwd.topRows(n * nc);
    const ColMatrix eps = row * sol.topRows(n * nc);
    const ColMatrix gain_f = llt_b.solve(delta);
    const ColMatrix gain_b = llt_f.solve(ColMatrix(delta.transpose()));

    const ColMatrix bwd_old = bwd.topRows(n * nc);
    bwd.middleRows(nc, n * nc) = bwd_old;
    bwd.topRows(nc).setZero();
    bwd.topRows(n * nc).noalias() -= fwd.topRows(n * nc) * gain_b;
    fwd.middleRows(nc, n * nc).noalias() -= bwd_old * gain_f;

    vf -= delta.transpose() * gain_f;
    vb -= delta * gain_b;
    vf = 0.5 * (vf + vf.transpose()).eval();
    vb = 0.5 * (vb + vb.transpose()).eval();
    llt_f = factor_error_block(vf, step, "forward");
    llt_b = factor_error_block(vb, step, "backward");

    const ColMatrix z = llt_b.solve(ColMatrix(rhs.middleRows(n * nc, nc)) - eps);
    sol.topRows((n + 1) * nc).noalias() += bwd.topRows((n + 1) * nc) * z;
  }

  Matrix solution = sol;
  const double residual = (block_toeplitz_multiply(cov, solution) - rhs).norm();
  return {std::move(solution), SolveMethod::kLevinson, residual, true};
}

SolveReport dense_solve(const BlockCov& cov, const Matrix& rhs) {
  check_rhs(cov.dims().size(), rhs);
  const ColMatrix a = cov.data();
  Eigen::LLT<ColMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical,
                "Cholesky factorization failed: covariance is not positive definite");
  }
  Matrix solution = llt.solve(ColMatrix(rhs));
  const double residual = (a * solution - rhs).norm();
  return {std::move(solution), SolveMethod::kDense, residual, true};
}

SolveReport dense_indefinite_solve(const BlockCov& cov, const Matrix& rhs) {
  check_rhs(cov.dims().size(), rhs);
  const ColMatrix a = cov.data();
  Eigen::LDLT<ColMatrix> ldlt(a);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "LDL^T factorization failed");
  }
  Matrix solution = ldlt.solve(ColMatrix(rhs));
  const double residual = (a * solution - rhs).norm();
  if (!solution.allFinite() || residual > 1e-6 * std::max(1.0, rhs.norm())) {
    throw Error(ErrorKind::kNumerical, "covariance is singular; indefinite solve failed");
  }
  return {std::move(solution), SolveMethod::kDenseIndefinite, residual, false};
}

}  // namespace toeplitzlda
