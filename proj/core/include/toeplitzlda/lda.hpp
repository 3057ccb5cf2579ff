#pragma once

#include <optional>
#include <span>
#include <string>

#include "toeplitzlda/blockmat.hpp"
#include "toeplitzlda/btsolve.hpp"
#include "toeplitzlda/covest.hpp"

namespace toeplitzlda {

struct FitOptions {
  Estimator estimator = Estimator::kToeplitz;
  CovMode cov_mode = CovMode::kWithin;
  /// Fixed shrinkage intensity; Ledoit-Wolf when absent.
  std::optional<double> gamma;
  /// Replaces the class means estimated from the data (oracle-mean mode).
  /// The covariance is still estimated from the data passed to fit().
  std::optional<ClassStats> mean_override;
};

/// Binary Fisher LDA. Positive scores indicate the target class.
struct LdaModel {
  Vector weights;
  double bias = 0.0;
  BlockDims dims{1, 1};
  Estimator estimator = Estimator::kToeplitz;
  CovMode cov_mode = CovMode::kWithin;
  double gamma = 0.0;

  // Fit diagnostics; not serialized.
  SolveMethod solve_method = SolveMethod::kDense;
  bool well_conditioned = true;
  /// Set when both class means coincide; weights are then zero.
  bool degenerate = false;
};

/// w = Sigma^-1 (mu_2 - mu_1), b = -w^T (mu_1 + mu_2) / 2.
///
/// Toeplitz estimators solve with block_levinson_solve; if the recursion
/// breaks down (the averaged-only covariance can be indefinite) the fit
/// retries with a dense symmetric indefinite solve and clears
/// well_conditioned. `labels` may be empty for kGlobal when mean_override is
/// set.
LdaModel fit(const FeatureMatrix& x, std::span<const Label> labels, const FitOptions& options);

/// w^T x_i + b for every column.
Vector decision_values(const LdaModel& model, const FeatureMatrix& x);

/// JSON document with dims, estimator, cov_mode, gamma, bias and weights;
/// doubles are written with round-trip precision.
std::string model_to_json(const LdaModel& model);
/// Throws Error(kFormat) on malformed input.
LdaModel model_from_json(const std::string& text);

}  // namespace toeplitzlda
