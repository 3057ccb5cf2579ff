#include "toeplitzlda/covest.hpp"

#include <algorithm>
#include <string>

#include <Eigen/Core>

#include "toeplitzlda/error.hpp"

namespace toeplitzlda {
namespace {

void check_labels(const FeatureMatrix& x, std::span<const Label> labels) {
  if (static_cast<Index>(labels.size()) != x.n_epochs()) {
    throw Error(ErrorKind::kDimension, std::to_string(labels.size()) + " labels for " +
                                           std::to_string(x.n_epochs()) + " epochs");
  }
  for (Label l : labels) {
    if (l != 0 && l != 1) {
      throw Error(ErrorKind::kDomain, "labels must be 0 or 1, got " + std::to_string(l));
    }
  }
}

}  // namespace

std::string_view to_string(CovMode mode) {
  return mode == CovMode::kWithin ? "within" : "global";
}

std::string_view to_string(Estimator estimator) {
  switch (estimator) {
    case Estimator::kSlda: return "slda";
    case Estimator::kToeplitz: return "toeplitz";
    case Estimator::kToeplitzA1Only: return "toeplitz_a1_only";
    case Estimator::kToeplitzA2Only: return "toeplitz_a2_only";
  }
  return "unknown";
}

std::optional<CovMode> parse_cov_mode(std::string_view name) {
  for (CovMode m : {CovMode::kWithin, CovMode::kGlobal}) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::optional<Estimator> parse_estimator(std::string_view name) {
  for (Estimator e : {Estimator::kSlda, Estimator::kToeplitz, Estimator::kToeplitzA1Only,
                      Estimator::kToeplitzA2Only}) {
    if (to_string(e) == name) return e;
  }
  return std::nullopt;
}

ClassStats class_stats(const FeatureMatrix& x, std::span<const Label> labels) {
  check_labels(x, labels);
  ClassStats stats;
  stats.nontarget_mean = Vector::Zero(x.dims().size());
  stats.target_mean = Vector::Zero(x.dims().size());
  for (Index e = 0; e < x.n_epochs(); ++e) {
    if (labels[static_cast<std::size_t>(e)] == 1) {
      stats.target_mean += x.data().col(e);
      ++stats.n_target;
    } else {
      stats.nontarget_mean += x.data().col(e);
      ++stats.n_nontarget;
    }
  }
  if (stats.n_target == 0 || stats.n_nontarget == 0) {
    throw Error(ErrorKind::kDomain, "both classes must be present (targets: " +
                                        std::to_string(stats.n_target) + ", non-targets: " +
                                        std::to_string(stats.n_nontarget) + ")");
  }
  stats.target_mean /= static_cast<double>(stats.n_target);
  stats.nontarget_mean /= static_cast<double>(stats.n_nontarget);
  return stats;
}

FeatureMatrix center(const FeatureMatrix& x, const Vector& mean) {
  if (mean.size() != x.dims().size()) {
    throw Error(ErrorKind::kDimension, "mean of length " + std::to_string(mean.size()) +
                                           " for dimension " +
                                           std::to_string(x.dims().size()));
  }
  Matrix out = x.data().colwise() - mean;
  return FeatureMatrix(x.dims(), std::move(out), x.layout());
}

FeatureMatrix center(const FeatureMatrix& x, std::span<const Label> labels,
                     const ClassStats& stats) {
  check_labels(x, labels);
  if (stats.target_mean.size() != x.dims().size() ||
      stats.nontarget_mean.size() != x.dims().size()) {
    throw Error(ErrorKind::kDimension, "class means do not match feature dimension");
  }
  Matrix out = x.data();
  for (Index e = 0; e < x.n_epochs(); ++e) {
    out.col(e) -= labels[static_cast<std::size_t>(e)] == 1 ? stats.target_mean
                                                           : stats.nontarget_mean;
  }
  return FeatureMatrix(x.dims(), std::move(out), x.layout());
}

BlockCov sample_covariance(const FeatureMatrix& centered) {
  const Index n = centered.n_epochs();
  if (n < 2) {
    throw Error(ErrorKind::kDomain,
                "sample covariance needs at least 2 epochs, got " + std::to_string(n));
  }
  const Index d = centered.dims().size();
  Matrix s = Matrix::Zero(d, d);
  s.selfadjointView<Eigen::Lower>().rankUpdate(centered.data(),
                                               1.0 / static_cast<double>(n - 1));
  s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
  return BlockCov(centered.dims(), std::move(s), centered.layout());
}

ShrinkageResult shrink(const BlockCov& s, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorKind::kDomain,
                "shrinkage intensity must lie in [0, 1], got " + std::to_string(gamma));
  }
  const Index d = s.dims().size();
  const double nu = s.data().trace() / static_cast<double>(d);
  Matrix m = (1.0 - gamma) * s.data();
  m.diagonal().array() += gamma * nu;
  return {BlockCov(s.dims(), std::move(m), s.layout()), gamma, nu};
}

double ledoit_wolf_gamma(const FeatureMatrix& centered) {
  const Index n = centered.n_epochs();
  const Index p = centered.dims().size();
  if (n < 1) throw Error(ErrorKind::kDomain, "Ledoit-Wolf shrinkage needs data");
  const Matrix& x = centered.data();
  const double nd = static_cast<double>(n);

  // Maximum-likelihood (divisor n) covariance, as in the original estimator.
  Matrix emp = Matrix::Zero(p, p);
  emp.selfadjointView<Eigen::Lower>().rankUpdate(x, 1.0 / nd);
  emp.triangularView<Eigen::StrictlyUpper>() = emp.transpose();

  const double mu = emp.trace() / static_cast<double>(p);
  const double emp_sq = emp.squaredNorm();
  // ||emp - mu I||_F^2
  const double delta = emp_sq - 2.0 * mu * emp.trace() + static_cast<double>(p) * mu * mu;
  // sum_k ||x_k||^4, i.e. sum_k ||x_k x_k^T||_F^2
  const double fourth = x.colwise().squaredNorm().array().square().sum();
  double beta = (fourth / nd - emp_sq) / nd;
  beta = std::min(beta, delta);
  if (beta <= 0.0 || delta <= 0.0) return 0.0;
  return std::clamp(beta / delta, 0.0, 1.0);
}

ShrinkageResult shrink(const FeatureMatrix& centered, std::optional<double> gamma) {
  const double g = gamma ? *gamma : ledoit_wolf_gamma(centered);
  return shrink(sample_covariance(centered), g);
}

BlockCov within_class_cov(const FeatureMatrix& x, std::span<const Label> labels) {
  if (x.n_epochs() < 3) {
    throw Error(ErrorKind::kDomain, "within-class covariance needs at least 3 epochs");
  }
  return sample_covariance(center(x, labels, class_stats(x, labels)));
}

BlockCov global_cov(const FeatureMatrix& x) {
  if (x.n_epochs() < 2) {
    throw Error(ErrorKind::kDomain, "global covariance needs at least 2 epochs");
  }
  return sample_covariance(center(x, x.data().rowwise().mean()));
}

FeatureMatrix center_for_mode(const FeatureMatrix& x, CovMode mode,
                              std::span<const Label> labels) {
  if (mode == CovMode::kWithin) return center(x, labels, class_stats(x, labels));
  return center(x, x.data().rowwise().mean());
}

Structure structure_of(Estimator estimator) {
  switch (estimator) {
    case Estimator::kSlda: return {false, false};
    case Estimator::kToeplitz: return {true, true};
    case Estimator::kToeplitzA1Only: return {true, false};
    case Estimator::kToeplitzA2Only: return {false, true};
  }
  return {false, false};
}

CovEstimate estimate_covariance(const FeatureMatrix& x, std::span<const Label> labels,
                                CovMode mode, Structure structure,
                                std::optional<double> gamma) {
  if (x.layout() != Layout::kChannelPrime) {
    throw Error(ErrorKind::kDomain, "covariance estimation expects channel-prime features");
  }
  if (mode == CovMode::kWithin && x.n_epochs() < 3) {
    throw Error(ErrorKind::kDomain, "within-class covariance needs at least 3 epochs");
  }
  ShrinkageResult shrunk = shrink(center_for_mode(x, mode, labels), gamma);
  if (structure.average) {
    BlockToeplitzCov toeplitz = block_diagonal_average(shrunk.matrix);
    if (structure.taper) toeplitz = apply_taper(toeplitz);
    return {std::move(toeplitz), shrunk.gamma};
  }
  if (structure.taper) return {apply_taper(shrunk.matrix), shrunk.gamma};
  return {std::move(shrunk.matrix), shrunk.gamma};
}

BlockToeplitzCov toeplitz_tapered_cov(const FeatureMatrix& x, CovMode mode,
                                      std::span<const Label> labels,
                                      std::optional<double> gamma) {
  return std::get<BlockToeplitzCov>(
      estimate_covariance(x, labels, mode, Structure{true, true}, gamma).cov);
}

}  // namespace toeplitzlda
