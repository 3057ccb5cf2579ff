#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <variant>

#include "toeplitzlda/blockmat.hpp"

namespace toeplitzlda {

/// Class label of an epoch: 0 is non-target, 1 is target.
using Label = int;

/// Which centering the covariance estimate uses.
enum class CovMode {
  kWithin,  // per-class centering, needs labels
  kGlobal,  // global centering, label free
};

/// Covariance structure used by an LDA variant.
enum class Estimator {
  kSlda,            // shrinkage only
  kToeplitz,        // shrinkage, block-diagonal averaging, taper
  kToeplitzA1Only,  // shrinkage, block-diagonal averaging
  kToeplitzA2Only,  // shrinkage, taper
};

std::string_view to_string(CovMode mode);
std::string_view to_string(Estimator estimator);
/// Inverse of to_string; nullopt for unknown names.
std::optional<CovMode> parse_cov_mode(std::string_view name);
std::optional<Estimator> parse_estimator(std::string_view name);

struct ClassStats {
  Vector nontarget_mean;  // mu_1
  Vector target_mean;     // mu_2
  Index n_nontarget = 0;
  Index n_target = 0;
};

/// Per-class means. Throws unless both classes are present.
ClassStats class_stats(const FeatureMatrix& x, std::span<const Label> labels);

/// Subtracts one mean from every column.
FeatureMatrix center(const FeatureMatrix& x, const Vector& mean);
/// Subtracts the mean of each column's class.
FeatureMatrix center(const FeatureMatrix& x, std::span<const Label> labels,
                     const ClassStats& stats);

/// X X^T / (N_e - 1) of already centered data; exactly symmetric.
BlockCov sample_covariance(const FeatureMatrix& centered);

struct ShrinkageResult {
  BlockCov matrix;
  double gamma;  // shrinkage intensity in [0, 1]
  double nu;     // target level trace(S) / D
};

/// (1 - gamma) S + gamma nu I with nu = trace(S) / D.
ShrinkageResult shrink(const BlockCov& s, double gamma);

/// Ledoit-Wolf intensity for shrinking the sample covariance of `centered`
/// towards nu I, clipped to [0, 1].
double ledoit_wolf_gamma(const FeatureMatrix& centered);

/// Sample covariance of `centered`, shrunk with the given intensity or, when
/// absent, with ledoit_wolf_gamma.
ShrinkageResult shrink(const FeatureMatrix& centered, std::optional<double> gamma);

BlockCov within_class_cov(const FeatureMatrix& x, std::span<const Label> labels);
BlockCov global_cov(const FeatureMatrix& x);

/// Centering for the given mode. `labels` is only read for kWithin.
FeatureMatrix center_for_mode(const FeatureMatrix& x, CovMode mode,
                              std::span<const Label> labels);

/// Which of the two temporal assumptions to impose after shrinkage.
struct Structure {
  bool average = true;  // stationarity: block-Toeplitz by averaging
  bool taper = true;    // decay: linear taper over the lag
};

Structure structure_of(Estimator estimator);

struct CovEstimate {
  std::variant<BlockCov, BlockToeplitzCov> cov;
  double gamma;
};

/// center -> sample covariance -> shrink -> [average] -> [taper].
CovEstimate estimate_covariance(const FeatureMatrix& x, std::span<const Label> labels,
                                CovMode mode, Structure structure,
                                std::optional<double> gamma = std::nullopt);

/// The full ToeplitzLDA covariance: both assumptions on top of an
/// analytically shrunk covariance. `labels` is required for kWithin.
BlockToeplitzCov toeplitz_tapered_cov(const FeatureMatrix& x, CovMode mode,
                                      std::span<const Label> labels = {},
                                      std::optional<double> gamma = std::nullopt);

}  // namespace toeplitzlda
