#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "toeplitzlda/covest.hpp"
#include "toeplitzlda/dataio.hpp"
#include "toeplitzlda/synth.hpp"

namespace toeplitzlda {

/// Area under the ROC curve via the Mann-Whitney statistic: the probability
/// that a target outscores a non-target, ties counting one half. Throws
/// unless both classes are present.
double auc(std::span<const double> scores, std::span<const Label> labels);

enum class DrawMode {
  kStratified,  // keep the target ratio of the stimulus groups
  kUniform,     // plain uniform sample, both classes still required
};

/// n_draws random index sets of `size` positions into `labels`, each sorted
/// ascending. Draw i is a function of (seed, i) only.
std::vector<std::vector<Index>> draw_subsets(std::span<const Label> labels, Index size,
                                             Index n_draws, std::uint64_t seed,
                                             DrawMode mode = DrawMode::kStratified,
                                             TargetRatio ratio = {});

struct Split {
  std::vector<Index> train;
  std::vector<Index> validation;
};

/// Shuffles consecutive blocks of `group_size` epochs and assigns half of
/// the blocks to training. Both index lists are sorted.
Split train_validation_split(Index n_epochs, Index group_size, std::uint64_t seed);

struct BenchConfig {
  std::vector<Index> subset_sizes{6, 12, 24, 48, 96, 192, 384};
  Index n_draws = 7;
  std::vector<Estimator> estimators{Estimator::kSlda, Estimator::kToeplitz};
  std::vector<CovMode> cov_modes{CovMode::kWithin};
  /// Class means from the whole training split; only the covariance comes
  /// from the subset.
  bool oracle_means = false;
  FeatureConfig feature;
  std::uint64_t seed = 0;
  DrawMode draw_mode = DrawMode::kStratified;
  std::optional<double> gamma;
  TargetRatio ratio;
  unsigned jobs = 1;
  /// Fit times make reports machine dependent, so they are opt-in.
  bool record_timing = false;
};

struct BenchRow {
  Estimator estimator;
  CovMode cov_mode;
  bool oracle_means;
  Index subset_size;
  Index draw;
  double auc;      // NaN when the fit failed
  double fit_ms;   // NaN unless timing is recorded
  Index n_train;
  std::string error;
  /// False when the covariance was not positive definite and the fit fell
  /// back to an indefinite solve. Not part of the CSV.
  bool well_conditioned = true;
};

struct BenchCell {
  Estimator estimator;
  CovMode cov_mode;
  bool oracle_means;
  Index subset_size;
  std::string status;  // "ok", "failed" (every draw failed), "skipped"
  Index n_ok = 0;
  Index n_failed = 0;
  double mean_auc = 0.0;
  double sd_auc = 0.0;
  double mean_fit_ms = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::vector<BenchCell> cells;
  std::vector<std::string> notices;
  Index n_train_pool = 0;
  Index n_validation = 0;

  /// Mean AUC of one cell; nullopt if it is missing or has no successful draw.
  std::optional<double> mean_auc(Estimator estimator, CovMode mode, Index size) const;
};

/// Fits every (estimator, cov_mode, subset size, draw) cell on a subset of
/// the training split and scores it on the validation split. Failed fits
/// are recorded per row and do not abort the run. The report does not
/// depend on cfg.jobs.
BenchReport run_benchmark(const BenchConfig& cfg, const Epochs& dataset);

/// CSV with header
/// estimator,cov_mode,oracle_means,subset_size,draw,auc,fit_ms,n_train
std::string report_csv(const BenchReport& report);
/// Per-cell aggregates as CSV, for terminal output.
std::string aggregate_csv(const BenchReport& report);
/// Aggregates plus run metadata as a JSON document.
std::string aggregate_json(const BenchReport& report, const BenchConfig& cfg);

/// Writes report.csv and aggregate.json into `dir`.
void write_report(const BenchReport& report, const BenchConfig& cfg,
                  const std::filesystem::path& dir);

}  // namespace toeplitzlda
