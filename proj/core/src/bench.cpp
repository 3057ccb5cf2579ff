#include "toeplitzlda/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "toeplitzlda/error.hpp"
#include "toeplitzlda/lda.hpp"
#include "toeplitzlda/rng.hpp"

namespace toeplitzlda {
namespace {

constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kDrawStream = 12;
constexpr Index kMaxUniformRetries = 10000;

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

// First `count` entries of a partial Fisher-Yates shuffle of `pool`.
std::vector<Index> sample_without_replacement(std::vector<Index> pool, Index count, Rng& rng) {
  for (Index i = 0; i < count; ++i) {
    const auto remaining = static_cast<std::uint64_t>(pool.size()) - static_cast<std::uint64_t>(i);
    const auto j = static_cast<std::size_t>(i) + static_cast<std::size_t>(rng.below(remaining));
    std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(count));
  return pool;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::kDimension, std::to_string(scores.size()) + " scores for " +
                                           std::to_string(labels.size()) + " labels");
  }
  const std::size_t m = scores.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based, tie-averaged) ranks of the targets, doubled to stay in
  // integers.
  long double twice_rank_sum = 0;
  std::size_t n_target = 0;
  for (std::size_t i = 0; i < m;) {
    std::size_t j = i;
    while (j < m && scores[order[j]] == scores[order[i]]) ++j;
    const std::size_t twice_mid = i + 1 + j;  // 2 * average of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        twice_rank_sum += static_cast<long double>(twice_mid);
        ++n_target;
      }
    }
    i = j;
  }
  const std::size_t n_nontarget = m - n_target;
  if (n_target == 0 || n_nontarget == 0) {
    throw Error(ErrorKind::kDomain, "AUC needs both classes");
  }
  const long double nt = static_cast<long double>(n_target);
  const long double twice_u = twice_rank_sum - nt * (nt + 1);
  return static_cast<double>(twice_u / (2.0L * nt * static_cast<long double>(n_nontarget)));
}

std::vector<std::vector<Index>> draw_subsets(std::span<const Label> labels, Index size,
                                             Index n_draws, std::uint64_t seed, DrawMode mode,
                                             TargetRatio ratio) {
  const auto n = static_cast<Index>(labels.size());
  if (size > n) {
    throw Error(ErrorKind::kDomain, "subset size " + std::to_string(size) +
                                        " exceeds the " + std::to_string(n) +
                                        " available epochs");
  }
  if (size < 2) throw Error(ErrorKind::kDomain, "subsets need at least 2 epochs");
  std::vector<Index> targets;
  std::vector<Index> nontargets;
  for (Index i = 0; i < n; ++i) {
    (labels[static_cast<std::size_t>(i)] == 1 ? targets : nontargets).push_back(i);
  }
  if (targets.empty() || nontargets.empty()) {
    throw Error(ErrorKind::kDomain, "both classes must be present to draw subsets");
  }

  std::vector<std::vector<Index>> draws;
  for (Index draw = 0; draw < n_draws; ++draw) {
    Rng rng(derive_seed(seed, kDrawStream, static_cast<std::uint64_t>(draw)));
    std::vector<Index> picked;
    if (mode == DrawMode::kStratified) {
      if (size % ratio.group_size() != 0) {
        throw Error(ErrorKind::kDomain, "stratified subset size " + std::to_string(size) +
                                            " is not a multiple of the group size " +
                                            std::to_string(ratio.group_size()));
      }
      const Index n_t = size / ratio.group_size() * ratio.targets;
      const Index n_n = size - n_t;
      if (n_t > static_cast<Index>(targets.size()) ||
          n_n > static_cast<Index>(nontargets.size())) {
        throw Error(ErrorKind::kDomain, "stratification impossible: need " +
                                            std::to_string(n_t) + " targets and " +
                                            std::to_string(n_n) + " non-targets");
      }
      picked = sample_without_replacement(targets, n_t, rng);
      auto rest = sample_without_replacement(nontargets, n_n, rng);
      picked.insert(picked.end(), rest.begin(), rest.end());
    } else {
      std::vector<Index> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), Index{0});
      for (Index attempt = 0;; ++attempt) {
        if (attempt == kMaxUniformRetries) {
          throw Error(ErrorKind::kDomain, "could not draw a subset containing both classes");
        }
        picked = sample_without_replacement(all, size, rng);
        const bool has_target = std::any_of(picked.begin(), picked.end(), [&](Index i) {
          return labels[static_cast<std::size_t>(i)] == 1;
        });
        const bool has_nontarget = std::any_of(picked.begin(), picked.end(), [&](Index i) {
          return labels[static_cast<std::size_t>(i)] == 0;
        });
        if (has_target && has_nontarget) break;
      }
    }
    std::sort(picked.begin(), picked.end());
    draws.push_back(std::move(picked));
  }
  return draws;
}

Split train_validation_split(Index n_epochs, Index group_size, std::uint64_t seed) {
  if (group_size < 1) throw Error(ErrorKind::kDomain, "group size must be positive");
  const Index n_groups = (n_epochs + group_size - 1) / group_size;
  if (n_groups < 2) {
    throw Error(ErrorKind::kDomain, "need at least two stimulus groups to split");
  }
  std::vector<Index> groups(static_cast<std::size_t>(n_groups));
  std::iota(groups.begin(), groups.end(), Index{0});
  Rng rng(derive_seed(seed, kSplitStream));
  rng.shuffle(std::span<Index>(groups));

  Split split;
  for (Index k = 0; k < n_groups; ++k) {
    auto& side = k < n_groups / 2 ? split.train : split.validation;
    const Index g = groups[static_cast<std::size_t>(k)];
    for (Index e = g * group_size; e < std::min(n_epochs, (g + 1) * group_size); ++e) {
      side.push_back(e);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.validation.begin(), split.validation.end());
  return split;
}

std::optional<double> BenchReport::mean_auc(Estimator estimator, CovMode mode,
                                            Index size) const {
  for (const auto& cell : cells) {
    if (cell.estimator == estimator && cell.cov_mode == mode && cell.subset_size == size &&
        cell.n_ok > 0) {
      return cell.mean_auc;
    }
  }
  return std::nullopt;
}

BenchReport run_benchmark(const BenchConfig& cfg, const Epochs& dataset) {
  if (!dataset.labels()) throw Error(ErrorKind::kFormat, "benchmark needs a labelled dataset");
  if (cfg.n_draws < 1) throw Error(ErrorKind::kDomain, "need at least one draw");
  const auto& all_labels = *dataset.labels();
  const FeatureMatrix features = extract_features(dataset, cfg.feature);
  const Split split =
      train_validation_split(dataset.n_epochs(), cfg.ratio.group_size(), cfg.seed);

  std::vector<Label> train_labels;
  std::vector<Label> val_labels;
  for (Index i : split.train) train_labels.push_back(all_labels[static_cast<std::size_t>(i)]);
  for (Index i : split.validation) val_labels.push_back(all_labels[static_cast<std::size_t>(i)]);
  const FeatureMatrix train = features.select(split.train);
  const FeatureMatrix validation = features.select(split.validation);
  const ClassStats oracle = class_stats(train, train_labels);

  BenchReport report;
  report.n_train_pool = train.n_epochs();
  report.n_validation = validation.n_epochs();

  // Subsets depend on (seed, size, draw) only, so all estimators are
  // compared on the same epochs.
  struct Task {
    Estimator estimator;
    CovMode mode;
    Index size;
    Index draw;
    const std::vector<Index>* subset;
  };
  std::vector<std::vector<std::vector<Index>>> subsets;
  std::vector<Index> sizes;
  for (Index size : cfg.subset_sizes) {
    if (size > train.n_epochs()) {
      report.notices.push_back("subset size " + std::to_string(size) + " skipped: only " +
                               std::to_string(train.n_epochs()) + " training epochs");
      continue;
    }
    sizes.push_back(size);
    subsets.push_back(draw_subsets(train_labels, size, cfg.n_draws,
                                   derive_seed(cfg.seed, static_cast<std::uint64_t>(size)),
                                   cfg.draw_mode, cfg.ratio));
  }
  std::vector<Task> tasks;
  for (Estimator est : cfg.estimators) {
    for (CovMode mode : cfg.cov_modes) {
      for (std::size_t s = 0; s < sizes.size(); ++s) {
        for (Index draw = 0; draw < cfg.n_draws; ++draw) {
          tasks.push_back({est, mode, sizes[s], draw, &subsets[s][static_cast<std::size_t>(draw)]});
        }
      }
    }
  }

  report.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t t = next++; t < tasks.size(); t = next++) {
      const Task& task = tasks[t];
      BenchRow row{task.estimator, task.mode, cfg.oracle_means, task.size, task.draw,
                   std::numeric_limits<double>::quiet_NaN(),
                   std::numeric_limits<double>::quiet_NaN(),
                   static_cast<Index>(task.subset->size()), {}, true};
      try {
        const FeatureMatrix x = train.select(*task.subset);
        std::vector<Label> y;
        for (Index i : *task.subset) y.push_back(train_labels[static_cast<std::size_t>(i)]);
        FitOptions options;
        options.estimator = task.estimator;
        options.cov_mode = task.mode;
        options.gamma = cfg.gamma;
        if (cfg.oracle_means) options.mean_override = oracle;
        const auto start = std::chrono::steady_clock::now();
        const LdaModel model = fit(x, y, options);
        const auto stop = std::chrono::steady_clock::now();
        if (cfg.record_timing) {
          row.fit_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        }
        row.well_conditioned = model.well_conditioned;
        const Vector scores = decision_values(model, validation);
        row.auc = auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())),
                      val_labels);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      report.rows[t] = std::move(row);
    }
  };
  const unsigned jobs = std::max(1u, cfg.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (Estimator est : cfg.estimators) {
    for (CovMode mode : cfg.cov_modes) {
      for (Index size : cfg.subset_sizes) {
        BenchCell cell{est, mode, cfg.oracle_means, size, "skipped"};
        if (size <= train.n_epochs()) {
          double sum = 0.0;
          double sum_ms = 0.0;
          std::vector<double> values;
          for (const auto& row : report.rows) {
            if (row.estimator != est || row.cov_mode != mode || row.subset_size != size) continue;
            if (std::isnan(row.auc)) {
              ++cell.n_failed;
              continue;
            }
            values.push_back(row.auc);
            sum += row.auc;
            sum_ms += row.fit_ms;
          }
          cell.n_ok = static_cast<Index>(values.size());
          cell.status = cell.n_ok > 0 ? "ok" : "failed";
          if (cell.n_ok > 0) {
            cell.mean_auc = sum / static_cast<double>(cell.n_ok);
            cell.mean_fit_ms = sum_ms / static_cast<double>(cell.n_ok);
            double ss = 0.0;
            for (double v : values) ss += (v - cell.mean_auc) * (v - cell.mean_auc);
            cell.sd_auc = cell.n_ok > 1 ? std::sqrt(ss / static_cast<double>(cell.n_ok - 1)) : 0.0;
          }
        }
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

std::string report_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "estimator,cov_mode,oracle_means,subset_size,draw,auc,fit_ms,n_train\n";
  for (const auto& r : report.rows) {
    out << to_string(r.estimator) << ',' << to_string(r.cov_mode) << ','
        << (r.oracle_means ? "true" : "false") << ',' << r.subset_size << ',' << r.draw << ','
        << format_double(r.auc) << ',' << format_double(r.fit_ms) << ',' << r.n_train << '\n';
  }
  return out.str();
}

std::string aggregate_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "estimator,cov_mode,oracle_means,subset_size,status,n_ok,n_failed,mean_auc,sd_auc\n";
  for (const auto& c : report.cells) {
    const bool has = c.n_ok > 0;
    out << to_string(c.estimator) << ',' << to_string(c.cov_mode) << ','
        << (c.oracle_means ? "true" : "false") << ',' << c.subset_size << ',' << c.status << ','
        << c.n_ok << ',' << c.n_failed << ','
        << (has ? format_double(c.mean_auc) : "NA") << ','
        << (has ? format_double(c.sd_auc) : "NA") << '\n';
  }
  return out.str();
}

std::string aggregate_json(const BenchReport& report, const BenchConfig& cfg) {
  nlohmann::json doc;
  doc["seed"] = cfg.seed;
  doc["n_draws"] = cfg.n_draws;
  doc["feature"] = cfg.feature.to_string();
  doc["oracle_means"] = cfg.oracle_means;
  doc["draw_mode"] = cfg.draw_mode == DrawMode::kStratified ? "stratified" : "uniform";
  doc["n_train_pool"] = report.n_train_pool;
  doc["n_validation"] = report.n_validation;
  doc["notices"] = report.notices;
  auto& cells = doc["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json cell;
    cell["estimator"] = std::string(to_string(c.estimator));
    cell["cov_mode"] = std::string(to_string(c.cov_mode));
    cell["oracle_means"] = c.oracle_means;
    cell["subset_size"] = c.subset_size;
    cell["status"] = c.status;
    cell["n_ok"] = c.n_ok;
    cell["n_failed"] = c.n_failed;
    if (c.n_ok > 0) {
      cell["mean_auc"] = c.mean_auc;
      cell["sd_auc"] = c.sd_auc;
      if (cfg.record_timing) cell["mean_fit_ms"] = c.mean_fit_ms;
    }
    cells.push_back(std::move(cell));
  }
  return doc.dump(2) + "\n";
}

void write_report(const BenchReport& report, const BenchConfig& cfg,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, text] :
       {std::pair<const char*, std::string>{"report.csv", report_csv(report)},
        {"aggregate.json", aggregate_json(report, cfg)}}) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + (dir / name).string());
    out << text;
  }
}

}  // namespace toeplitzlda
