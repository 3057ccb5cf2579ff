#include "toeplitzlda/bench.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "toeplitzlda/error.hpp"

namespace toeplitzlda {
namespace {

Epochs small_dataset(std::uint64_t seed, Index n = 240, double scale = 1.0) {
  SynthConfig cfg;
  cfg.n_epochs = n;
  cfg.n_channels = 4;
  cfg.n_times = 10;
  cfg.erp_scale = scale;
  return synthesize(cfg, seed);
}

TEST(Auc, Examples) {
  const std::vector<Label> l{0, 0, 1, 1};
  EXPECT_EQ(auc(std::vector<double>{1, 2, 3, 4}, l), 1.0);
  EXPECT_EQ(auc(std::vector<double>{4, 3, 2, 1}, l), 0.0);
  EXPECT_EQ(auc(std::vector<double>{5, 5, 5, 5}, l), 0.5);
  // Targets 1 and 4 against non-targets 3 and 2: two of four pairs won.
  const std::vector<double> s{3, 1, 2, 4};
  const std::vector<Label> l2{0, 1, 0, 1};
  EXPECT_EQ(auc(s, l2), 0.5);
  EXPECT_EQ(auc(s, l2), testing::pairwise_auc(s, l2));
}

TEST(Auc, RequiresBothClasses) {
  EXPECT_THROW(auc(std::vector<double>{1, 2}, std::vector<Label>{1, 1}), Error);
  EXPECT_THROW(auc(std::vector<double>{1, 2}, std::vector<Label>{0, 1, 1}), Error);
}

TEST(Auc, MatchesPairwiseOracleExhaustively) {
  // Every label pattern with both classes for m <= 12, scores drawn from a
  // small alphabet so ties are frequent.
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<int> level(0, 4);
  for (int m = 2; m <= 12; ++m) {
    for (std::uint32_t mask = 1; mask + 1 < (1u << m); ++mask) {
      std::vector<Label> labels(static_cast<std::size_t>(m));
      std::vector<double> scores(static_cast<std::size_t>(m));
      for (int i = 0; i < m; ++i) {
        labels[static_cast<std::size_t>(i)] = (mask >> i) & 1u;
        scores[static_cast<std::size_t>(i)] = 0.5 * level(gen);
      }
      ASSERT_EQ(auc(scores, labels), testing::pairwise_auc(scores, labels)) << m << " " << mask;
    }
  }
}

TEST(Auc, InvariantUnderIncreasingAffineMaps) {
  std::mt19937_64 gen(2);
  std::normal_distribution<double> dist;
  std::vector<double> s(50);
  std::vector<Label> l(50);
  for (std::size_t i = 0; i < 50; ++i) {
    s[i] = dist(gen);
    l[i] = i % 3 == 0;
  }
  std::vector<double> t(s);
  for (double& v : t) v = 2.5 * v + 100.0;
  EXPECT_EQ(auc(s, l), auc(t, l));
}

TEST(DrawSubsets, FullSetAndStratification) {
  const Epochs ep = small_dataset(3, 60);
  const auto& labels = *ep.labels();
  const auto full = draw_subsets(labels, 60, 3, 9);
  for (const auto& d : full) {
    ASSERT_EQ(d.size(), 60u);
    for (Index i = 0; i < 60; ++i) EXPECT_EQ(d[static_cast<std::size_t>(i)], i);
  }
  for (Index size : {6, 12, 24, 48}) {
    for (const auto& d : draw_subsets(labels, size, 7, 4)) {
      ASSERT_EQ(static_cast<Index>(d.size()), size);
      EXPECT_TRUE(std::is_sorted(d.begin(), d.end()));
      EXPECT_EQ(std::set<Index>(d.begin(), d.end()).size(), d.size());
      const auto targets = std::count_if(d.begin(), d.end(),
                                         [&](Index i) { return labels[static_cast<std::size_t>(i)] == 1; });
      EXPECT_EQ(targets, size / 6);
    }
  }
}

TEST(DrawSubsets, DeterministicPerDraw) {
  const Epochs ep = small_dataset(3, 120);
  const auto a = draw_subsets(*ep.labels(), 24, 7, 11);
  EXPECT_EQ(a, draw_subsets(*ep.labels(), 24, 7, 11));
  // Draw i depends only on (seed, i): asking for fewer draws gives a prefix.
  const auto b = draw_subsets(*ep.labels(), 24, 3, 11);
  EXPECT_TRUE(std::equal(b.begin(), b.end(), a.begin()));
  EXPECT_NE(a, draw_subsets(*ep.labels(), 24, 7, 12));
}

TEST(DrawSubsets, UniformModeKeepsBothClasses) {
  const Epochs ep = small_dataset(3, 60);
  for (const auto& d : draw_subsets(*ep.labels(), 7, 50, 5, DrawMode::kUniform)) {
    std::set<Label> seen;
    for (Index i : d) seen.insert((*ep.labels())[static_cast<std::size_t>(i)]);
    EXPECT_EQ(seen.size(), 2u);
  }
}

TEST(DrawSubsets, Errors) {
  const Epochs ep = small_dataset(3, 60);
  EXPECT_THROW(draw_subsets(*ep.labels(), 66, 1, 0), Error);
  EXPECT_THROW(draw_subsets(*ep.labels(), 7, 1, 0), Error);  // not a multiple of 6
  const std::vector<Label> one_class(12, 0);
  EXPECT_THROW(draw_subsets(one_class, 6, 1, 0, DrawMode::kUniform), Error);
}

TEST(Split, DisjointHalvesOfWholeGroups) {
  const Split s = train_validation_split(120, 6, 3);
  EXPECT_EQ(s.train.size(), 60u);
  EXPECT_EQ(s.validation.size(), 60u);
  std::set<Index> all(s.train.begin(), s.train.end());
  for (Index v : s.validation) EXPECT_FALSE(all.count(v));
  all.insert(s.validation.begin(), s.validation.end());
  EXPECT_EQ(all.size(), 120u);
  for (Index t : s.train) {
    const Index g = t / 6;
    for (Index k = 0; k < 6; ++k) EXPECT_TRUE(std::binary_search(s.train.begin(), s.train.end(), g * 6 + k));
  }
  EXPECT_EQ(train_validation_split(120, 6, 3).train, s.train);
}

TEST(RunBenchmark, DefaultGridCardinality) {
  SynthConfig sc;  // 1200 epochs, 8 x 20
  const Epochs ep = synthesize(sc, 1);
  BenchConfig cfg;
  const BenchReport r = run_benchmark(cfg, ep);
  EXPECT_EQ(r.rows.size(), 2u * 7u * 7u);
  EXPECT_EQ(r.cells.size(), 2u * 7u);
  EXPECT_EQ(r.n_train_pool, 600);
  EXPECT_EQ(r.n_validation, 600);
  for (const BenchRow& row : r.rows) {
    EXPECT_GE(row.auc, 0.0);
    EXPECT_LE(row.auc, 1.0);
    EXPECT_TRUE(std::isnan(row.fit_ms));
    EXPECT_EQ(row.n_train, row.subset_size);
  }
  const std::string csv = report_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "estimator,cov_mode,oracle_means,subset_size,draw,auc,fit_ms,n_train");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 98);
}

TEST(RunBenchmark, SkipsOversizedSubsets) {
  const Epochs ep = small_dataset(2, 120);
  BenchConfig cfg;
  cfg.subset_sizes = {6, 12, 96};
  cfg.n_draws = 2;
  const BenchReport r = run_benchmark(cfg, ep);
  EXPECT_EQ(r.rows.size(), 2u * 2u * 2u);
  ASSERT_EQ(r.notices.size(), 1u);
  EXPECT_NE(r.notices[0].find("96"), std::string::npos);
  const auto skipped = std::count_if(r.cells.begin(), r.cells.end(),
                                     [](const BenchCell& c) { return c.status == "skipped"; });
  EXPECT_EQ(skipped, 2);
  EXPECT_FALSE(r.mean_auc(Estimator::kSlda, CovMode::kWithin, 96).has_value());
  EXPECT_TRUE(r.mean_auc(Estimator::kSlda, CovMode::kWithin, 12).has_value());
}

TEST(RunBenchmark, DeterministicAcrossJobs) {
  const Epochs ep = small_dataset(4);
  BenchConfig cfg;
  cfg.subset_sizes = {6, 24, 96};
  cfg.estimators = {Estimator::kSlda, Estimator::kToeplitz, Estimator::kToeplitzA1Only};
  cfg.cov_modes = {CovMode::kWithin, CovMode::kGlobal};
  cfg.seed = 77;
  const std::string one = report_csv(run_benchmark(cfg, ep));
  cfg.jobs = 3;
  EXPECT_EQ(report_csv(run_benchmark(cfg, ep)), one);
  cfg.jobs = 1;
  EXPECT_EQ(report_csv(run_benchmark(cfg, ep)), one);
  cfg.seed = 78;
  EXPECT_NE(report_csv(run_benchmark(cfg, ep)), one);
}

TEST(RunBenchmark, AblationCellsPresent) {
  const Epochs ep = small_dataset(5);
  BenchConfig cfg;
  cfg.subset_sizes = {12, 48};
  cfg.n_draws = 2;
  cfg.oracle_means = true;
  cfg.estimators = {Estimator::kToeplitzA1Only, Estimator::kToeplitzA2Only, Estimator::kToeplitz};
  const BenchReport r = run_benchmark(cfg, ep);
  for (Estimator e : cfg.estimators) {
    for (Index size : cfg.subset_sizes) {
      const auto it = std::find_if(r.cells.begin(), r.cells.end(), [&](const BenchCell& c) {
        return c.estimator == e && c.subset_size == size;
      });
      ASSERT_NE(it, r.cells.end());
      EXPECT_TRUE(it->oracle_means);
      EXPECT_NE(it->status, "skipped");
    }
  }
  const std::string csv = report_csv(r);
  EXPECT_NE(csv.find("toeplitz_a1_only,within,true,12,0,"), std::string::npos);
}

TEST(RunBenchmark, FailedFitsAreRecorded) {
  const Epochs ep = small_dataset(6, 120);
  BenchConfig cfg;
  cfg.subset_sizes = {6};
  cfg.n_draws = 2;
  cfg.gamma = 0.0;  // singular covariances everywhere
  cfg.estimators = {Estimator::kSlda};
  const BenchReport r = run_benchmark(cfg, ep);
  ASSERT_EQ(r.rows.size(), 2u);
  for (const BenchRow& row : r.rows) {
    EXPECT_TRUE(std::isnan(row.auc));
    EXPECT_FALSE(row.error.empty());
  }
  EXPECT_EQ(r.cells[0].status, "failed");
  EXPECT_NE(report_csv(r).find(",NA,"), std::string::npos);
}

TEST(RunBenchmark, TimingIsOptIn) {
  const Epochs ep = small_dataset(7, 120);
  BenchConfig cfg;
  cfg.subset_sizes = {12};
  cfg.n_draws = 1;
  cfg.record_timing = true;
  for (const BenchRow& row : run_benchmark(cfg, ep).rows) EXPECT_GE(row.fit_ms, 0.0);
}

TEST(RunBenchmark, LearningCurvesRise) {
  // Mean over 20 datasets; allow one small inversion per curve.
  const std::vector<Index> sizes{6, 12, 24, 48, 96, 192, 384};
  std::vector<double> curve_s(sizes.size(), 0.0), curve_t(sizes.size(), 0.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SynthConfig sc;
    const Epochs ep = synthesize(sc, 1000 + seed);
    BenchConfig cfg;
    cfg.seed = seed;
    cfg.n_draws = 2;
    const BenchReport r = run_benchmark(cfg, ep);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      curve_s[i] += *r.mean_auc(Estimator::kSlda, CovMode::kWithin, sizes[i]) / 20.0;
      curve_t[i] += *r.mean_auc(Estimator::kToeplitz, CovMode::kWithin, sizes[i]) / 20.0;
    }
  }
  for (const auto* curve : {&curve_s, &curve_t}) {
    int inversions = 0;
    for (std::size_t i = 1; i < sizes.size(); ++i) {
      const double step = (*curve)[i] - (*curve)[i - 1];
      if (step < 0.0) {
        ++inversions;
        EXPECT_LE(-step, 0.01);
      }
    }
    EXPECT_LE(inversions, 1);
  }
}

TEST(Report, AggregateJsonDescribesRun) {
  const Epochs ep = small_dataset(8, 120);
  BenchConfig cfg;
  cfg.subset_sizes = {12, 24};
  cfg.n_draws = 2;
  const BenchReport r = run_benchmark(cfg, ep);
  const auto j = nlohmann::json::parse(aggregate_json(r, cfg));
  EXPECT_EQ(j.at("cells").size(), 4u);
  EXPECT_EQ(j.at("n_draws"), 2);
  EXPECT_EQ(j.at("n_train_pool"), 60);
  const std::string agg = aggregate_csv(r);
  EXPECT_EQ(std::count(agg.begin(), agg.end(), '\n'), 1 + 4);
}

}  // namespace
}  // namespace toeplitzlda
