#include "cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "toeplitzlda/bench.hpp"
#include "toeplitzlda/dataio.hpp"
#include "toeplitzlda/error.hpp"
#include "toeplitzlda/lda.hpp"
#include "toeplitzlda/synth.hpp"

namespace toeplitzlda::cli {
namespace {

namespace fs = std::filesystem;

const std::vector<std::string> kEstimatorNames{"slda", "toeplitz", "toeplitz_a1_only",
                                               "toeplitz_a2_only"};
const std::vector<std::string> kCovModeNames{"within", "global"};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDomain:
      return kUsage;
    case ErrorKind::kNumerical:
      return kNumerical;
    case ErrorKind::kDimension:
    case ErrorKind::kFormat:
    case ErrorKind::kIo:
      return kData;
  }
  return kData;
}

std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

ClassStats read_means(const fs::path& path, Index dim) {
  try {
    const auto doc = nlohmann::json::parse(read_text(path));
    const auto mu1 = doc.at("nontarget_mean").get<std::vector<double>>();
    const auto mu2 = doc.at("target_mean").get<std::vector<double>>();
    if (static_cast<Index>(mu1.size()) != dim || static_cast<Index>(mu2.size()) != dim) {
      throw Error(ErrorKind::kDimension, "means file holds vectors of length " +
                                             std::to_string(mu1.size()) + "/" +
                                             std::to_string(mu2.size()) + ", features have " +
                                             std::to_string(dim));
    }
    ClassStats st;
    st.nontarget_mean = Eigen::Map<const Vector>(mu1.data(), dim);
    st.target_mean = Eigen::Map<const Vector>(mu2.data(), dim);
    st.n_nontarget = doc.value("n_nontarget", Index{1});
    st.n_target = doc.value("n_target", Index{1});
    return st;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, "malformed means file " + path.string() + ": " + e.what());
  }
}

struct Options {
  std::uint64_t seed = 0;

  // synth
  Index n_epochs = 1200;
  Index n_channels = 8;
  Index n_times = 20;
  double sfreq = 40.0;
  double t0 = 0.1;
  double erp_scale = SynthConfig{}.erp_scale;
  std::string out_dir;

  // bench / fit / score
  std::string dataset;
  std::vector<std::string> estimators{"slda", "toeplitz"};
  std::vector<std::string> cov_modes{"within"};
  std::vector<Index> sizes{6, 12, 24, 48, 96, 192, 384};
  Index draws = 7;
  bool oracle_means = false;
  std::string feature = "all";
  std::optional<double> gamma;
  bool uniform_draws = false;
  bool timing = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  std::string estimator = "toeplitz";
  std::string cov_mode = "within";
  std::string model;
  std::string means_file;
};

int cmd_synth(const Options& o, std::ostream& out, std::ostream& err) {
  SynthConfig cfg;
  cfg.n_epochs = o.n_epochs;
  cfg.n_channels = o.n_channels;
  cfg.n_times = o.n_times;
  cfg.sfreq = o.sfreq;
  cfg.t0 = o.t0;
  cfg.erp_scale = o.erp_scale;
  if (cfg.n_epochs % TargetRatio{}.group_size() != 0) {
    err << "error: --n-epochs must be a multiple of the stimulus group size "
        << TargetRatio{}.group_size() << " (1 target : 5 non-targets), got " << cfg.n_epochs
        << "\n";
    return kUsage;
  }
  const Epochs ep = synthesize(cfg, o.seed);
  write_dataset(ep, o.out_dir);
  const auto& labels = *ep.labels();
  nlohmann::json summary;
  summary["out_dir"] = o.out_dir;
  summary["seed"] = o.seed;
  summary["n_epochs"] = ep.n_epochs();
  summary["n_channels"] = ep.dims().n_channels();
  summary["n_times"] = ep.dims().n_times();
  summary["sfreq"] = ep.sfreq();
  summary["t0"] = ep.t0();
  summary["erp_scale"] = cfg.erp_scale;
  summary["n_targets"] = std::count(labels.begin(), labels.end(), 1);
  summary["checksum"] = hex64(content_checksum(ep));
  out << summary.dump(2) << "\n";
  return kOk;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  const Epochs ep = read_dataset(o.dataset);
  BenchConfig cfg;
  cfg.subset_sizes = o.sizes;
  cfg.n_draws = o.draws;
  cfg.estimators.clear();
  for (const auto& name : o.estimators) cfg.estimators.push_back(*parse_estimator(name));
  cfg.cov_modes.clear();
  for (const auto& name : o.cov_modes) cfg.cov_modes.push_back(*parse_cov_mode(name));
  cfg.oracle_means = o.oracle_means;
  cfg.feature = FeatureConfig::parse(o.feature);
  cfg.seed = o.seed;
  cfg.draw_mode = o.uniform_draws ? DrawMode::kUniform : DrawMode::kStratified;
  cfg.gamma = o.gamma;
  cfg.jobs = o.jobs;
  cfg.record_timing = o.timing;

  const BenchReport report = run_benchmark(cfg, ep);
  for (const auto& notice : report.notices) err << "note: " << notice << "\n";
  write_report(report, cfg, o.out_dir);
  out << aggregate_csv(report);

  bool any_ran = false;
  bool any_ok = false;
  for (const BenchCell& cell : report.cells) {
    if (cell.status == "skipped") continue;
    any_ran = true;
    if (cell.n_ok > 0) any_ok = true;
  }
  if (any_ran && !any_ok) {
    std::string first;
    for (const BenchRow& row : report.rows) {
      if (!row.error.empty()) {
        first = row.error;
        break;
      }
    }
    err << "error: every benchmark cell failed" << (first.empty() ? "" : ": " + first) << "\n";
    return kNumerical;
  }
  if (!any_ran) {
    err << "error: no subset size fits into the " << report.n_train_pool
        << " training epochs\n";
    return kUsage;
  }
  return kOk;
}

int cmd_fit(const Options& o, std::ostream& out, std::ostream& err) {
  const Epochs ep = read_dataset(o.dataset);
  const FeatureConfig feature = FeatureConfig::parse(o.feature);
  const FeatureMatrix x = extract_features(ep, feature);
  FitOptions opt;
  opt.estimator = *parse_estimator(o.estimator);
  opt.cov_mode = *parse_cov_mode(o.cov_mode);
  opt.gamma = o.gamma;
  if (!o.means_file.empty()) opt.mean_override = read_means(o.means_file, x.dims().size());

  std::vector<Label> labels;
  if (ep.labels()) {
    labels = *ep.labels();
  } else if (opt.cov_mode == CovMode::kWithin || !opt.mean_override) {
    err << "error: dataset has no labels; use --cov-mode global with --means-file\n";
    return kUsage;
  }
  const LdaModel model = fit(x, labels, opt);
  if (model.degenerate) err << "warning: class means coincide, weights are zero\n";
  if (!model.well_conditioned) {
    err << "warning: covariance not positive definite, solved with "
        << to_string(model.solve_method) << "\n";
  }
  auto doc = nlohmann::json::parse(model_to_json(model));
  doc["feature"] = feature.to_string();
  write_text(o.model, doc.dump(2) + "\n");

  nlohmann::json summary;
  summary["model"] = o.model;
  summary["estimator"] = std::string(to_string(model.estimator));
  summary["cov_mode"] = std::string(to_string(model.cov_mode));
  summary["gamma"] = model.gamma;
  summary["n_features"] = model.dims.size();
  summary["n_epochs"] = x.n_epochs();
  summary["solve_method"] = std::string(to_string(model.solve_method));
  summary["well_conditioned"] = model.well_conditioned;
  out << summary.dump(2) << "\n";
  return kOk;
}

int cmd_score(const Options& o, bool feature_given, std::ostream& out, std::ostream& err) {
  const std::string text = read_text(o.model);
  const LdaModel model = model_from_json(text);
  std::string feature_text = o.feature;
  if (!feature_given) {
    try {
      feature_text = nlohmann::json::parse(text).value("feature", std::string("all"));
    } catch (const nlohmann::json::exception&) {
      feature_text = "all";
    }
  }
  const Epochs ep = read_dataset(o.dataset);
  const FeatureMatrix x = extract_features(ep, FeatureConfig::parse(feature_text));
  if (!(x.dims() == model.dims)) {
    throw Error(ErrorKind::kDimension,
                "model expects " + std::to_string(model.dims.n_channels()) + " channels x " +
                    std::to_string(model.dims.n_times()) + " times, dataset features are " +
                    std::to_string(x.dims().n_channels()) + " x " +
                    std::to_string(x.dims().n_times()));
  }
  const Vector scores = decision_values(model, x);
  const bool labelled = ep.labels().has_value();
  out << (labelled ? "epoch,score,label\n" : "epoch,score\n");
  for (Index e = 0; e < scores.size(); ++e) {
    out << e << "," << shortest(scores(e));
    if (labelled) out << "," << (*ep.labels())[static_cast<std::size_t>(e)];
    out << "\n";
  }
  if (labelled) {
    const auto& labels = *ep.labels();
    const bool both = std::count(labels.begin(), labels.end(), 1) > 0 &&
                      std::count(labels.begin(), labels.end(), 0) > 0;
    if (both) {
      err << "auc: "
          << shortest(auc(std::span<const double>(scores.data(),
                                                  static_cast<std::size_t>(scores.size())),
                          labels))
          << "\n";
    }
  }
  return kOk;
}

std::string names_list(const std::vector<std::string>& names) {
  std::string s;
  for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
  return s;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"ToeplitzLDA: LDA with block-Toeplitz spatiotemporal covariance"};
  app.name(args.empty() ? "toeplitzlda" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--seed", o.seed, "Random seed (falls back to $TOEPLITZLDA_SEED, then 0)")
      ->envname("TOEPLITZLDA_SEED");

  const auto estimator_check = CLI::IsMember(kEstimatorNames);
  const auto cov_mode_check = CLI::IsMember(kCovModeNames);
  const std::string estimator_help = "one of: " + names_list(kEstimatorNames);
  const std::string cov_mode_help = "one of: " + names_list(kCovModeNames);
  const std::string feature_help =
      "Features: all | window:A,B (seconds, [A,B)) | intervals:B0,B1,... (interval means)";

  auto* synth = app.add_subcommand("synth", "Generate a labelled synthetic dataset");
  synth->add_option("--n-epochs", o.n_epochs, "Number of epochs (multiple of 6)")
      ->capture_default_str();
  synth->add_option("--n-channels", o.n_channels, "Channels")->capture_default_str();
  synth->add_option("--n-times", o.n_times, "Samples per epoch")->capture_default_str();
  synth->add_option("--sfreq", o.sfreq, "Sampling rate in Hz")->capture_default_str();
  synth->add_option("--t0", o.t0, "Time of the first sample after stimulus onset, seconds")
      ->capture_default_str();
  synth->add_option("--erp-scale", o.erp_scale, "Amplitude multiplier of the ERP templates")
      ->capture_default_str();
  synth->add_option("--out-dir", o.out_dir, "Dataset directory to write")->required();

  auto* bench = app.add_subcommand("bench", "Run the subset-size benchmark");
  bench->add_option("--dataset", o.dataset, "Dataset directory")->required();
  bench->add_option("--estimators", o.estimators, "Comma separated, each " + estimator_help)
      ->delimiter(',')
      ->check(estimator_check)
      ->capture_default_str();
  bench->add_option("--cov-modes", o.cov_modes, "Comma separated, each " + cov_mode_help)
      ->delimiter(',')
      ->check(cov_mode_check)
      ->capture_default_str();
  bench->add_option("--sizes", o.sizes, "Comma separated training subset sizes")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--draws", o.draws, "Random draws per subset size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_flag("--oracle-means", o.oracle_means,
                  "Class means from the whole training split, covariance from the subset");
  bench->add_option("--feature", o.feature, feature_help)->capture_default_str();
  bench->add_option("--gamma", o.gamma, "Fixed shrinkage intensity in [0,1] (default: Ledoit-Wolf)")
      ->check(CLI::Range(0.0, 1.0));
  bench->add_flag("--uniform-draws", o.uniform_draws,
                  "Plain uniform subsets instead of 1:5 stratified ones");
  bench->add_flag("--timing", o.timing, "Record fit wall time (makes the report machine dependent)");
  bench->add_option("--jobs", o.jobs, "Worker threads (results do not depend on it)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench->add_option("--out-dir", o.out_dir, "Directory for report.csv and aggregate.json")
      ->required();

  auto* fit_cmd = app.add_subcommand("fit", "Fit a classifier and write it as JSON");
  fit_cmd->add_option("--dataset", o.dataset, "Dataset directory")->required();
  fit_cmd->add_option("--model", o.model, "Model file to write")->required();
  fit_cmd->add_option("--estimator", o.estimator, estimator_help)
      ->check(estimator_check)
      ->capture_default_str();
  fit_cmd->add_option("--cov-mode", o.cov_mode, cov_mode_help)
      ->check(cov_mode_check)
      ->capture_default_str();
  fit_cmd->add_option("--feature", o.feature, feature_help)->capture_default_str();
  fit_cmd->add_option("--gamma", o.gamma, "Fixed shrinkage intensity in [0,1] (default: Ledoit-Wolf)")
      ->check(CLI::Range(0.0, 1.0));
  fit_cmd->add_option("--means-file", o.means_file,
                      "JSON with nontarget_mean and target_mean arrays replacing the class means")
      ->check(CLI::ExistingFile);

  auto* score = app.add_subcommand("score", "Print decision values of a model on a dataset");
  score->add_option("--dataset", o.dataset, "Dataset directory")->required();
  score->add_option("--model", o.model, "Model file")->required();
  auto* score_feature =
      score->add_option("--feature", o.feature, feature_help + " (default: as fitted)");

  std::vector<std::string> argv(args.rbegin(), args.rend());
  if (!argv.empty()) argv.pop_back();
  try {
    app.parse(argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kOk;
    if (e.get_name() == "ValidationError" || e.get_name() == "ConversionError") {
      err << "valid estimators: " << names_list(kEstimatorNames) << "\n"
          << "valid covariance modes: " << names_list(kCovModeNames) << "\n";
    }
    return kUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out, err);
    if (bench->parsed()) return cmd_bench(o, out, err);
    if (fit_cmd->parsed()) return cmd_fit(o, out, err);
    if (score->parsed()) return cmd_score(o, score_feature->count() > 0, out, err);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace toeplitzlda::cli
