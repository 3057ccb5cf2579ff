#include "toeplitzlda/lda.hpp"

#include <variant>

#include <nlohmann/json.hpp>

#include "toeplitzlda/error.hpp"

namespace toeplitzlda {
namespace {

constexpr int kModelFormatVersion = 1;

SolveReport solve_structured(const CovEstimate& estimate, const Matrix& rhs) {
  if (const auto* dense = std::get_if<BlockCov>(&estimate.cov)) {
    return dense_solve(*dense, rhs);
  }
  const auto& toeplitz = std::get<BlockToeplitzCov>(estimate.cov);
  try {
    return block_levinson_solve(toeplitz, rhs);
  } catch (const SolveBreakdown&) {
    return dense_indefinite_solve(to_dense(toeplitz), rhs);
  }
}

}  // namespace

LdaModel fit(const FeatureMatrix& x, std::span<const Label> labels, const FitOptions& options) {
  if (x.layout() != Layout::kChannelPrime) {
    throw Error(ErrorKind::kDomain, "LDA expects channel-prime features");
  }
  const ClassStats means =
      options.mean_override ? *options.mean_override : class_stats(x, labels);
  if (means.target_mean.size() != x.dims().size() ||
      means.nontarget_mean.size() != x.dims().size()) {
    throw Error(ErrorKind::kDimension, "class means do not match feature dimension");
  }

  const CovEstimate estimate = estimate_covariance(
      x, labels, options.cov_mode, structure_of(options.estimator), options.gamma);

  LdaModel model;
  model.dims = x.dims();
  model.estimator = options.estimator;
  model.cov_mode = options.cov_mode;
  model.gamma = estimate.gamma;

  const Vector diff = means.target_mean - means.nontarget_mean;
  if (diff.isZero(0.0)) {
    model.weights = Vector::Zero(x.dims().size());
    model.bias = 0.0;
    model.degenerate = true;
    return model;
  }

  SolveReport report = solve_structured(estimate, Matrix(diff));
  model.weights = report.solution.col(0);
  model.solve_method = report.method;
  model.well_conditioned = report.well_conditioned;
  model.bias = -0.5 * model.weights.dot(means.nontarget_mean + means.target_mean);
  if (!model.weights.allFinite()) {
    throw Error(ErrorKind::kNumerical, "LDA weights are not finite");
  }
  return model;
}

Vector decision_values(const LdaModel& model, const FeatureMatrix& x) {
  if (x.dims().size() != model.weights.size()) {
    throw Error(ErrorKind::kDimension, "features have dimension " +
                                           std::to_string(x.dims().size()) +
                                           ", model expects " +
                                           std::to_string(model.weights.size()));
  }
  Vector scores = x.data().transpose() * model.weights;
  scores.array() += model.bias;
  return scores;
}

std::string model_to_json(const LdaModel& model) {
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["n_channels"] = model.dims.n_channels();
  doc["n_times"] = model.dims.n_times();
  doc["layout"] = to_string(Layout::kChannelPrime);
  doc["estimator"] = std::string(to_string(model.estimator));
  doc["cov_mode"] = std::string(to_string(model.cov_mode));
  doc["gamma"] = model.gamma;
  doc["bias"] = model.bias;
  doc["weights"] = std::vector<double>(model.weights.data(),
                                       model.weights.data() + model.weights.size());
  return doc.dump(2) + "\n";
}

LdaModel model_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorKind::kFormat, "unsupported model format_version " +
                                          doc.at("format_version").dump());
    }
    LdaModel model;
    model.dims = BlockDims(doc.at("n_channels").get<Index>(), doc.at("n_times").get<Index>());
    const auto estimator = parse_estimator(doc.at("estimator").get<std::string>());
    const auto cov_mode = parse_cov_mode(doc.at("cov_mode").get<std::string>());
    if (!estimator || !cov_mode) {
      throw Error(ErrorKind::kFormat, "unknown estimator or cov_mode in model");
    }
    model.estimator = *estimator;
    model.cov_mode = *cov_mode;
    model.gamma = doc.at("gamma").get<double>();
    model.bias = doc.at("bias").get<double>();
    const auto w = doc.at("weights").get<std::vector<double>>();
    if (static_cast<Index>(w.size()) != model.dims.size()) {
      throw Error(ErrorKind::kFormat, "model holds " + std::to_string(w.size()) +
                                          " weights for dimension " +
                                          std::to_string(model.dims.size()));
    }
    model.weights = Eigen::Map<const Vector>(w.data(), static_cast<Index>(w.size()));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed model JSON: ") + e.what());
  }
}

}  // namespace toeplitzlda
