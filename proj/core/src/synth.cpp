#include "toeplitzlda/synth.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <Eigen/LU>

#include "toeplitzlda/error.hpp"
#include "toeplitzlda/rng.hpp"

namespace toeplitzlda {
namespace {

constexpr std::uint64_t kNoiseStream = 1;
constexpr std::uint64_t kLabelStream = 2;

double gaussian_bump(double t, double center, double width) {
  const double z = (t - center) / width;
  return std::exp(-0.5 * z * z);
}

}  // namespace

void NoiseModel::validate() const {
  if (spatial_mix.rows() < 1 || spatial_mix.cols() < 1) {
    throw Error(ErrorKind::kDomain, "spatial mixing matrix is empty");
  }
  if (static_cast<Index>(temporal_fir.size()) != spatial_mix.cols()) {
    throw Error(ErrorKind::kDimension, std::to_string(temporal_fir.size()) +
                                           " FIR filters for " +
                                           std::to_string(spatial_mix.cols()) + " sources");
  }
  for (const auto& taps : temporal_fir) {
    if (taps.empty()) throw Error(ErrorKind::kDomain, "FIR filter without taps");
    for (double f : taps) {
      if (!std::isfinite(f)) throw Error(ErrorKind::kDomain, "non-finite FIR tap");
    }
  }
  if (!spatial_mix.allFinite() || !(noise_floor >= 0.0) || !std::isfinite(noise_floor)) {
    throw Error(ErrorKind::kDomain, "mixing matrix and noise floor must be finite, floor >= 0");
  }
  if (noise_floor == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(spatial_mix);
    if (lu.rank() < spatial_mix.rows()) {
      throw Error(ErrorKind::kDomain,
                  "mixing matrix lacks full row rank and there is no noise floor; "
                  "the covariance would be singular");
    }
  }
}

double fir_autocorrelation(const std::vector<double>& taps, Index lag) {
  const auto d = static_cast<std::size_t>(lag < 0 ? -lag : lag);
  double r = 0.0;
  for (std::size_t k = 0; k + d < taps.size(); ++k) r += taps[k] * taps[k + d];
  return r;
}

Epochs generate_noise(const NoiseModel& model, Index n_epochs, const BlockDims& dims,
                      std::uint64_t seed, double sfreq, double t0) {
  model.validate();
  if (model.n_channels() != dims.n_channels()) {
    throw Error(ErrorKind::kDimension, "noise model has " +
                                           std::to_string(model.n_channels()) +
                                           " channels, requested " +
                                           std::to_string(dims.n_channels()));
  }
  if (n_epochs < 0) throw Error(ErrorKind::kDomain, "negative epoch count");

  const Index nt = dims.n_times();
  const Index ns = model.n_sources();
  std::vector<double> data(static_cast<std::size_t>(n_epochs * dims.size()));
  Matrix sources(ns, nt);
  std::vector<double> stream;
  for (Index e = 0; e < n_epochs; ++e) {
    Rng rng(derive_seed(seed, kNoiseStream, static_cast<std::uint64_t>(e)));
    for (Index s = 0; s < ns; ++s) {
      const auto& taps = model.temporal_fir[static_cast<std::size_t>(s)];
      const auto len = static_cast<Index>(taps.size());
      // len warm-up samples precede the epoch, so every output sample sees
      // the full filter.
      stream.resize(static_cast<std::size_t>(nt + len));
      for (double& u : stream) u = rng.normal();
      for (Index t = 0; t < nt; ++t) {
        double y = 0.0;
        for (Index k = 0; k < len; ++k) {
          y += taps[static_cast<std::size_t>(k)] * stream[static_cast<std::size_t>(t + len - k)];
        }
        sources(s, t) = y;
      }
    }
    Eigen::Map<Matrix> epoch(data.data() + e * dims.size(), dims.n_channels(), nt);
    epoch.noalias() = model.spatial_mix * sources;
    if (model.noise_floor > 0.0) {
      for (Index c = 0; c < dims.n_channels(); ++c) {
        for (Index t = 0; t < nt; ++t) epoch(c, t) += model.noise_floor * rng.normal();
      }
    }
  }
  return Epochs(n_epochs, dims, std::move(data), sfreq, t0);
}

BlockToeplitzCov true_covariance(const NoiseModel& model, const BlockDims& dims) {
  model.validate();
  if (model.n_channels() != dims.n_channels()) {
    throw Error(ErrorKind::kDimension, "noise model does not match channel count");
  }
  std::vector<Matrix> lags;
  const Index ns = model.n_sources();
  for (Index d = 0; d < dims.n_times(); ++d) {
    Vector r(ns);
    for (Index s = 0; s < ns; ++s) {
      r[s] = fir_autocorrelation(model.temporal_fir[static_cast<std::size_t>(s)], d);
    }
    Matrix block = model.spatial_mix * r.asDiagonal() * model.spatial_mix.transpose();
    if (d == 0) block.diagonal().array() += model.noise_floor * model.noise_floor;
    lags.push_back(std::move(block));
  }
  return BlockToeplitzCov(dims, lags);
}

Epochs inject_erp(const Epochs& noise, const ErpSpec& spec, std::uint64_t seed) {
  const BlockDims& dims = noise.dims();
  for (const Matrix* t : {&spec.target_template, &spec.nontarget_template}) {
    if (t->rows() != dims.n_channels() || t->cols() != dims.n_times()) {
      throw Error(ErrorKind::kDimension, "ERP template shape does not match the epochs");
    }
    if (!t->allFinite()) throw Error(ErrorKind::kDomain, "ERP template is not finite");
  }
  if (spec.ratio.targets < 1 || spec.ratio.nontargets < 1) {
    throw Error(ErrorKind::kDomain, "target ratio needs at least one epoch of each class");
  }
  const Index group = spec.ratio.group_size();
  if (noise.n_epochs() % group != 0) {
    throw Error(ErrorKind::kDomain,
                "epoch count " + std::to_string(noise.n_epochs()) +
                    " is not a multiple of the stimulus group size " + std::to_string(group) +
                    " (" + std::to_string(spec.ratio.targets) + ":" +
                    std::to_string(spec.ratio.nontargets) + " target ratio)");
  }

  Rng rng(derive_seed(seed, kLabelStream));
  std::vector<Label> labels(static_cast<std::size_t>(noise.n_epochs()), 0);
  std::vector<Index> positions(static_cast<std::size_t>(group));
  for (Index g = 0; g < noise.n_epochs() / group; ++g) {
    std::iota(positions.begin(), positions.end(), Index{0});
    rng.shuffle(std::span<Index>(positions));
    for (Index k = 0; k < spec.ratio.targets; ++k) {
      labels[static_cast<std::size_t>(g * group + positions[static_cast<std::size_t>(k)])] = 1;
    }
  }

  std::vector<double> data = noise.data();
  for (Index e = 0; e < noise.n_epochs(); ++e) {
    Eigen::Map<Matrix> epoch(data.data() + e * dims.size(), dims.n_channels(), dims.n_times());
    epoch += labels[static_cast<std::size_t>(e)] == 1 ? spec.target_template
                                                      : spec.nontarget_template;
  }
  return Epochs(noise.n_epochs(), dims, std::move(data), noise.sfreq(), noise.t0(),
                noise.channel_names(), std::move(labels));
}

NoiseModel default_noise_model(Index n_channels, double sfreq) {
  if (n_channels < 1 || !(sfreq > 0.0)) {
    throw Error(ErrorKind::kDomain, "need at least one channel and a positive sampling rate");
  }
  NoiseModel model;
  // Neighbouring sources project onto neighbouring channels.
  model.spatial_mix.resize(n_channels, n_channels);
  for (Index c = 0; c < n_channels; ++c) {
    for (Index s = 0; s < n_channels; ++s) {
      const double dist = static_cast<double>(c - s);
      model.spatial_mix(c, s) = std::exp(-0.5 * dist * dist);
    }
  }
  const auto len = std::max<Index>(1, static_cast<Index>(std::lround(0.2 * sfreq)));
  std::vector<double> taps(static_cast<std::size_t>(len));
  double energy = 0.0;
  for (Index k = 0; k < len; ++k) {
    taps[static_cast<std::size_t>(k)] =
        std::sin(std::numbers::pi * (static_cast<double>(k) + 0.5) / static_cast<double>(len));
    energy += taps[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(k)];
  }
  for (double& f : taps) f /= std::sqrt(energy);
  model.temporal_fir.assign(static_cast<std::size_t>(n_channels), taps);
  model.noise_floor = 0.5 * std::sqrt(sfreq / 40.0);
  return model;
}

ErpSpec default_erp(const BlockDims& dims, double sfreq, double t0, double scale) {
  ErpSpec spec;
  spec.target_template.resize(dims.n_channels(), dims.n_times());
  spec.nontarget_template.resize(dims.n_channels(), dims.n_times());
  const double span = std::max<double>(1.0, static_cast<double>(dims.n_channels() - 1));
  for (Index c = 0; c < dims.n_channels(); ++c) {
    const double pos = static_cast<double>(c) / span;
    const double early_weight = 1.0 - 0.5 * pos;
    const double late_weight = 0.5 + 0.5 * pos;
    for (Index k = 0; k < dims.n_times(); ++k) {
      const double t = t0 + static_cast<double>(k) / sfreq;
      const double early = -early_weight * gaussian_bump(t, 0.20, 0.03);
      const double late = late_weight * gaussian_bump(t, 0.35, 0.08);
      spec.nontarget_template(c, k) = scale * early;
      spec.target_template(c, k) = scale * (early + late);
    }
  }
  return spec;
}

Epochs synthesize(const SynthConfig& config, std::uint64_t seed) {
  const BlockDims dims(config.n_channels, config.n_times);
  const NoiseModel model = default_noise_model(config.n_channels, config.sfreq);
  const ErpSpec erp = default_erp(dims, config.sfreq, config.t0, config.erp_scale);
  if (config.n_epochs % erp.ratio.group_size() != 0) {
    throw Error(ErrorKind::kDomain,
                "epoch count " + std::to_string(config.n_epochs) +
                    " is not a multiple of the stimulus group size " +
                    std::to_string(erp.ratio.group_size()));
  }
  const Epochs noise =
      generate_noise(model, config.n_epochs, dims, seed, config.sfreq, config.t0);
  return inject_erp(noise, erp, seed);
}

}  // namespace toeplitzlda
