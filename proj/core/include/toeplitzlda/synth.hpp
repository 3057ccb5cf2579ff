#pragma once

#include <cstdint>
#include <vector>

#include "toeplitzlda/blockmat.hpp"
#include "toeplitzlda/dataio.hpp"

namespace toeplitzlda {

/// Stationary background noise: independent unit-variance white sources,
/// each colored by its own FIR filter, mixed onto the channels, plus white
/// sensor noise.
struct NoiseModel {
  Matrix spatial_mix;                             // N_c x N_s
  std::vector<std::vector<double>> temporal_fir;  // N_s filters
  double noise_floor = 0.0;                       // sensor noise std

  Index n_channels() const { return spatial_mix.rows(); }
  Index n_sources() const { return spatial_mix.cols(); }

  /// Throws unless the shapes agree, taps are finite and the covariance is
  /// positive definite (full row rank mixing or a positive noise floor).
  void validate() const;
};

/// Targets and non-targets per stimulus group.
struct TargetRatio {
  Index targets = 1;
  Index nontargets = 5;
  Index group_size() const { return targets + nontargets; }
};

struct ErpSpec {
  Matrix target_template;     // N_c x N_t
  Matrix nontarget_template;  // N_c x N_t
  TargetRatio ratio;
};

/// Draws n_epochs independent epochs of the noise process. Epoch e uses its
/// own stream seeded from (seed, e), so output is bit-identical for a given
/// seed regardless of how generation is scheduled.
Epochs generate_noise(const NoiseModel& model, Index n_epochs, const BlockDims& dims,
                      std::uint64_t seed, double sfreq = 40.0, double t0 = 0.1);

/// Exact lag blocks: lag(d) = M diag(r_s(d)) M^T + [d = 0] floor^2 I with
/// r_s(d) = sum_k f_k f_{k+d}.
BlockToeplitzCov true_covariance(const NoiseModel& model, const BlockDims& dims);

/// FIR autocorrelation r(d) = sum_k f_k f_{k+d}.
double fir_autocorrelation(const std::vector<double>& taps, Index lag);

/// Assigns labels group by group (a seeded shuffle of positions in each
/// group of ratio.group_size() epochs) and adds the class template. Throws
/// Error(kDomain) if the epoch count is not a multiple of the group size.
Epochs inject_erp(const Epochs& noise, const ErpSpec& spec, std::uint64_t seed);

/// Default generator at a given sampling rate: N_s = N_c sources, a 0.2 s
/// half-sine low-pass FIR (8 taps at 40 Hz) normalized to unit gain, a fixed
/// well-conditioned mixing matrix and a sensor noise floor of 0.5 at 40 Hz.
/// The floor grows with sqrt(sfreq / 40) so that the white part carries the
/// same information per second at any rate.
NoiseModel default_noise_model(Index n_channels, double sfreq = 40.0);

/// Default ERP templates sampled at t0 + k / sfreq. Both classes share an
/// early negative component; targets add a late positive one. `scale`
/// multiplies both templates.
ErpSpec default_erp(const BlockDims& dims, double sfreq, double t0, double scale);

struct SynthConfig {
  Index n_epochs = 1200;
  Index n_channels = 8;
  Index n_times = 20;
  double sfreq = 40.0;
  double t0 = 0.1;
  /// Puts shrinkage LDA at an AUC of about 0.75 with 384 training epochs
  /// under the default benchmark protocol.
  double erp_scale = 1.25;
};

/// Default noise model plus default ERP templates.
Epochs synthesize(const SynthConfig& config, std::uint64_t seed);

}  // namespace toeplitzlda
