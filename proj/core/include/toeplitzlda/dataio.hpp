#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "toeplitzlda/blockmat.hpp"
#include "toeplitzlda/covest.hpp"

namespace toeplitzlda {

/// N_e epochs of N_c x N_t samples with optional binary labels.
class Epochs {
 public:
  /// `data` is epoch-major, then channel, then time. Throws on a size
  /// mismatch, non-finite samples, labels outside {0, 1} or a label count
  /// different from the epoch count.
  Epochs(Index n_epochs, BlockDims dims, std::vector<double> data, double sfreq, double t0,
         std::vector<std::string> channel_names = {},
         std::optional<std::vector<Label>> labels = std::nullopt);

  Index n_epochs() const { return n_epochs_; }
  const BlockDims& dims() const { return dims_; }
  double sfreq() const { return sfreq_; }
  /// Offset of the first sample relative to stimulus onset, in seconds.
  double t0() const { return t0_; }
  const std::vector<std::string>& channel_names() const { return channel_names_; }
  const std::vector<double>& data() const { return data_; }
  const std::optional<std::vector<Label>>& labels() const { return labels_; }

  /// Epoch e as an N_c x N_t matrix (rows are channels).
  Eigen::Map<const Matrix> epoch(Index e) const;

  Epochs with_labels(std::vector<Label> labels) const;

 private:
  Index n_epochs_;
  BlockDims dims_;
  std::vector<double> data_;
  double sfreq_;
  double t0_;
  std::vector<std::string> channel_names_;
  std::optional<std::vector<Label>> labels_;
};

inline constexpr int kDatasetFormatVersion = 1;

/// Writes meta.json, data.bin (little-endian float64) and, for labelled
/// data, labels.bin (one byte per epoch) into `dir`, creating it if needed.
void write_dataset(const Epochs& epochs, const std::filesystem::path& dir);
/// Inverse of write_dataset. Throws Error(kFormat) on a version or size
/// mismatch and on non-finite samples, Error(kIo) if files are missing.
Epochs read_dataset(const std::filesystem::path& dir);

/// FNV-1a 64 over the bytes of data.bin followed by labels.bin, if any.
std::uint64_t content_checksum(const Epochs& epochs);

struct FeatureConfig {
  enum class Kind { kAllSamples, kIntervalMeans };

  Kind kind = Kind::kAllSamples;
  /// kIntervalMeans: strictly increasing boundaries in seconds.
  /// kAllSamples: window {a, b} in seconds, or empty for the whole epoch.
  std::vector<double> boundaries;

  static FeatureConfig whole_epoch() { return {}; }
  static FeatureConfig window(double a, double b) { return {Kind::kAllSamples, {a, b}}; }
  static FeatureConfig intervals(std::vector<double> bounds) {
    return {Kind::kIntervalMeans, std::move(bounds)};
  }

  /// "all", "window:A,B" or "intervals:B0,B1,..."
  static FeatureConfig parse(const std::string& text);
  std::string to_string() const;
};

/// Sample index of time `seconds`: floor((seconds - t0) * sfreq + 0.5).
Index sample_index(double seconds, double t0, double sfreq);

/// Mean over the samples of each half-open interval [b_i, b_{i+1}), per
/// channel. The result has N_t = boundaries.size() - 1 in channel-prime
/// order.
FeatureMatrix interval_means(const Epochs& epochs, const std::vector<double>& boundaries);

/// Every sample with a <= t < b, channel-prime.
FeatureMatrix all_samples(const Epochs& epochs, double a, double b);

FeatureMatrix extract_features(const Epochs& epochs, const FeatureConfig& config);

}  // namespace toeplitzlda
