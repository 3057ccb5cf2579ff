#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace toeplitzlda {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Vectorization order of an N_c x N_t epoch.
///
/// kChannelPrime stacks all channels of the first time sample, then all
/// channels of the second one, i.e. index = t * N_c + c. kTimePrime stacks the
/// full time course of each channel, index = c * N_t + t. Covariances are
/// block structured (an N_t x N_t grid of N_c x N_c blocks) only in the
/// channel-prime order, which is therefore the canonical layout of this
/// library.
enum class Layout { kChannelPrime, kTimePrime };

const char* to_string(Layout layout);

class BlockDims {
 public:
  /// Throws Error(kDomain) unless both counts are positive.
  BlockDims(Index n_channels, Index n_times);

  Index n_channels() const { return n_channels_; }
  Index n_times() const { return n_times_; }
  /// Total feature dimension N_c * N_t.
  Index size() const { return n_channels_ * n_times_; }

  friend bool operator==(const BlockDims&, const BlockDims&) = default;

 private:
  Index n_channels_;
  Index n_times_;
};

/// Position of (channel, time) in a flattened feature vector.
Index feature_index(const BlockDims& dims, Layout layout, Index channel, Index time);

/// Dense symmetric spatiotemporal covariance.
class BlockCov {
 public:
  /// Validates that `data` is D x D and symmetric to 1e-10 relative to its
  /// largest entry.
  BlockCov(BlockDims dims, Matrix data, Layout layout = Layout::kChannelPrime);

  const BlockDims& dims() const { return dims_; }
  Layout layout() const { return layout_; }
  const Matrix& data() const { return data_; }

 private:
  BlockDims dims_;
  Layout layout_;
  Matrix data_;
};

/// Symmetric block-Toeplitz covariance kept as its first block row.
///
/// lag(d) is the cross-covariance block between time t and t + d. The
/// implied dense matrix uses lag(-d) = lag(d)^T, so only N_t * N_c^2 values
/// are stored.
class BlockToeplitzCov {
 public:
  /// `lag_blocks` must hold N_t blocks of size N_c x N_c with a symmetric
  /// zero-lag block (1e-10 relative); that block is then stored as
  /// (M + M^T) / 2 so the dense expansion is exactly symmetric.
  BlockToeplitzCov(BlockDims dims, const std::vector<Matrix>& lag_blocks);
  /// `first_block_row` is N_c x (N_c * N_t), blocks laid out left to right.
  BlockToeplitzCov(BlockDims dims, Matrix first_block_row);

  const BlockDims& dims() const { return dims_; }

  auto lag(Index d) const {
    const Index nc = dims_.n_channels();
    return first_row_.middleCols(d * nc, nc);
  }

  const Matrix& first_block_row() const { return first_row_; }
  std::vector<Matrix> lag_blocks() const;

  /// Number of doubles held for the covariance itself.
  Index stored_value_count() const { return first_row_.size(); }

 private:
  void canonicalize();

  BlockDims dims_;
  Matrix first_row_;
};

/// Feature vectors of N_e epochs stacked as the columns of a D x N_e matrix.
class FeatureMatrix {
 public:
  FeatureMatrix(BlockDims dims, Matrix data, Layout layout = Layout::kChannelPrime);

  const BlockDims& dims() const { return dims_; }
  Layout layout() const { return layout_; }
  const Matrix& data() const { return data_; }
  Index n_epochs() const { return data_.cols(); }

  /// Columns selected by `indices`, in the given order.
  FeatureMatrix select(const std::vector<Index>& indices) const;

 private:
  BlockDims dims_;
  Layout layout_;
  Matrix data_;
};

/// Flattens an N_c x N_t epoch (rows are channels).
Vector flatten_epoch(const Eigen::Ref<const Matrix>& epoch, Layout layout);
/// Same, rejecting epochs whose shape differs from `dims`.
Vector flatten_epoch(const Eigen::Ref<const Matrix>& epoch, const BlockDims& dims,
                     Layout layout);

/// Reorders vector entries between the two layouts.
Vector permute_layout(const Vector& x, const BlockDims& dims, Layout from, Layout to);
/// Reorders rows and columns of a D x D matrix between the two layouts.
Matrix permute_layout(const Matrix& m, const BlockDims& dims, Layout from, Layout to);

/// Block (i, j) of a channel-prime covariance; indices are zero-based time
/// points.
Matrix block_at(const BlockCov& cov, Index i, Index j);

/// Averages the blocks along each block diagonal (stationarity assumption).
/// Lag d averages the N_t - d available blocks; the zero-lag mean is
/// symmetrized as (M + M^T) / 2.
BlockToeplitzCov block_diagonal_average(const BlockCov& cov);

/// Linear taper 1 - |d| / N_t. Throws Error(kDomain) for |d| > N_t.
double taper_weight(Index lag, Index n_times);

/// Scales lag block d by taper_weight(d).
BlockToeplitzCov apply_taper(const BlockToeplitzCov& cov);
/// Scales dense block (i, j) by taper_weight(i - j); keeps the matrix dense.
BlockCov apply_taper(const BlockCov& cov);

/// Expands to the dense channel-prime matrix; the result is exactly
/// symmetric.
BlockCov to_dense(const BlockToeplitzCov& cov);

struct FreeParameterCount {
  std::int64_t full;
  std::int64_t toeplitz;
};

/// Free parameters of a general symmetric covariance and of a symmetric
/// block-Toeplitz one.
FreeParameterCount free_parameter_count(const BlockDims& dims);

}  // namespace toeplitzlda
