#include "toeplitzlda/blockmat.hpp"

#include <cstdlib>
#include <sstream>
#include <string>

#include "toeplitzlda/error.hpp"

namespace toeplitzlda {
namespace {

std::string shape(Index rows, Index cols) {
  std::ostringstream out;
  out << rows << "x" << cols;
  return out.str();
}

void require_symmetric(const Eigen::Ref<const Matrix>& m, const char* what) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream out;
    out << what << " is not symmetric (max asymmetry " << asym << ")";
    throw Error(ErrorKind::kDomain, out.str());
  }
}

}  // namespace

const char* to_string(Layout layout) {
  return layout == Layout::kChannelPrime ? "channel_prime" : "time_prime";
}

BlockDims::BlockDims(Index n_channels, Index n_times)
    : n_channels_(n_channels), n_times_(n_times) {
  if (n_channels < 1 || n_times < 1) {
    throw Error(ErrorKind::kDomain, "block dimensions must be positive, got " +
                                        shape(n_channels, n_times));
  }
}

Index feature_index(const BlockDims& dims, Layout layout, Index channel, Index time) {
  return layout == Layout::kChannelPrime ? time * dims.n_channels() + channel
                                         : channel * dims.n_times() + time;
}

BlockCov::BlockCov(BlockDims dims, Matrix data, Layout layout)
    : dims_(dims), layout_(layout), data_(std::move(data)) {
  if (data_.rows() != dims_.size() || data_.cols() != dims_.size()) {
    throw Error(ErrorKind::kDimension, "covariance must be " +
                                           shape(dims_.size(), dims_.size()) +
                                           ", got " + shape(data_.rows(), data_.cols()));
  }
  require_symmetric(data_, "covariance");
}

BlockToeplitzCov::BlockToeplitzCov(BlockDims dims, const std::vector<Matrix>& lag_blocks)
    : dims_(dims), first_row_(dims.n_channels(), dims.size()) {
  const Index nc = dims_.n_channels();
  if (static_cast<Index>(lag_blocks.size()) != dims_.n_times()) {
    throw Error(ErrorKind::kDimension,
                "expected " + std::to_string(dims_.n_times()) + " lag blocks, got " +
                    std::to_string(lag_blocks.size()));
  }
  for (Index d = 0; d < dims_.n_times(); ++d) {
    const Matrix& b = lag_blocks[static_cast<std::size_t>(d)];
    if (b.rows() != nc || b.cols() != nc) {
      throw Error(ErrorKind::kDimension, "lag block " + std::to_string(d) + " must be " +
                                             shape(nc, nc) + ", got " +
                                             shape(b.rows(), b.cols()));
    }
    first_row_.middleCols(d * nc, nc) = b;
  }
  canonicalize();
}

BlockToeplitzCov::BlockToeplitzCov(BlockDims dims, Matrix first_block_row)
    : dims_(dims), first_row_(std::move(first_block_row)) {
  if (first_row_.rows() != dims_.n_channels() || first_row_.cols() != dims_.size()) {
    throw Error(ErrorKind::kDimension,
                "first block row must be " + shape(dims_.n_channels(), dims_.size()) +
                    ", got " + shape(first_row_.rows(), first_row_.cols()));
  }
  canonicalize();
}

void BlockToeplitzCov::canonicalize() {
  require_symmetric(lag(0), "zero-lag block");
  const Index nc = dims_.n_channels();
  Matrix zero_lag = first_row_.leftCols(nc);
  first_row_.leftCols(nc) = 0.5 * (zero_lag + zero_lag.transpose());
}

std::vector<Matrix> BlockToeplitzCov::lag_blocks() const {
  std::vector<Matrix> blocks;
  blocks.reserve(static_cast<std::size_t>(dims_.n_times()));
  for (Index d = 0; d < dims_.n_times(); ++d) blocks.emplace_back(lag(d));
  return blocks;
}

FeatureMatrix::FeatureMatrix(BlockDims dims, Matrix data, Layout layout)
    : dims_(dims), layout_(layout), data_(std::move(data)) {
  if (data_.rows() != dims_.size()) {
    throw Error(ErrorKind::kDimension, "feature matrix needs " +
                                           std::to_string(dims_.size()) + " rows, got " +
                                           std::to_string(data_.rows()));
  }
}

FeatureMatrix FeatureMatrix::select(const std::vector<Index>& indices) const {
  Matrix out(data_.rows(), static_cast<Index>(indices.size()));
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const Index col = indices[k];
    if (col < 0 || col >= data_.cols()) {
      throw Error(ErrorKind::kDimension, "epoch index " + std::to_string(col) +
                                             " out of range " +
                                             std::to_string(data_.cols()));
    }
    out.col(static_cast<Index>(k)) = data_.col(col);
  }
  return FeatureMatrix(dims_, std::move(out), layout_);
}

Vector flatten_epoch(const Eigen::Ref<const Matrix>& epoch, Layout layout) {
  return flatten_epoch(epoch, BlockDims(epoch.rows(), epoch.cols()), layout);
}

Vector flatten_epoch(const Eigen::Ref<const Matrix>& epoch, const BlockDims& dims,
                     Layout layout) {
  if (epoch.rows() != dims.n_channels() || epoch.cols() != dims.n_times()) {
    throw Error(ErrorKind::kDimension, "epoch must be " +
                                           shape(dims.n_channels(), dims.n_times()) +
                                           " (channels x times), got " +
                                           shape(epoch.rows(), epoch.cols()));
  }
  Vector x(dims.size());
  for (Index c = 0; c < dims.n_channels(); ++c) {
    for (Index t = 0; t < dims.n_times(); ++t) {
      x[feature_index(dims, layout, c, t)] = epoch(c, t);
    }
  }
  return x;
}

namespace {

// perm[k] is the source index (in `from`) of entry k in `to`.
std::vector<Index> layout_permutation(const BlockDims& dims, Layout from, Layout to) {
  std::vector<Index> perm(static_cast<std::size_t>(dims.size()));
  for (Index c = 0; c < dims.n_channels(); ++c) {
    for (Index t = 0; t < dims.n_times(); ++t) {
      perm[static_cast<std::size_t>(feature_index(dims, to, c, t))] =
          feature_index(dims, from, c, t);
    }
  }
  return perm;
}

}  // namespace

Vector permute_layout(const Vector& x, const BlockDims& dims, Layout from, Layout to) {
  if (x.size() != dims.size()) {
    throw Error(ErrorKind::kDimension, "vector length " + std::to_string(x.size()) +
                                           " does not match dimension " +
                                           std::to_string(dims.size()));
  }
  const auto perm = layout_permutation(dims, from, to);
  Vector out(x.size());
  for (Index k = 0; k < x.size(); ++k) out[k] = x[perm[static_cast<std::size_t>(k)]];
  return out;
}

Matrix permute_layout(const Matrix& m, const BlockDims& dims, Layout from, Layout to) {
  if (m.rows() != dims.size() || m.cols() != dims.size()) {
    throw Error(ErrorKind::kDimension, "matrix must be " +
                                           shape(dims.size(), dims.size()) + ", got " +
                                           shape(m.rows(), m.cols()));
  }
  const auto perm = layout_permutation(dims, from, to);
  Matrix out(m.rows(), m.cols());
  for (Index r = 0; r < m.rows(); ++r) {
    const Index src_r = perm[static_cast<std::size_t>(r)];
    for (Index c = 0; c < m.cols(); ++c) {
      out(r, c) = m(src_r, perm[static_cast<std::size_t>(c)]);
    }
  }
  return out;
}

Matrix block_at(const BlockCov& cov, Index i, Index j) {
  if (cov.layout() != Layout::kChannelPrime) {
    throw Error(ErrorKind::kDomain, "block access requires a channel-prime covariance");
  }
  const Index nt = cov.dims().n_times();
  if (i < 0 || j < 0 || i >= nt || j >= nt) {
    throw Error(ErrorKind::kDimension, "block index (" + std::to_string(i) + ", " +
                                           std::to_string(j) + ") outside " +
                                           shape(nt, nt) + " block grid");
  }
  const Index nc = cov.dims().n_channels();
  return cov.data().block(i * nc, j * nc, nc, nc);
}

BlockToeplitzCov block_diagonal_average(const BlockCov& cov) {
  if (cov.layout() != Layout::kChannelPrime) {
    throw Error(ErrorKind::kDomain, "block averaging requires a channel-prime covariance");
  }
  const BlockDims& dims = cov.dims();
  const Index nc = dims.n_channels();
  const Index nt = dims.n_times();
  const Matrix& data = cov.data();
  Matrix row(nc, dims.size());
  for (Index d = 0; d < nt; ++d) {
    // Running mean: reproduces equal blocks bit-exactly, which a plain
    // sum-then-divide does not.
    auto mean = row.middleCols(d * nc, nc);
    mean = data.block(0, d * nc, nc, nc);
    for (Index i = 1; i + d < nt; ++i) {
      mean += (data.block(i * nc, (i + d) * nc, nc, nc) - mean) / static_cast<double>(i + 1);
    }
  }
  // The constructor symmetrizes the zero-lag mean.
  return BlockToeplitzCov(dims, std::move(row));
}

double taper_weight(Index lag, Index n_times) {
  const Index dist = std::abs(lag);
  if (n_times < 1 || dist > n_times) {
    throw Error(ErrorKind::kDomain, "lag " + std::to_string(lag) +
                                        " exceeds the epoch length " +
                                        std::to_string(n_times));
  }
  return 1.0 - static_cast<double>(dist) / static_cast<double>(n_times);
}

BlockToeplitzCov apply_taper(const BlockToeplitzCov& cov) {
  const Index nc = cov.dims().n_channels();
  const Index nt = cov.dims().n_times();
  Matrix row = cov.first_block_row();
  for (Index d = 1; d < nt; ++d) row.middleCols(d * nc, nc) *= taper_weight(d, nt);
  return BlockToeplitzCov(cov.dims(), std::move(row));
}

BlockCov apply_taper(const BlockCov& cov) {
  if (cov.layout() != Layout::kChannelPrime) {
    throw Error(ErrorKind::kDomain, "tapering requires a channel-prime covariance");
  }
  const Index nc = cov.dims().n_channels();
  const Index nt = cov.dims().n_times();
  Matrix data = cov.data();
  for (Index i = 0; i < nt; ++i) {
    for (Index j = 0; j < nt; ++j) {
      if (i != j) data.block(i * nc, j * nc, nc, nc) *= taper_weight(i - j, nt);
    }
  }
  return BlockCov(cov.dims(), std::move(data));
}

BlockCov to_dense(const BlockToeplitzCov& cov) {
  const Index nc = cov.dims().n_channels();
  const Index nt = cov.dims().n_times();
  Matrix data(cov.dims().size(), cov.dims().size());
  for (Index i = 0; i < nt; ++i) {
    for (Index j = i; j < nt; ++j) {
      const auto b = cov.lag(j - i);
      data.block(i * nc, j * nc, nc, nc) = b;
      if (j != i) data.block(j * nc, i * nc, nc, nc) = b.transpose();
    }
  }
  return BlockCov(cov.dims(), std::move(data));
}

FreeParameterCount free_parameter_count(const BlockDims& dims) {
  const std::int64_t nc = dims.n_channels();
  const std::int64_t nt = dims.n_times();
  const std::int64_t d = nc * nt;
  return {d * (d + 1) / 2, nc * (nc + 1) / 2 + (nt - 1) * nc * nc};
}

}  // namespace toeplitzlda
