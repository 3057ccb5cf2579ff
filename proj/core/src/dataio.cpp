#include "toeplitzlda/dataio.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "toeplitzlda/error.hpp"

namespace toeplitzlda {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "dataset I/O assumes a little-endian host");

Epochs::Epochs(Index n_epochs, BlockDims dims, std::vector<double> data, double sfreq,
               double t0, std::vector<std::string> channel_names,
               std::optional<std::vector<Label>> labels)
    : n_epochs_(n_epochs),
      dims_(dims),
      data_(std::move(data)),
      sfreq_(sfreq),
      t0_(t0),
      channel_names_(std::move(channel_names)),
      labels_(std::move(labels)) {
  if (n_epochs_ < 0) throw Error(ErrorKind::kDomain, "negative epoch count");
  if (!(sfreq_ > 0.0) || !std::isfinite(sfreq_) || !std::isfinite(t0_)) {
    throw Error(ErrorKind::kDomain, "sampling rate must be positive and finite");
  }
  const auto expected = static_cast<std::size_t>(n_epochs_ * dims_.size());
  if (data_.size() != expected) {
    throw Error(ErrorKind::kDimension, "epoch data holds " + std::to_string(data_.size()) +
                                           " samples, expected " + std::to_string(expected));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      throw Error(ErrorKind::kFormat, "non-finite sample at flat index " + std::to_string(i));
    }
  }
  if (channel_names_.empty()) {
    for (Index c = 0; c < dims_.n_channels(); ++c) {
      channel_names_.push_back("ch" + std::to_string(c + 1));
    }
  }
  if (static_cast<Index>(channel_names_.size()) != dims_.n_channels()) {
    throw Error(ErrorKind::kDimension, "expected " + std::to_string(dims_.n_channels()) +
                                           " channel names, got " +
                                           std::to_string(channel_names_.size()));
  }
  if (labels_) {
    if (static_cast<Index>(labels_->size()) != n_epochs_) {
      throw Error(ErrorKind::kDimension, std::to_string(labels_->size()) + " labels for " +
                                             std::to_string(n_epochs_) + " epochs");
    }
    for (Label l : *labels_) {
      if (l != 0 && l != 1) {
        throw Error(ErrorKind::kFormat, "labels must be 0 or 1, got " + std::to_string(l));
      }
    }
  }
}

Eigen::Map<const Matrix> Epochs::epoch(Index e) const {
  if (e < 0 || e >= n_epochs_) {
    throw Error(ErrorKind::kDimension, "epoch index " + std::to_string(e) + " out of range");
  }
  return Eigen::Map<const Matrix>(data_.data() + e * dims_.size(), dims_.n_channels(),
                                  dims_.n_times());
}

Epochs Epochs::with_labels(std::vector<Label> labels) const {
  return Epochs(n_epochs_, dims_, data_, sfreq_, t0_, channel_names_, std::move(labels));
}

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const char* bytes, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out.write(bytes, static_cast<std::streamsize>(n));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

}  // namespace

void write_dataset(const Epochs& epochs, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json meta;
  meta["format_version"] = kDatasetFormatVersion;
  meta["endianness"] = "little";
  meta["n_epochs"] = epochs.n_epochs();
  meta["n_channels"] = epochs.dims().n_channels();
  meta["n_times"] = epochs.dims().n_times();
  meta["sfreq"] = epochs.sfreq();
  meta["t0"] = epochs.t0();
  meta["channel_names"] = epochs.channel_names();
  meta["has_labels"] = epochs.labels().has_value();
  const std::string text = meta.dump(2) + "\n";
  write_file(dir / "meta.json", text.data(), text.size());

  const auto& data = epochs.data();
  write_file(dir / "data.bin", reinterpret_cast<const char*>(data.data()),
             data.size() * sizeof(double));

  const fs::path labels_path = dir / "labels.bin";
  if (epochs.labels()) {
    std::vector<std::uint8_t> bytes(epochs.labels()->begin(), epochs.labels()->end());
    write_file(labels_path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
  } else {
    fs::remove(labels_path, ec);
  }
}

Epochs read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, "no dataset at " + dir.string());
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("malformed meta.json: ") + e.what());
  }

  try {
    const int version = meta.at("format_version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw Error(ErrorKind::kFormat, "unsupported dataset format_version " +
                                          std::to_string(version) + " (expected " +
                                          std::to_string(kDatasetFormatVersion) + ")");
    }
    if (meta.at("endianness").get<std::string>() != "little") {
      throw Error(ErrorKind::kFormat, "only little-endian datasets are supported");
    }
    const auto n_epochs = meta.at("n_epochs").get<Index>();
    const BlockDims dims(meta.at("n_channels").get<Index>(), meta.at("n_times").get<Index>());
    const double sfreq = meta.at("sfreq").get<double>();
    const double t0 = meta.at("t0").get<double>();
    auto names = meta.at("channel_names").get<std::vector<std::string>>();

    const std::string raw = read_file(dir / "data.bin");
    const auto expected = static_cast<std::size_t>(n_epochs * dims.size()) * sizeof(double);
    if (raw.size() != expected) {
      throw Error(ErrorKind::kFormat,
                  "data.bin holds " + std::to_string(raw.size() / sizeof(double)) +
                      " values (" + std::to_string(raw.size()) + " bytes); meta.json declares " +
                      std::to_string(n_epochs) + " epochs of " +
                      std::to_string(dims.n_channels()) + "x" + std::to_string(dims.n_times()) +
                      " = " + std::to_string(expected / sizeof(double)) + " values");
    }
    std::vector<double> data(expected / sizeof(double));
    std::memcpy(data.data(), raw.data(), raw.size());

    std::optional<std::vector<Label>> labels;
    const fs::path labels_path = dir / "labels.bin";
    if (fs::exists(labels_path)) {
      const std::string bytes = read_file(labels_path);
      if (static_cast<Index>(bytes.size()) != n_epochs) {
        throw Error(ErrorKind::kFormat, "labels.bin holds " + std::to_string(bytes.size()) +
                                            " labels for " + std::to_string(n_epochs) +
                                            " epochs");
      }
      labels.emplace();
      for (char b : bytes) labels->push_back(static_cast<std::uint8_t>(b));
    }
    return Epochs(n_epochs, dims, std::move(data), sfreq, t0, std::move(names),
                  std::move(labels));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, std::string("invalid meta.json: ") + e.what());
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kIo) throw;
    throw Error(ErrorKind::kFormat, e.what());
  }
}

std::uint64_t content_checksum(const Epochs& epochs) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](const unsigned char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  mix(reinterpret_cast<const unsigned char*>(epochs.data().data()),
      epochs.data().size() * sizeof(double));
  if (epochs.labels()) {
    for (Label l : *epochs.labels()) {
      const auto b = static_cast<unsigned char>(l);
      mix(&b, 1);
    }
  }
  return h;
}

namespace {

std::vector<double> parse_numbers(const std::string& list) {
  std::vector<double> out;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    double v = 0.0;
    const auto* end = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (ec != std::errc() || ptr != end) {
      throw Error(ErrorKind::kDomain, "not a number: '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

FeatureConfig FeatureConfig::parse(const std::string& text) {
  if (text == "all") return whole_epoch();
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (colon == std::string::npos) {
    throw Error(ErrorKind::kDomain, "feature must be 'all', 'window:A,B' or "
                                    "'intervals:B0,B1,...', got '" + text + "'");
  }
  auto values = parse_numbers(text.substr(colon + 1));
  if (kind == "window") {
    if (values.size() != 2 || !(values[0] < values[1])) {
      throw Error(ErrorKind::kDomain, "window needs two increasing bounds: '" + text + "'");
    }
    return window(values[0], values[1]);
  }
  if (kind == "intervals") {
    if (values.size() < 2) {
      throw Error(ErrorKind::kDomain, "intervals need at least two boundaries");
    }
    return intervals(std::move(values));
  }
  throw Error(ErrorKind::kDomain, "unknown feature kind '" + kind + "'");
}

std::string FeatureConfig::to_string() const {
  if (kind == Kind::kAllSamples && boundaries.empty()) return "all";
  std::string out = kind == Kind::kAllSamples ? "window:" : "intervals:";
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (i) out += ',';
    out += format_number(boundaries[i]);
  }
  return out;
}

Index sample_index(double seconds, double t0, double sfreq) {
  return static_cast<Index>(std::floor((seconds - t0) * sfreq + 0.5));
}

FeatureMatrix interval_means(const Epochs& epochs, const std::vector<double>& boundaries) {
  if (boundaries.size() < 2) {
    throw Error(ErrorKind::kDomain, "interval means need at least two boundaries");
  }
  const Index nt = epochs.dims().n_times();
  std::vector<Index> idx;
  for (std::size_t i = 0; i < boundaries.size(); ++i) {
    if (i > 0 && !(boundaries[i] > boundaries[i - 1])) {
      throw Error(ErrorKind::kDomain, "interval boundaries must be strictly increasing");
    }
    idx.push_back(sample_index(boundaries[i], epochs.t0(), epochs.sfreq()));
  }
  if (idx.front() < 0 || idx.back() > nt) {
    throw Error(ErrorKind::kDomain, "interval boundaries extend beyond the epoch");
  }
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    if (idx[i + 1] <= idx[i]) {
      throw Error(ErrorKind::kDomain, "interval " + std::to_string(i) + " [" +
                                          format_number(boundaries[i]) + ", " +
                                          format_number(boundaries[i + 1]) +
                                          ") s contains no samples");
    }
  }

  const Index nc = epochs.dims().n_channels();
  const BlockDims out_dims(nc, static_cast<Index>(idx.size()) - 1);
  Matrix features(out_dims.size(), epochs.n_epochs());
  for (Index e = 0; e < epochs.n_epochs(); ++e) {
    const auto ep = epochs.epoch(e);
    for (Index k = 0; k < out_dims.n_times(); ++k) {
      const Index lo = idx[static_cast<std::size_t>(k)];
      const Index len = idx[static_cast<std::size_t>(k) + 1] - lo;
      for (Index c = 0; c < nc; ++c) {
        features(feature_index(out_dims, Layout::kChannelPrime, c, k), e) =
            ep.row(c).segment(lo, len).mean();
      }
    }
  }
  return FeatureMatrix(out_dims, std::move(features));
}

FeatureMatrix all_samples(const Epochs& epochs, double a, double b) {
  const Index nt = epochs.dims().n_times();
  const Index lo = sample_index(a, epochs.t0(), epochs.sfreq());
  const Index hi = sample_index(b, epochs.t0(), epochs.sfreq());
  if (lo < 0 || hi > nt) {
    throw Error(ErrorKind::kDomain, "window [" + format_number(a) + ", " + format_number(b) +
                                        ") s lies outside the epoch");
  }
  if (hi <= lo) {
    throw Error(ErrorKind::kDomain, "window [" + format_number(a) + ", " + format_number(b) +
                                        ") s contains no samples");
  }
  const Index nc = epochs.dims().n_channels();
  const BlockDims out_dims(nc, hi - lo);
  Matrix features(out_dims.size(), epochs.n_epochs());
  for (Index e = 0; e < epochs.n_epochs(); ++e) {
    features.col(e) =
        flatten_epoch(epochs.epoch(e).middleCols(lo, hi - lo), out_dims, Layout::kChannelPrime);
  }
  return FeatureMatrix(out_dims, std::move(features));
}

FeatureMatrix extract_features(const Epochs& epochs, const FeatureConfig& config) {
  if (config.kind == FeatureConfig::Kind::kIntervalMeans) {
    return interval_means(epochs, config.boundaries);
  }
  if (config.boundaries.empty()) {
    const double t_end =
        epochs.t0() + static_cast<double>(epochs.dims().n_times()) / epochs.sfreq();
    return all_samples(epochs, epochs.t0(), t_end);
  }
  if (config.boundaries.size() != 2) {
    throw Error(ErrorKind::kDomain, "a sample window needs exactly two bounds");
  }
  return all_samples(epochs, config.boundaries[0], config.boundaries[1]);
}

}  // namespace toeplitzlda
