#include <algorithm>
#include <fstream>
#include <map>
#include <random>

#include "wbdr/instances.hpp"
#include "wbdr/rng.hpp"

namespace wbdr {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::vector<std::uint8_t> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& bytes, std::size_t at) {
  if (bytes.size() < at + 4) throw Error(ErrorCode::kTruncatedFile, "IDX header is truncated");
  return (std::uint32_t{bytes[at]} << 24) | (std::uint32_t{bytes[at + 1]} << 16) |
         (std::uint32_t{bytes[at + 2]} << 8) | std::uint32_t{bytes[at + 3]};
}

void put_be32(std::ofstream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

}  // namespace

IdxImages read_idx_images(const std::string& path) {
  const auto bytes = slurp(path);
  if (read_be32(bytes, 0) != kImageMagic) throw Error(ErrorCode::kBadMagic, path + ": not an IDX image file");
  IdxImages out;
  out.count = read_be32(bytes, 4);
  out.rows = read_be32(bytes, 8);
  out.cols = read_be32(bytes, 12);
  const std::size_t need = std::size_t{out.count} * out.rows * out.cols;
  if (bytes.size() < 16 + need) throw Error(ErrorCode::kTruncatedFile, path + ": pixel data is truncated");
  out.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  return out;
}

std::vector<std::uint8_t> read_idx_labels_raw(const std::string& path) {
  const auto bytes = slurp(path);
  if (read_be32(bytes, 0) != kLabelMagic) throw Error(ErrorCode::kBadMagic, path + ": not an IDX label file");
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() < 8 + count) throw Error(ErrorCode::kTruncatedFile, path + ": label data is truncated");
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

void write_idx_images(const std::string& path, const IdxImages& images) {
  if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols) {
    throw Error(ErrorCode::kShapeMismatch, "pixel buffer does not match the header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  put_be32(out, kImageMagic);
  put_be32(out, images.count);
  put_be32(out, images.rows);
  put_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path);
}

void write_idx_labels(const std::string& path, std::span<const std::uint8_t> labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  put_be32(out, kLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + path);
}

Matrix load_idx_images(const std::string& path) {
  const IdxImages raw = read_idx_images(path);
  const auto dim = static_cast<Eigen::Index>(raw.rows) * raw.cols;
  Matrix points(static_cast<Eigen::Index>(raw.count), dim);
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      points(r, c) = raw.pixels[static_cast<std::size_t>(r * dim + c)] / 255.0;
    }
  }
  return points;
}

std::vector<int> load_idx_labels(const std::string& path) {
  const auto raw = read_idx_labels_raw(path);
  return {raw.begin(), raw.end()};
}

std::vector<DiscreteDistribution> group_by_label(const Matrix& points, std::span<const int> labels,
                                                 std::size_t subsample, std::uint64_t seed) {
  if (static_cast<std::size_t>(points.rows()) != labels.size()) {
    throw Error(ErrorCode::kCountMismatch, "image and label counts differ");
  }
  if (labels.empty()) throw Error(ErrorCode::kEmptyInput, "no labelled points");
  std::map<int, std::vector<Eigen::Index>> classes;
  for (std::size_t r = 0; r < labels.size(); ++r) classes[labels[r]].push_back(static_cast<Eigen::Index>(r));

  std::vector<DiscreteDistribution> out;
  out.reserve(classes.size());
  for (auto& [label, members] : classes) {
    if (subsample > 0 && members.size() > subsample) {
      std::vector<Eigen::Index> chosen;
      Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(label)}));
      std::sample(members.begin(), members.end(), std::back_inserter(chosen), subsample, rng);
      members = std::move(chosen);
    }
    Matrix atoms(static_cast<Eigen::Index>(members.size()), points.cols());
    for (std::size_t r = 0; r < members.size(); ++r) atoms.row(static_cast<Eigen::Index>(r)) = points.row(members[r]);
    out.push_back(uniform_distribution(std::move(atoms)));
  }
  return out;
}

}  // namespace wbdr
