#include "poisonlab/dataset.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <string_view>

#include "poisonlab/error.hpp"
#include "poisonlab/rng.hpp"

namespace poisonlab {

LabeledDataset::LabeledDataset(Matrix features, Vector labels)
    : features_(std::move(features)), labels_(std::move(labels)) {
  if (features_.cols() < 1) throw InvalidArgument("dataset dimension must be >= 1");
  if (features_.rows() != labels_.size())
    throw InvalidArgument("feature rows and label count differ");
  for (Eigen::Index i = 0; i < labels_.size(); ++i) {
    if (labels_(i) != 1.0 && labels_(i) != -1.0)
      throw InvalidArgument("label at row " + std::to_string(i) + " is not +1/-1");
  }
  if (!features_.allFinite()) throw InvalidArgument("features contain NaN or infinity");
}

LabeledDataset LabeledDataset::empty(Eigen::Index d) {
  return LabeledDataset(Matrix(0, d), Vector(0));
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  Matrix x(static_cast<Eigen::Index>(indices.size()), dim());
  Vector y(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto i = static_cast<Eigen::Index>(indices[r]);
    if (i < 0 || i >= size()) throw InvalidArgument("subset index out of range");
    x.row(static_cast<Eigen::Index>(r)) = features_.row(i);
    y(static_cast<Eigen::Index>(r)) = labels_(i);
  }
  return LabeledDataset(std::move(x), std::move(y));
}

LabeledDataset LabeledDataset::with_label(double label) const {
  std::vector<std::size_t> idx;
  for (Eigen::Index i = 0; i < size(); ++i)
    if (labels_(i) == label) idx.push_back(static_cast<std::size_t>(i));
  return subset(idx);
}

LabeledDataset LabeledDataset::with_labels(Vector labels) const {
  return LabeledDataset(features_, std::move(labels));
}

LabeledDataset concat(const LabeledDataset& a, const LabeledDataset& b) {
  if (a.dim() != b.dim()) throw InvalidArgument("concat: dimension mismatch");
  Matrix x(a.size() + b.size(), a.dim());
  x << a.features_, b.features_;
  Vector y(a.size() + b.size());
  y << a.labels_, b.labels_;
  return LabeledDataset(std::move(x), std::move(y));
}

bool operator==(const LabeledDataset& a, const LabeledDataset& b) {
  return a.features_.rows() == b.features_.rows() &&
         a.features_.cols() == b.features_.cols() &&
         a.features_ == b.features_ && a.labels_ == b.labels_;
}

LabeledDataset gen_gaussian_binary(const GaussianSpec& spec) {
  if (!(spec.cov_scale > 0.0)) throw InvalidArgument("cov_scale must be positive");
  if (spec.mean_pos.size() < 1 || spec.mean_pos.size() != spec.mean_neg.size())
    throw InvalidArgument("class means must share a dimension >= 1");

  const Eigen::Index d = spec.mean_pos.size();
  const auto n = static_cast<Eigen::Index>(spec.n_per_class);
  const double sd = std::sqrt(spec.cov_scale);
  Rng rng(spec.seed);

  Matrix x(2 * n, d);
  Vector y(2 * n);
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const bool positive = i < n;
    const Vector& mean = positive ? spec.mean_pos : spec.mean_neg;
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = mean(j) + sd * rng.normal();
    y(i) = positive ? 1.0 : -1.0;
  }
  return LabeledDataset(std::move(x), std::move(y));
}

LabeledDataset gen_bernoulli_binary(const BernoulliSpec& spec) {
  const Eigen::Index d = spec.p_pos.size();
  if (d < 1 || spec.p_neg.size() != d)
    throw InvalidArgument("Bernoulli rates must share a dimension >= 1");
  const auto n_pos = static_cast<Eigen::Index>(spec.n_pos);
  const auto n = n_pos + static_cast<Eigen::Index>(spec.n_neg);
  Rng rng(spec.seed);

  Matrix x(n, d);
  Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool positive = i < n_pos;
    const Vector& p = positive ? spec.p_pos : spec.p_neg;
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.uniform() < p(j) ? 1.0 : 0.0;
    y(i) = positive ? 1.0 : -1.0;
  }
  return LabeledDataset(std::move(x), std::move(y));
}

BernoulliSpec spambase_surrogate_spec(std::uint64_t seed) {
  constexpr Eigen::Index kTerms = 54;
  Rng rng(seed);
  BernoulliSpec spec;
  spec.p_pos.resize(kTerms);
  spec.p_neg.resize(kTerms);
  for (Eigen::Index j = 0; j < kTerms; ++j) {
    // Sparse term usage, a third of the vocabulary leaning spam, a third
    // leaning ham, the rest uninformative.
    const double base = 0.03 + 0.27 * rng.uniform();
    const double lift = 1.5 + 2.0 * rng.uniform();
    if (j % 3 == 0) {
      spec.p_pos(j) = std::min(0.9, base * lift);
      spec.p_neg(j) = base / lift;
    } else if (j % 3 == 1) {
      spec.p_pos(j) = base / lift;
      spec.p_neg(j) = std::min(0.9, base * lift);
    } else {
      spec.p_pos(j) = base;
      spec.p_neg(j) = base;
    }
  }
  spec.n_pos = 1657;
  spec.n_neg = 2443;
  spec.seed = splitmix64(seed);
  return spec;
}

namespace {

constexpr std::size_t kSpambaseColumns = 58;
constexpr std::size_t kSpambaseTerms = 54;

double parse_number(std::string_view field, std::size_t line) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double value = 0.0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value, std::chars_format::general);
  if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value))
    throw IngestionError("non-numeric field '" + std::string(field) + "'", line);
  return value;
}

}  // namespace

LabeledDataset load_spambase(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open " + path.string());

  std::vector<std::array<double, kSpambaseTerms>> rows;
  std::vector<double> labels;
  std::set<std::pair<std::array<double, kSpambaseTerms>, double>> seen;

  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;

    std::array<double, kSpambaseTerms> row{};
    double label = 0.0;
    std::size_t column = 0;
    std::string_view rest(text);
    while (true) {
      const auto comma = rest.find(',');
      const auto field = rest.substr(0, comma);
      if (column >= kSpambaseColumns)
        throw IngestionError("expected 58 columns, found more", line);
      const double value = parse_number(field, line);
      if (column < kSpambaseTerms) {
        row[column] = value > 0.0 ? 1.0 : 0.0;
      } else if (column == kSpambaseColumns - 1) {
        if (value != 0.0 && value != 1.0)
          throw IngestionError("class column must be 0 or 1", line);
        label = value == 1.0 ? 1.0 : -1.0;
      }
      ++column;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (column != kSpambaseColumns)
      throw IngestionError("expected 58 columns, found " + std::to_string(column), line);

    if (seen.emplace(row, label).second) {
      rows.push_back(row);
      labels.push_back(label);
    }
  }

  Matrix x(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kSpambaseTerms));
  Vector y(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < kSpambaseTerms; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    y(static_cast<Eigen::Index>(i)) = labels[i];
  }
  return LabeledDataset(std::move(x), std::move(y));
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::string& what) {
  if (bytes.size() < offset + 4) throw IngestionError(what + ": truncated header");
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace

LabeledDataset load_mnist_1v7(const std::filesystem::path& images_path,
                              const std::filesystem::path& labels_path) {
  const auto images = read_file(images_path);
  const auto labels = read_file(labels_path);

  if (read_be32(images, 0, "images") != 0x00000803u)
    throw IngestionError("images: bad magic number");
  if (read_be32(labels, 0, "labels") != 0x00000801u)
    throw IngestionError("labels: bad magic number");

  const std::size_t n_images = read_be32(images, 4, "images");
  const std::size_t rows = read_be32(images, 8, "images");
  const std::size_t cols = read_be32(images, 12, "images");
  const std::size_t n_labels = read_be32(labels, 4, "labels");
  if (n_images != n_labels)
    throw IngestionError("image count " + std::to_string(n_images) +
                         " does not match label count " + std::to_string(n_labels));
  const std::size_t pixels = rows * cols;
  if (pixels == 0) throw IngestionError("images: zero-sized image");
  if (images.size() < 16 + n_images * pixels) throw IngestionError("images: truncated payload");
  if (labels.size() < 8 + n_labels) throw IngestionError("labels: truncated payload");

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n_labels; ++i) {
    const auto digit = labels[8 + i];
    if (digit == 1 || digit == 7) keep.push_back(i);
  }

  Matrix x(static_cast<Eigen::Index>(keep.size()), static_cast<Eigen::Index>(pixels));
  Vector y(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t r = 0; r < keep.size(); ++r) {
    const std::size_t base = 16 + keep[r] * pixels;
    for (std::size_t j = 0; j < pixels; ++j)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = images[base + j] / 255.0;
    y(static_cast<Eigen::Index>(r)) = labels[8 + keep[r]] == 7 ? 1.0 : -1.0;
  }
  return LabeledDataset(std::move(x), std::move(y));
}

Split split(const LabeledDataset& data, const SplitSpec& spec) {
  const auto n = static_cast<std::size_t>(data.size());
  const std::size_t used = spec.n_train + spec.n_od_train + spec.n_val;
  if (used > n)
    throw InvalidArgument("split sizes " + std::to_string(used) + " exceed dataset size " +
                          std::to_string(n));

  Rng rng(spec.seed);
  const auto perm = rng.permutation(n);
  const std::span<const std::size_t> all(perm);
  auto take = [&](std::size_t from, std::size_t count) {
    return data.subset(all.subspan(from, count));
  };
  Split out;
  out.train = take(0, spec.n_train);
  out.od_train = take(spec.n_train, spec.n_od_train);
  out.val = take(spec.n_train + spec.n_od_train, spec.n_val);
  out.test = take(used, n - used);
  return out;
}

}  // namespace poisonlab
