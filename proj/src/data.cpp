#include "rai_forge/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

#include "rai_forge/error.hpp"
#include "rai_forge/rng.hpp"

namespace raiforge {

Dataset::Dataset(std::vector<Sample> samples, int classes, int groups, std::uint64_t seed)
    : samples_(std::move(samples)), seed_(seed) {
  if (samples_.empty()) throw InvalidDataset("dataset must contain at least one sample");
  dim_ = samples_.front().features.size();
  if (dim_ == 0) throw InvalidDataset("samples must have at least one feature");
  const bool has_group = samples_.front().group.has_value();
  int max_label = 0;
  int max_group = -1;
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    if (s.features.size() != dim_)
      throw InvalidDataset("sample " + std::to_string(i) + " has dimension " +
                           std::to_string(s.features.size()) + ", expected " +
                           std::to_string(dim_));
    for (double x : s.features)
      if (!std::isfinite(x)) throw InvalidDataset("sample " + std::to_string(i) + " has a non-finite feature");
    if (s.label < 0) throw InvalidDataset("sample " + std::to_string(i) + " has a negative label");
    if (s.group.has_value() != has_group)
      throw InvalidDataset("either all samples carry a group id or none do");
    if (has_group && *s.group < 0)
      throw InvalidDataset("sample " + std::to_string(i) + " has a negative group id");
    max_label = std::max(max_label, s.label);
    if (has_group) max_group = std::max(max_group, *s.group);
  }
  classes_ = classes > 0 ? classes : max_label + 1;
  if (max_label >= classes_)
    throw InvalidDataset("label " + std::to_string(max_label) + " out of range for " +
                         std::to_string(classes_) + " classes");
  if (has_group) {
    groups_ = groups > 0 ? groups : max_group + 1;
    if (max_group >= groups_)
      throw InvalidDataset("group " + std::to_string(max_group) + " out of range for " +
                           std::to_string(groups_) + " groups");
  } else {
    groups_ = 0;
  }
}

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(s.label);
  return out;
}

std::vector<int> Dataset::group_ids() const {
  std::vector<int> out;
  if (!grouped()) return out;
  out.reserve(samples_.size());
  for (const auto& s : samples_) out.push_back(*s.group);
  return out;
}

namespace {

struct Component {
  int label;
  double mx, my;
  double var;
};

Dataset draw_mixture(const SyntheticSpec& spec, std::span<const Component> comps,
                     std::span<const double> class0_cdf, std::span<const double> class1_cdf,
                     std::size_t class1_offset, bool group_is_label) {
  if (spec.n < 2) throw InvalidSpec("synthetic dataset needs n >= 2, got " + std::to_string(spec.n));
  SplitMix64 rng(spec.seed);
  std::vector<Sample> samples;
  samples.reserve(spec.n);
  auto pick = [&](std::span<const double> cdf) {
    const double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < cdf.size() && u >= cdf[k]) ++k;
    return k;
  };
  for (std::size_t i = 0; i < spec.n; ++i) {
    const bool positive = rng.uniform() >= 0.7;
    const std::size_t comp = positive ? class1_offset + pick(class1_cdf) : pick(class0_cdf);
    const Component& c = comps[comp];
    const double sd = std::sqrt(c.var);
    Sample s;
    s.features = {c.mx + sd * rng.normal(), c.my + sd * rng.normal()};
    s.label = c.label;
    s.group = group_is_label ? c.label : static_cast<int>(comp);
    samples.push_back(std::move(s));
  }
  const int groups = group_is_label ? 2 : static_cast<int>(comps.size());
  return Dataset(std::move(samples), 2, groups, spec.seed);
}

}  // namespace

Dataset gen_dataset_1(const SyntheticSpec& spec) {
  if (spec.which != SyntheticKind::DatasetI) throw InvalidSpec("gen_dataset_1 requires DatasetI");
  static constexpr Component comps[] = {
      {0, 0.0, 0.0, 1.0}, {1, -3.0, 1.0, 1.0}, {1, 3.0, 0.0, 1.0}, {1, 0.0, -3.0, 1.0}};
  static constexpr double c0[] = {1.0};
  static constexpr double c1[] = {1.0 / 3.0, 2.0 / 3.0, 1.0};
  return draw_mixture(spec, comps, c0, c1, 1, true);
}

Dataset gen_dataset_2(const SyntheticSpec& spec) {
  if (spec.which != SyntheticKind::DatasetII) throw InvalidSpec("gen_dataset_2 requires DatasetII");
  // Components 0 and 1 share the mean (-2,-2); they stay distinct groups.
  static constexpr Component comps[] = {{0, -2.0, -2.0, 0.5},
                                        {0, -2.0, -2.0, 0.5},
                                        {0, 2.0, 2.0, 0.5},
                                        {1, -3.0, 0.0, 0.3},
                                        {1, 3.0, 0.0, 0.3}};
  static constexpr double c0[] = {5.0 / 12.0, 7.0 / 12.0, 1.0};
  static constexpr double c1[] = {2.0 / 5.0, 1.0};
  return draw_mixture(spec, comps, c0, c1, 3, false);
}

Dataset generate(const SyntheticSpec& spec) {
  return spec.which == SyntheticKind::DatasetI ? gen_dataset_1(spec) : gen_dataset_2(spec);
}

Dataset with_class_groups(const Dataset& data) {
  std::vector<Sample> samples(data.samples().begin(), data.samples().end());
  for (auto& s : samples) s.group = s.label;
  return Dataset(std::move(samples), data.classes(), data.classes(), data.seed());
}

Dataset without_groups(const Dataset& data) {
  std::vector<Sample> samples(data.samples().begin(), data.samples().end());
  for (auto& s : samples) s.group.reset();
  return Dataset(std::move(samples), data.classes(), 0, data.seed());
}

Dataset subset(const Dataset& data, std::span<const std::size_t> indices) {
  std::vector<Sample> samples;
  samples.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= data.size()) throw InvalidArgument("subset index out of range");
    samples.push_back(data[i]);
  }
  return Dataset(std::move(samples), data.classes(), data.groups(), data.seed());
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double fraction,
                                             std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw InvalidArgument("split fraction must lie in (0, 1)");
  const std::size_t n = data.size();
  const auto first = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (first == 0 || first >= n)
    throw InvalidArgument("split of " + std::to_string(n) + " samples leaves an empty part");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);
  std::span<const std::size_t> all(idx);
  return {subset(data, all.first(first)), subset(data, all.subspan(first))};
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ParseError(line, "bad feature value '" + std::string(s) + "'");
  return v;
}

int parse_id(std::string_view s, std::size_t line, const char* what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(s) + "'");
  return v;
}

}  // namespace

void save_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  for (std::size_t j = 0; j < data.dim(); ++j) out << 'x' << (j + 1) << ',';
  out << 'y';
  if (data.grouped()) out << ",group";
  out << '\n';
  for (const auto& s : data.samples()) {
    for (double x : s.features) out << format_double(x) << ',';
    out << s.label;
    if (s.group) out << ',' << *s.group;
    out << '\n';
  }
  if (!out) throw InvalidArgument("failed writing '" + path.string() + "'");
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw InvalidDataset("'" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_fields(line);
  std::size_t dim = 0;
  while (dim < header.size() && header[dim] == "x" + std::to_string(dim + 1)) ++dim;
  if (dim == 0) throw ParseError(1, "header must start with x1");
  if (dim >= header.size() || header[dim] != "y") throw ParseError(1, "expected column 'y' after features");
  const bool grouped = header.size() == dim + 2;
  if (header.size() > dim + 2 || (grouped && header[dim + 1] != "group"))
    throw ParseError(1, "unexpected trailing columns in header");
  const std::size_t width = header.size();

  std::vector<Sample> samples;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width)
      throw ParseError(lineno, "expected " + std::to_string(width) + " fields, got " +
                                   std::to_string(fields.size()));
    Sample s;
    s.features.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) s.features.push_back(parse_double(fields[j], lineno));
    s.label = parse_id(fields[dim], lineno, "label");
    if (grouped) s.group = parse_id(fields[dim + 1], lineno, "group");
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw InvalidDataset("'" + path.string() + "' has no samples");
  return Dataset(std::move(samples));
}

}  // namespace raiforge
