#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace raiforge {

struct Sample {
  std::vector<double> features;
  int label = 0;
  std::optional<int> group;

  bool operator==(const Sample&) const = default;
};

/// Immutable labeled sample set. The empirical distribution is uniform over samples.
class Dataset {
 public:
  /// Validates every invariant; throws InvalidDataset on violation.
  /// `classes` / `groups` of 0 are inferred from the largest observed id.
  Dataset(std::vector<Sample> samples, int classes = 0, int groups = 0, std::uint64_t seed = 0);

  std::size_t size() const noexcept { return samples_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  int classes() const noexcept { return classes_; }
  /// 0 when the data is ungrouped.
  int groups() const noexcept { return groups_; }
  bool grouped() const noexcept { return groups_ > 0; }
  std::uint64_t seed() const noexcept { return seed_; }

  const Sample& operator[](std::size_t i) const { return samples_[i]; }
  std::span<const Sample> samples() const noexcept { return samples_; }

  std::vector<int> labels() const;
  /// Group ids, or an empty vector for ungrouped data.
  std::vector<int> group_ids() const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<Sample> samples_;
  std::size_t dim_ = 0;
  int classes_ = 0;
  int groups_ = 0;
  std::uint64_t seed_ = 0;
};

enum class SyntheticKind { DatasetI, DatasetII };

struct SyntheticSpec {
  SyntheticKind which = SyntheticKind::DatasetI;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

/// Two-class imbalanced mixture: class 0 ~ N((0,0), I); class 1 is an equal-thirds
/// mixture at (-3,1), (3,0), (0,-3). Group id = class label.
Dataset gen_dataset_1(const SyntheticSpec& spec);

/// Five-component mixture; group id = component index (0-2 class 0, 3-4 class 1).
Dataset gen_dataset_2(const SyntheticSpec& spec);

/// Dispatches on spec.which.
Dataset generate(const SyntheticSpec& spec);

/// Copy of `data` whose group ids are the class labels.
Dataset with_class_groups(const Dataset& data);
/// Copy of `data` with group ids removed.
Dataset without_groups(const Dataset& data);

/// Sub-dataset over `indices`, keeping the parent's class and group counts.
Dataset subset(const Dataset& data, std::span<const std::size_t> indices);

/// Seeded shuffle, first part gets ceil(fraction * n) samples.
std::pair<Dataset, Dataset> train_test_split(const Dataset& data, double fraction,
                                             std::uint64_t seed);

void save_csv(const Dataset& data, const std::filesystem::path& path);
Dataset load_csv(const std::filesystem::path& path);

}  // namespace raiforge
