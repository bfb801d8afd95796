#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "confusable/matrix.hpp"
#include "confusable/rng.hpp"

namespace confusable {

// Splits partition classes, never instances.
enum class Split { MetaTrain, Validation, MetaTest };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

// Labeled instances grouped by class. Class indices are dense in [0, K) and
// every instance shares the same feature dimension. Immutable once built.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<Matrix> classes, Split split = Split::MetaTrain,
          std::vector<std::string> class_names = {}, std::string source = {});

  std::size_t num_classes() const noexcept { return classes_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t class_size(std::size_t cls) const { return classes_.at(cls).rows(); }
  std::size_t total_instances() const noexcept;

  std::span<const double> instance(std::size_t cls, std::size_t index) const {
    return classes_.at(cls).row(index);
  }
  const Matrix& class_instances(std::size_t cls) const { return classes_.at(cls); }

  Split split() const noexcept { return split_; }
  const std::string& class_name(std::size_t cls) const { return names_.at(cls); }
  const std::string& source() const noexcept { return source_; }

  // Stable across runs and platforms with IEEE doubles.
  std::uint64_t checksum() const;

 private:
  std::vector<Matrix> classes_;
  std::vector<std::string> names_;
  Split split_ = Split::MetaTrain;
  std::string source_;
  std::size_t dim_ = 0;
};

// Throws DatasetError naming the class when it has fewer than `required`
// instances.
void require_class_size(const Dataset& dataset, std::size_t cls, std::size_t required);

// n distinct instance indices of class `cls`, uniformly without replacement,
// none of them in `exclude`.
std::vector<std::size_t> sample_instances(const Dataset& dataset, std::size_t cls, std::size_t n,
                                          Rng& rng, std::span<const std::size_t> exclude = {});

nlohmann::json manifest_json(const Dataset& dataset);

// On-disk layout: <dir>/manifest.json and <dir>/features.csv, one instance
// per line as `class_index,v0,v1,...`.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace confusable
