#include "confusable/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "confusable/confusion_matrix.hpp"
#include "confusable/errors.hpp"

namespace confusable {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::MetaTrain: return "train";
    case Split::Validation: return "validation";
    case Split::MetaTest: return "test";
  }
  return "unknown";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::MetaTrain;
  if (text == "validation") return Split::Validation;
  if (text == "test") return Split::MetaTest;
  throw InputError("unknown split '" + std::string(text) + "' (expected train, validation, test)");
}

Dataset::Dataset(std::vector<Matrix> classes, Split split, std::vector<std::string> class_names,
                 std::string source)
    : classes_(std::move(classes)),
      names_(std::move(class_names)),
      split_(split),
      source_(std::move(source)) {
  if (classes_.empty()) throw DatasetError("dataset has no classes");
  dim_ = classes_.front().cols();
  for (std::size_t c = 0; c < classes_.size(); ++c) {
    if (classes_[c].rows() == 0) {
      throw DatasetError("class " + std::to_string(c) + " has no instances");
    }
    if (classes_[c].cols() != dim_) {
      throw DatasetError("class " + std::to_string(c) + " has feature dimension " +
                         std::to_string(classes_[c].cols()) + ", expected " + std::to_string(dim_));
    }
  }
  if (names_.empty()) {
    names_.reserve(classes_.size());
    for (std::size_t c = 0; c < classes_.size(); ++c) names_.push_back("class_" + std::to_string(c));
  } else if (names_.size() != classes_.size()) {
    throw DatasetError("class name count does not match class count");
  }
}

std::size_t Dataset::total_instances() const noexcept {
  std::size_t n = 0;
  for (const auto& c : classes_) n += c.rows();
  return n;
}

std::uint64_t Dataset::checksum() const {
  std::uint64_t h = fnv1a(&dim_, sizeof(dim_));
  for (const auto& c : classes_) {
    const std::uint64_t rows = c.rows();
    h = fnv1a(&rows, sizeof(rows), h);
    h = fnv1a(c.values().data(), c.values().size_bytes(), h);
  }
  return h;
}

void require_class_size(const Dataset& dataset, std::size_t cls, std::size_t required) {
  if (cls >= dataset.num_classes()) {
    throw DatasetError("class index " + std::to_string(cls) + " out of range");
  }
  if (dataset.class_size(cls) < required) {
    throw DatasetError("class " + std::to_string(cls) + " ('" + dataset.class_name(cls) + "') has " +
                       std::to_string(dataset.class_size(cls)) + " instances, " +
                       std::to_string(required) + " required");
  }
}

std::vector<std::size_t> sample_instances(const Dataset& dataset, std::size_t cls, std::size_t n,
                                          Rng& rng, std::span<const std::size_t> exclude) {
  if (cls >= dataset.num_classes()) {
    throw DatasetError("class index " + std::to_string(cls) + " out of range");
  }
  std::vector<std::size_t> candidates;
  candidates.reserve(dataset.class_size(cls));
  for (std::size_t i = 0; i < dataset.class_size(cls); ++i) {
    if (std::find(exclude.begin(), exclude.end(), i) == exclude.end()) candidates.push_back(i);
  }
  if (candidates.size() < n) {
    throw DatasetError("class " + std::to_string(cls) + " ('" + dataset.class_name(cls) + "') has " +
                       std::to_string(candidates.size()) + " available instances, " +
                       std::to_string(n) + " required");
  }
  keep_random_subset(candidates, n, rng);
  return candidates;
}

nlohmann::json manifest_json(const Dataset& dataset) {
  nlohmann::json counts = nlohmann::json::array();
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    counts.push_back(dataset.class_size(c));
    names.push_back(dataset.class_name(c));
  }
  std::ostringstream checksum;
  checksum << std::hex << dataset.checksum();
  return {
      {"k", dataset.num_classes()},
      {"d_in", dataset.dim()},
      {"class_counts", counts},
      {"class_names", names},
      {"split", std::string(to_string(dataset.split()))},
      {"source", dataset.source()},
      {"checksum", checksum.str()},
  };
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream manifest(dir / "manifest.json");
    if (!manifest) throw DatasetError("cannot write " + (dir / "manifest.json").string());
    manifest << manifest_json(dataset).dump(2) << '\n';
  }
  std::ofstream features(dir / "features.csv");
  if (!features) throw DatasetError("cannot write " + (dir / "features.csv").string());
  for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
    for (std::size_t i = 0; i < dataset.class_size(c); ++i) {
      features << c;
      for (double v : dataset.instance(c, i)) features << ',' << format_double(v);
      features << '\n';
    }
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  std::ifstream manifest_file(dir / "manifest.json");
  if (!manifest_file) throw DatasetError("dataset manifest not found in " + dir.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(manifest_file);
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError("invalid manifest in " + dir.string() + ": " + e.what());
  }
  const auto k = manifest.at("k").get<std::size_t>();
  const auto d = manifest.at("d_in").get<std::size_t>();
  const auto counts = manifest.at("class_counts").get<std::vector<std::size_t>>();
  auto names = manifest.value("class_names", std::vector<std::string>{});
  if (counts.size() != k) throw DatasetError("manifest class_counts length differs from k");

  std::vector<Matrix> classes;
  classes.reserve(k);
  for (std::size_t c = 0; c < k; ++c) classes.emplace_back(counts[c], d);
  std::vector<std::size_t> filled(k, 0);

  std::ifstream features(dir / "features.csv");
  if (!features) throw DatasetError("features.csv not found in " + dir.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(features, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::string_view rest(line);
    const auto comma = rest.find(',');
    std::size_t cls = 0;
    try {
      cls = static_cast<std::size_t>(parse_double(rest.substr(0, comma)));
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (cls >= k || filled[cls] >= counts[cls]) {
      throw ParseError("instance of class " + std::to_string(cls) + " disagrees with manifest",
                       line_no);
    }
    auto row = classes[cls].row(filled[cls]++);
    std::size_t j = 0;
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    while (!rest.empty()) {
      const auto next = rest.find(',');
      if (j >= d) throw ParseError("too many feature values", line_no);
      try {
        row[j++] = parse_double(rest.substr(0, next));
      } catch (const InputError& e) {
        throw ParseError(e.what(), line_no);
      }
      if (next == std::string_view::npos) break;
      rest.remove_prefix(next + 1);
    }
    if (j != d) throw ParseError("expected " + std::to_string(d) + " feature values", line_no);
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (filled[c] != counts[c]) {
      throw DatasetError("features.csv has " + std::to_string(filled[c]) + " instances of class " +
                         std::to_string(c) + ", manifest says " + std::to_string(counts[c]));
    }
  }
  return Dataset(std::move(classes), parse_split(manifest.value("split", std::string("train"))),
                 std::move(names), manifest.value("source", std::string{}));
}

}  // namespace confusable
