#include "confusable/confusion_matrix.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "confusable/errors.hpp"

namespace confusable {
namespace {

bool is_stochastic(ConfusionKind kind) { return kind != ConfusionKind::Count; }

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

std::string_view to_string(ConfusionKind kind) {
  switch (kind) {
    case ConfusionKind::Count: return "count";
    case ConfusionKind::RowNormalized: return "row_normalized";
    case ConfusionKind::Soft: return "soft";
  }
  return "unknown";
}

ConfusionKind parse_confusion_kind(std::string_view text) {
  if (text == "count") return ConfusionKind::Count;
  if (text == "row_normalized") return ConfusionKind::RowNormalized;
  if (text == "soft") return ConfusionKind::Soft;
  throw InputError("unknown confusion matrix kind '" + std::string(text) + "'");
}

ConfusionMatrix::ConfusionMatrix(std::size_t k, ConfusionKind kind)
    : entries_(k, k, 0.0), kind_(kind) {}

ConfusionMatrix::ConfusionMatrix(Matrix entries, ConfusionKind kind)
    : entries_(std::move(entries)), kind_(kind) {
  validate();
}

ConfusionMatrix ConfusionMatrix::uniform(std::size_t k) {
  if (k == 0) throw InputError("confusion matrix needs at least one class");
  ConfusionMatrix m(k, ConfusionKind::Soft);
  m.entries_.fill(1.0 / static_cast<double>(k));
  return m;
}

double ConfusionMatrix::row_sum(std::size_t i) const {
  double s = 0.0;
  for (double v : row(i)) s += v;
  return s;
}

void ConfusionMatrix::validate(double row_tolerance) const {
  if (entries_.rows() != entries_.cols()) {
    throw InputError("confusion matrix must be square, got " + std::to_string(entries_.rows()) +
                     "x" + std::to_string(entries_.cols()));
  }
  for (std::size_t i = 0; i < k(); ++i) {
    for (double v : row(i)) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InputError("confusion matrix row " + std::to_string(i) +
                         " has a negative or non-finite entry");
      }
    }
    if (is_stochastic(kind_) && std::abs(row_sum(i) - 1.0) > row_tolerance) {
      throw InputError("confusion matrix row " + std::to_string(i) + " sums to " +
                       format_double(row_sum(i)) + ", expected 1");
    }
  }
}

PredictiveDistribution::PredictiveDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw InputError("a predictive distribution needs at least 2 classes");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InputError("predictive distribution has a negative or non-finite entry");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw InputError("predictive distribution sums to " + format_double(total));
  }
}

std::size_t PredictiveDistribution::argmax() const {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

PredictiveDistribution PredictiveDistribution::one_hot_argmax() const {
  std::vector<double> hot(probs_.size(), 0.0);
  hot[argmax()] = 1.0;
  return PredictiveDistribution(std::move(hot));
}

ConfusionMatrix count_confusion(std::span<const ClassPair> predictions, std::size_t k) {
  ConfusionMatrix counts(k, ConfusionKind::Count);
  for (const auto& p : predictions) {
    if (p.true_class >= k || p.predicted_class >= k) {
      throw InputError("class index out of range [0, " + std::to_string(k) + ") in pair (" +
                       std::to_string(p.true_class) + ", " + std::to_string(p.predicted_class) +
                       ")");
    }
    counts(p.true_class, p.predicted_class) += 1.0;
  }
  return counts;
}

ConfusionMatrix normalize_rows(const ConfusionMatrix& counts) {
  const std::size_t k = counts.k();
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    const double total = counts.row_sum(i);
    for (std::size_t j = 0; j < k; ++j) {
      out(i, j) = total > 0.0 ? counts(i, j) / total : 1.0 / static_cast<double>(k);
    }
  }
  return ConfusionMatrix(std::move(out), ConfusionKind::RowNormalized);
}

ConfusionMatrix soft_confusion(const Matrix& probs, std::span<const std::size_t> true_positions) {
  const std::size_t w = probs.cols();
  if (probs.rows() != true_positions.size()) {
    throw InputError("soft_confusion: " + std::to_string(probs.rows()) + " distributions but " +
                     std::to_string(true_positions.size()) + " labels");
  }
  Matrix sums(w, w);
  std::vector<std::size_t> counts(w, 0);
  for (std::size_t q = 0; q < probs.rows(); ++q) {
    const std::size_t m = true_positions[q];
    if (m >= w) throw InputError("soft_confusion: true position out of range");
    auto dst = sums.row(m);
    const auto src = probs.row(q);
    for (std::size_t n = 0; n < w; ++n) dst[n] += src[n];
    ++counts[m];
  }
  for (std::size_t m = 0; m < w; ++m) {
    if (counts[m] == 0) {
      throw InputError("soft_confusion: window position " + std::to_string(m) +
                       " has no query instances");
    }
    const double inv = 1.0 / static_cast<double>(counts[m]);
    for (double& v : sums.row(m)) v *= inv;
  }
  return ConfusionMatrix(std::move(sums), ConfusionKind::Soft);
}

ConfusionMatrix soft_confusion(std::span<const LabeledPrediction> predictions,
                               std::span<const std::size_t> class_ids) {
  const std::size_t w = class_ids.size();
  Matrix probs(predictions.size(), w);
  std::vector<std::size_t> positions;
  positions.reserve(predictions.size());
  for (std::size_t q = 0; q < predictions.size(); ++q) {
    const auto& p = predictions[q];
    const auto it = std::find(class_ids.begin(), class_ids.end(), p.true_class);
    if (it == class_ids.end()) {
      throw InputError("soft_confusion: true class " + std::to_string(p.true_class) +
                       " is not among the class ids");
    }
    if (p.distribution.size() != w) {
      throw InputError("soft_confusion: distribution over " +
                       std::to_string(p.distribution.size()) + " classes, expected " +
                       std::to_string(w));
    }
    positions.push_back(static_cast<std::size_t>(it - class_ids.begin()));
    probs.set_row(q, p.distribution.probs());
  }
  for (std::size_t m = 0; m < w; ++m) {
    if (std::find(positions.begin(), positions.end(), m) == positions.end()) {
      throw InputError("soft_confusion: class " + std::to_string(class_ids[m]) +
                       " has no query instances");
    }
  }
  return soft_confusion(probs, positions);
}

double mean_row_l1(const ConfusionMatrix& a, const ConfusionMatrix& b) {
  if (a.k() != b.k()) throw InputError("mean_row_l1: matrices differ in size");
  if (a.k() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < a.k(); ++i) {
    for (std::size_t j = 0; j < a.k(); ++j) total += std::abs(a(i, j) - b(i, j));
  }
  return total / static_cast<double>(a.k());
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InputError("not a number: '" + std::string(text) + "'");
  }
  return value;
}

void write_csv(std::ostream& out, const ConfusionMatrix& m) {
  out << "k=" << m.k() << ",kind=" << to_string(m.kind()) << '\n';
  for (std::size_t i = 0; i < m.k(); ++i) {
    for (std::size_t j = 0; j < m.k(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

ConfusionMatrix read_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("missing confusion matrix header", line_no);
  const auto header = split(line, ',');
  if (header.size() != 2 || !header[0].starts_with("k=") || !header[1].starts_with("kind=")) {
    throw ParseError("expected header 'k=<K>,kind=<kind>'", line_no);
  }
  std::size_t k = 0;
  ConfusionKind kind{};
  try {
    const auto ktext = header[0].substr(2);
    const auto res = std::from_chars(ktext.data(), ktext.data() + ktext.size(), k);
    if (res.ec != std::errc() || res.ptr != ktext.data() + ktext.size()) {
      throw InputError("bad class count");
    }
    auto ktail = header[1].substr(5);
    if (!ktail.empty() && ktail.back() == '\r') ktail.remove_suffix(1);
    kind = parse_confusion_kind(ktail);
  } catch (const InputError& e) {
    throw ParseError(e.what(), line_no);
  }
  Matrix entries(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    ++line_no;
    if (!std::getline(in, line)) throw ParseError("expected " + std::to_string(k) + " rows", line_no);
    const auto cells = split(line, ',');
    if (cells.size() != k) {
      throw ParseError("expected " + std::to_string(k) + " values, got " +
                           std::to_string(cells.size()),
                       line_no);
    }
    for (std::size_t j = 0; j < k; ++j) {
      try {
        entries(i, j) = parse_double(cells[j]);
      } catch (const InputError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
  }
  ConfusionMatrix m(k, kind);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) m(i, j) = entries(i, j);
  }
  // Estimator snapshots may drift past 1e-9 after long runs.
  m.validate(1e-6);
  return m;
}

}  // namespace confusable
