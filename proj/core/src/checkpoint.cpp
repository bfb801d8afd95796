#include "confusable/checkpoint.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "confusable/confusion_matrix.hpp"
#include "confusable/errors.hpp"

namespace confusable {
namespace {

constexpr const char* kMagic = "confusable-params";
constexpr int kVersion = 1;

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::istringstream next(const char* expecting) {
    std::string line;
    if (!std::getline(in_, line)) throw ParseError(std::string("expected ") + expecting, line_ + 1);
    ++line_;
    return std::istringstream(line);
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

template <typename T>
T keyed(LineReader& reader, const std::string& key) {
  auto line = reader.next(key.c_str());
  std::string name;
  T value{};
  if (!(line >> name >> value) || name != key) {
    throw ParseError("expected '" + key + " <value>'", reader.line());
  }
  return value;
}

void read_values(LineReader& reader, std::span<double> dst) {
  auto line = reader.next("a row of values");
  std::string token;
  for (double& v : dst) {
    if (!(line >> token)) throw ParseError("too few values", reader.line());
    try {
      v = parse_double(token);
    } catch (const InputError& e) {
      throw ParseError(e.what(), reader.line());
    }
  }
  if (line >> token) throw ParseError("too many values", reader.line());
}

void write_values(std::ostream& out, std::span<const double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out << ' ';
    out << format_double(values[i]);
  }
  out << '\n';
}

}  // namespace

void write_checkpoint(std::ostream& out, const LearnerCheckpoint& checkpoint) {
  const auto& params = checkpoint.params;
  out << kMagic << ' ' << kVersion << '\n';
  out << "learner " << to_string(checkpoint.kind) << '\n';
  out << "temperature " << format_double(checkpoint.temperature) << '\n';
  out << "d_in " << params.d_in() << '\n';
  out << "layers " << params.num_layers() << '\n';
  for (const auto& layer : params.layers()) {
    out << "layer " << layer.weight.rows() << ' ' << layer.weight.cols() << '\n';
    for (std::size_t r = 0; r < layer.weight.rows(); ++r) write_values(out, layer.weight.row(r));
    write_values(out, layer.bias);
  }
}

LearnerCheckpoint read_checkpoint(std::istream& in) {
  LineReader reader(in);
  {
    auto line = reader.next("header");
    std::string magic;
    int version = 0;
    if (!(line >> magic >> version) || magic != kMagic) {
      throw ParseError("not a parameter checkpoint", reader.line());
    }
    if (version != kVersion) {
      throw ParseError("unsupported checkpoint version " + std::to_string(version), reader.line());
    }
  }
  LearnerCheckpoint checkpoint;
  try {
    checkpoint.kind = parse_learner_kind(keyed<std::string>(reader, "learner"));
    checkpoint.temperature = parse_double(keyed<std::string>(reader, "temperature"));
  } catch (const ConfigError& e) {
    throw ParseError(e.what(), reader.line());
  } catch (const InputError& e) {
    throw ParseError(e.what(), reader.line());
  }
  const auto d_in = keyed<std::size_t>(reader, "d_in");
  const auto count = keyed<std::size_t>(reader, "layers");
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l < count; ++l) {
    auto line = reader.next("layer header");
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(line >> name >> rows >> cols) || name != "layer") {
      throw ParseError("expected 'layer <out> <in>'", reader.line());
    }
    DenseLayer layer{Matrix(rows, cols), std::vector<double>(rows)};
    for (std::size_t r = 0; r < rows; ++r) read_values(reader, layer.weight.row(r));
    read_values(reader, layer.bias);
    layers.push_back(std::move(layer));
  }
  try {
    checkpoint.params = LearnerParams(d_in, std::move(layers));
  } catch (const InputError& e) {
    throw ParseError(e.what(), reader.line());
  }
  return checkpoint;
}

void save_checkpoint(const std::filesystem::path& path, const LearnerCheckpoint& checkpoint) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  write_checkpoint(out, checkpoint);
}

LearnerCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace confusable
