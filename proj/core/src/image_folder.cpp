#include "confusable/image_folder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "confusable/errors.hpp"

namespace confusable {
namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string token;
  int ch = 0;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

std::size_t header_number(std::istream& in, const char* what) {
  const std::string token = next_token(in);
  if (token.empty() || !std::all_of(token.begin(), token.end(), ::isdigit)) {
    throw ParseError(std::string("pgm: bad ") + what + " '" + token + "'", 1);
  }
  return std::stoul(token);
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
  const std::string magic = next_token(in);
  if (magic != "P5" && magic != "P2") throw ParseError("pgm: unsupported magic '" + magic + "'", 1);
  GrayImage image;
  image.width = header_number(in, "width");
  image.height = header_number(in, "height");
  const std::size_t maxval = header_number(in, "maxval");
  if (image.width == 0 || image.height == 0 || maxval == 0 || maxval > 65535) {
    throw ParseError("pgm: invalid dimensions or maxval", 1);
  }
  const std::size_t count = image.width * image.height;
  image.pixels.resize(count);
  const double scale = 1.0 / static_cast<double>(maxval);
  if (magic == "P5") {
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes_per);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
      throw ParseError("pgm: truncated pixel data", 1);
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t v = bytes_per == 1 ? raw[i] : (std::size_t{raw[2 * i]} << 8) | raw[2 * i + 1];
      image.pixels[i] = std::min(1.0, static_cast<double>(v) * scale);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t v = header_number(in, "pixel");
      image.pixels[i] = std::min(1.0, static_cast<double>(v) * scale);
    }
  }
  return image;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("pgm: cannot open " + path.string(), 0);
  return read_pgm(in);
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (double p : image.pixels) {
    const auto v = static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
    out.put(static_cast<char>(v));
  }
}

GrayImage resize_bilinear(const GrayImage& image, std::size_t width, std::size_t height) {
  if (image.width == width && image.height == height) return image;
  GrayImage out{width, height, std::vector<double>(width * height)};
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(image.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(image.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = image.at(x0, y0) * (1.0 - wx) + image.at(x1, y0) * wx;
      const double bottom = image.at(x0, y1) * (1.0 - wx) + image.at(x1, y1) * wx;
      out.pixels[y * width + x] = top * (1.0 - wy) + bottom * wy;
    }
  }
  return out;
}

GrayImage rotate90(const GrayImage& image) {
  GrayImage out{image.height, image.width, std::vector<double>(image.pixels.size())};
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      // (x, y) moves to (y, width - 1 - x) under a counter-clockwise turn.
      out.pixels[(image.width - 1 - x) * out.width + y] = image.at(x, y);
    }
  }
  return out;
}

Dataset ingest_image_folders(const std::filesystem::path& root, const IngestOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DatasetError("image root is not a directory: " + root.string());
  if (options.image_size == 0) throw ConfigError("image size must be positive");

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw DatasetError("no class directories under " + root.string());

  const std::size_t side = options.image_size;
  const std::size_t turns = options.rotations ? 4 : 1;
  std::vector<Matrix> classes;
  std::vector<std::string> names;
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::vector<std::vector<GrayImage>> rotated(turns);
    for (const auto& file : files) {
      GrayImage image;
      try {
        image = resize_bilinear(read_pgm(file), side, side);
      } catch (const ParseError& e) {
        if (options.warnings) *options.warnings << "warning: skipping " << file << ": " << e.what() << '\n';
        continue;
      }
      for (std::size_t r = 0; r < turns; ++r) {
        rotated[r].push_back(image);
        image = rotate90(image);
      }
    }
    if (rotated[0].empty()) {
      throw DatasetError("class directory " + dir.string() + " has no decodable images");
    }
    for (std::size_t r = 0; r < turns; ++r) {
      Matrix instances(rotated[r].size(), side * side);
      for (std::size_t i = 0; i < rotated[r].size(); ++i) instances.set_row(i, rotated[r][i].pixels);
      classes.push_back(std::move(instances));
      names.push_back(dir.filename().string() + (r == 0 ? "" : "_rot" + std::to_string(90 * r)));
    }
  }
  return Dataset(std::move(classes), options.split, std::move(names), "images:" + root.string());
}

}  // namespace confusable
