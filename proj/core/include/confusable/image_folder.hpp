#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "confusable/dataset.hpp"

namespace confusable {

// Grayscale raster with intensities scaled to [0, 1], row-major.
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  double at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
  bool operator==(const GrayImage&) const = default;
};

// Portable graymap, binary (P5) or ASCII (P2). Throws ParseError.
GrayImage read_pgm(const std::filesystem::path& path);
GrayImage read_pgm(std::istream& in);
// Writes binary P5 with maxval 255.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

GrayImage resize_bilinear(const GrayImage& image, std::size_t width, std::size_t height);
// Quarter turn counter-clockwise.
GrayImage rotate90(const GrayImage& image);

struct IngestOptions {
  std::size_t image_size = 28;
  // Emit each 90/180/270 degree rotation of a class as a new class.
  bool rotations = false;
  Split split = Split::MetaTrain;
  // Undecodable files are skipped with a note here; null silences them.
  std::ostream* warnings = nullptr;
};

// Reads root/<class_name>/<image>.pgm. Classes are ordered by directory name;
// with rotations, class 4c + r holds class c rotated by r quarter turns.
// Throws DatasetError for a class directory with no decodable image.
Dataset ingest_image_folders(const std::filesystem::path& root, const IngestOptions& options = {});

}  // namespace confusable
