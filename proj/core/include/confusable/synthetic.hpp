#pragma once

#include <cstddef>
#include <cstdint>

#include "confusable/dataset.hpp"
#include "confusable/matrix.hpp"

namespace confusable {

// Gaussian class clusters with a controlled number of confusable pairs.
//
// Classes 2i and 2i+1 (i < pairs) form a confusable pair: their centers sit
// delta_pair apart. Every other pair of classes is at least delta_far apart.
// Centers live in the first d_in - nuisance_dims coordinates and are placed by
// rejection sampling on a sphere of radius center_radius (delta_far when 0).
// The trailing nuisance_dims coordinates carry only noise of stddev
// nuisance_sigma, shared structure a learned embedding can discover and
// suppress.
struct SyntheticSpec {
  std::size_t k = 20;
  std::size_t pairs = 5;
  std::size_t d_in = 16;
  double sigma_within = 0.5;
  double delta_pair = 1.0;
  double delta_far = 8.0;
  std::size_t n_per_class = 30;
  std::uint64_t seed = 0;
  std::size_t nuisance_dims = 0;
  double nuisance_sigma = 0.0;
  double center_radius = 0.0;

  // Throws ConfigError.
  void validate() const;
  std::size_t signal_dims() const noexcept { return d_in - nuisance_dims; }
  double sphere_radius() const noexcept { return center_radius > 0.0 ? center_radius : delta_far; }
};

// K x d_in matrix of class centers. Throws DatasetError when the sphere cannot
// fit the requested separation.
Matrix synthetic_centers(const SyntheticSpec& spec);

Dataset generate_synthetic(const SyntheticSpec& spec, Split split = Split::MetaTrain);

// Index of the confusable partner of `cls`, or cls itself when unpaired.
std::size_t synthetic_partner(const SyntheticSpec& spec, std::size_t cls);

}  // namespace confusable
