#include "confusable/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "confusable/errors.hpp"
#include "confusable/rng.hpp"

namespace confusable {
namespace {

constexpr std::size_t kMaxPlacementAttempts = 20000;

std::vector<double> random_unit(std::size_t dims, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(dims);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (k < 2) throw ConfigError("synthetic spec: k must be at least 2");
  if (2 * pairs > k) {
    throw ConfigError("synthetic spec: 2*pairs (" + std::to_string(2 * pairs) + ") exceeds k (" +
                      std::to_string(k) + ")");
  }
  if (d_in == 0 || nuisance_dims >= d_in) {
    throw ConfigError("synthetic spec: need d_in > nuisance_dims >= 0");
  }
  if (!(sigma_within > 0.0)) throw ConfigError("synthetic spec: sigma_within must be positive");
  if (!(delta_pair >= 0.0)) throw ConfigError("synthetic spec: delta_pair must be nonnegative");
  if (!(delta_far > 0.0)) throw ConfigError("synthetic spec: delta_far must be positive");
  if (!(delta_pair < delta_far)) throw ConfigError("synthetic spec: need delta_pair < delta_far");
  if (n_per_class == 0) throw ConfigError("synthetic spec: n_per_class must be positive");
  if (nuisance_dims > 0 && !(nuisance_sigma >= 0.0)) {
    throw ConfigError("synthetic spec: nuisance_sigma must be nonnegative");
  }
  if (center_radius < 0.0) throw ConfigError("synthetic spec: center_radius must be nonnegative");
}

std::size_t synthetic_partner(const SyntheticSpec& spec, std::size_t cls) {
  if (cls < 2 * spec.pairs) return cls ^ std::size_t{1};
  return cls;
}

Matrix synthetic_centers(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = make_stream(spec.seed, "synthetic.centers");
  const std::size_t dims = spec.signal_dims();
  const std::size_t groups = spec.k - spec.pairs;
  const double radius = spec.sphere_radius();

  // Groups [0, pairs) hold a pair each; the rest are singletons. The required
  // gap between group centers accounts for pair members sitting delta_pair/2
  // off-center.
  Matrix group_centers(groups, dims);
  auto half_width = [&](std::size_t g) { return g < spec.pairs ? spec.delta_pair / 2.0 : 0.0; };
  for (std::size_t g = 0; g < groups; ++g) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
      auto candidate = random_unit(dims, rng);
      for (double& x : candidate) x *= radius;
      placed = true;
      for (std::size_t h = 0; h < g; ++h) {
        const double need = spec.delta_far + half_width(g) + half_width(h);
        if (squared_distance(candidate, group_centers.row(h)) < need * need) {
          placed = false;
          break;
        }
      }
      if (placed) group_centers.set_row(g, candidate);
    }
    if (!placed) {
      throw DatasetError("cannot place " + std::to_string(groups) + " class centers " +
                         std::to_string(spec.delta_far) + " apart on a sphere of radius " +
                         std::to_string(radius) + " in " + std::to_string(dims) + " dimensions");
    }
  }

  Matrix centers(spec.k, spec.d_in);
  for (std::size_t p = 0; p < spec.pairs; ++p) {
    const auto offset = random_unit(dims, rng);
    for (std::size_t d = 0; d < dims; ++d) {
      const double shift = offset[d] * spec.delta_pair / 2.0;
      centers(2 * p, d) = group_centers(p, d) + shift;
      centers(2 * p + 1, d) = group_centers(p, d) - shift;
    }
  }
  for (std::size_t c = 2 * spec.pairs; c < spec.k; ++c) {
    const std::size_t g = spec.pairs + (c - 2 * spec.pairs);
    for (std::size_t d = 0; d < dims; ++d) centers(c, d) = group_centers(g, d);
  }
  return centers;
}

Dataset generate_synthetic(const SyntheticSpec& spec, Split split) {
  const Matrix centers = synthetic_centers(spec);
  Rng rng = make_stream(spec.seed, "synthetic.instances");
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t dims = spec.signal_dims();

  std::vector<Matrix> classes;
  std::vector<std::string> names;
  classes.reserve(spec.k);
  names.reserve(spec.k);
  for (std::size_t c = 0; c < spec.k; ++c) {
    Matrix instances(spec.n_per_class, spec.d_in);
    for (std::size_t i = 0; i < spec.n_per_class; ++i) {
      for (std::size_t d = 0; d < spec.d_in; ++d) {
        const double sigma = d < dims ? spec.sigma_within : spec.nuisance_sigma;
        instances(i, d) = centers(c, d) + sigma * normal(rng);
      }
    }
    classes.push_back(std::move(instances));
    if (c < 2 * spec.pairs) {
      names.push_back("pair" + std::to_string(c / 2) + (c % 2 == 0 ? "_a" : "_b"));
    } else {
      names.push_back("single" + std::to_string(c - 2 * spec.pairs));
    }
  }
  return Dataset(std::move(classes), split, std::move(names),
                 "synthetic:seed=" + std::to_string(spec.seed));
}

}  // namespace confusable
