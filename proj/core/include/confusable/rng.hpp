#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace confusable {

using Rng = std::mt19937_64;

// Every random consumer draws from a named sub-stream of one run seed, so
// adding draws to one component never perturbs another.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);
Rng make_stream(std::uint64_t seed, std::string_view stream);

// n distinct values from [0, population), uniformly, in random order.
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng);

// Moves a uniform random n-subset of items to the front, in random order,
// and truncates to it.
template <typename T>
void keep_random_subset(std::vector<T>& items, std::size_t n, Rng& rng) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, items.size() - 1);
    std::swap(items[i], items[pick(rng)]);
  }
  items.resize(n);
}

// FNV-1a, used for stable dataset checksums and stream names.
std::uint64_t fnv1a(const void* data, std::size_t bytes,
                    std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace confusable
