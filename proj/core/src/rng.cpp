#include "confusable/rng.hpp"

#include <numeric>

#include "confusable/errors.hpp"

namespace confusable {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t hash) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    hash ^= p[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream) {
  return splitmix64(splitmix64(seed) ^ fnv1a(stream.data(), stream.size()));
}

Rng make_stream(std::uint64_t seed, std::string_view stream) {
  return Rng(derive_seed(seed, stream));
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng) {
  if (n > population) {
    throw InputError("cannot sample " + std::to_string(n) + " distinct values from " +
                     std::to_string(population));
  }
  std::vector<std::size_t> all(population);
  std::iota(all.begin(), all.end(), std::size_t{0});
  keep_random_subset(all, n, rng);
  return all;
}

}  // namespace confusable
