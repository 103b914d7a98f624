#pragma once

#include <cstdint>
#include <random>

namespace vfbl {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of an independent child stream, e.g. for a path or for one side of a comparison.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// Per-path Gaussian source. The stream depends only on (seed, path), so results do not
/// depend on how paths are scheduled across workers.
class PathRng {
 public:
  PathRng(std::uint64_t seed, std::uint64_t path) : engine_(derive_seed(seed, path)) {}
  double normal() { return normal_(engine_); }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace vfbl
