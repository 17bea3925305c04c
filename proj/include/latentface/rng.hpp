#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace latentface {

// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

std::uint64_t fnv1a(std::string_view text);

// Standard normal draws from a seeded mt19937_64 via Box-Muller.
// std::normal_distribution is implementation-defined, so the transform is
// spelled out here to keep streams identical across standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next();
  double uniform(); // in (0, 1)

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

} // namespace latentface
