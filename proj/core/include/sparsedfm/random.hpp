#pragma once

#include <cstdint>
#include <random>

namespace sdfm {

// Seeded generator with a fully specified output sequence, so panels drawn at
// a given seed can be reproduced bit-for-bit by other implementations.
//
//   bits:     std::mt19937_64 seeded with `seed` (the standard pins its output)
//   uniform:  (bits >> 11) * 2^-53, in [0, 1)
//   normal:   Box-Muller on two consecutive uniforms u1, u2:
//               rho = sqrt(-2 log(1 - u1)), z0 = rho cos(2 pi u2), z1 = rho sin(2 pi u2)
//             z0 is returned first, z1 is cached for the next call.
//   index:    uniform_index(k) = floor(uniform() * k)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();
  double normal();
  std::uint64_t uniform_index(std::uint64_t k);

 private:
  std::mt19937_64 engine_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace sdfm
