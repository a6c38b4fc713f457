#include "sparsedfm/random.hpp"

#include <cmath>
#include <numbers>

namespace sdfm {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  const double u1 = uniform();
  const double u2 = uniform();
  const double rho = std::sqrt(-2.0 * std::log(1.0 - u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = rho * std::sin(theta);
  has_cached_ = true;
  return rho * std::cos(theta);
}

std::uint64_t Rng::uniform_index(std::uint64_t k) {
  auto idx = static_cast<std::uint64_t>(uniform() * static_cast<double>(k));
  return idx < k ? idx : k - 1;
}

}  // namespace sdfm
