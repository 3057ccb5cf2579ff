#include "toeplitzlda/rng.hpp"

#include <cmath>
#include <numbers>

namespace toeplitzlda {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // 1 - uniform() lies in (0, 1], keeping the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double phi = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Reject the top partial bucket.
  const std::uint64_t limit = -n % n;  // (2^64 - n) mod n == 2^64 mod n
  for (;;) {
    const std::uint64_t r = engine_();
    if (r >= limit) return r % n;
  }
}

}  // namespace toeplitzlda
