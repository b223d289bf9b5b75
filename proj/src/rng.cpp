#include "ccra/rng.hpp"

#include <cmath>

namespace ccra {

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
  return radius * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace ccra
