#include "ccra/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ccra/errors.hpp"

namespace ccra {

Tensor to_square(const Tensor& flat_map) {
  if (flat_map.ndim() != 1) {
    throw ShapeMismatch("to_square: expected a 1-D map, got " + shape_string(flat_map));
  }
  const std::size_t n = flat_map.size();
  const std::size_t side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
  if (side * side != n) {
    throw ShapeMismatch("to_square: " + std::to_string(n) + " patches is not a perfect square");
  }
  return flat_map.reshaped({side, side});
}

std::string render_pgm(const Tensor& square_map) {
  if (square_map.ndim() != 2) {
    throw ShapeMismatch("render_pgm: expected a 2-D map, got " + shape_string(square_map));
  }
  double lo = square_map[0], hi = square_map[0];
  for (std::size_t i = 0; i < square_map.size(); ++i) {
    lo = std::min(lo, square_map[i]);
    hi = std::max(hi, square_map[i]);
  }
  std::string out =
      "P5\n" + std::to_string(square_map.cols()) + " " + std::to_string(square_map.rows()) +
      "\n255\n";
  for (std::size_t i = 0; i < square_map.size(); ++i) {
    long pixel = 128;  // constant maps have no contrast to stretch
    if (hi > lo) {
      pixel = std::lround(255.0 * (square_map[i] - lo) / (hi - lo));
      pixel = std::clamp(pixel, 0L, 255L);
    }
    out.push_back(static_cast<char>(static_cast<unsigned char>(pixel)));
  }
  return out;
}

std::string render_csv_grid(const Tensor& square_map) {
  if (square_map.ndim() != 2) {
    throw ShapeMismatch("render_csv_grid: expected a 2-D map, got " + shape_string(square_map));
  }
  std::string out;
  char buf[32];
  for (std::size_t i = 0; i < square_map.rows(); ++i) {
    for (std::size_t j = 0; j < square_map.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", square_map.at(i, j));
      if (j) out.push_back(',');
      out += buf;
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace ccra
