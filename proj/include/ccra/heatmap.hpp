#pragma once

#include <string>

#include "ccra/tensor.hpp"

namespace ccra {

/// Binary 8-bit PGM of a square map, min-max normalized to [0, 255];
/// constant maps render as mid-gray 128.
std::string render_pgm(const Tensor& square_map);

/// Comma-separated rows with full-precision values.
std::string render_csv_grid(const Tensor& square_map);

/// Reshapes an N-vector to sqrt(N) x sqrt(N); N must be a perfect square.
Tensor to_square(const Tensor& flat_map);

}  // namespace ccra
