#pragma once

#include <string>

#include "ccra/tensor.hpp"

namespace ccra {

/// Binary tensor container: magic "CT1\0", uint32 little-endian rank, uint32
/// little-endian extents, then row-major 32-bit little-endian IEEE floats.
/// Computation stays in doubles; the narrower on-disk type keeps artifacts
/// compact and readers upcast on load.
Tensor read_tensor_file(const std::string& path);

/// Atomic write: the payload lands in a temp file first and is renamed into
/// place, so an interrupted run never leaves a truncated tensor behind.
void write_tensor_file(const std::string& path, const Tensor& t);

/// Atomic text-file write with the same temp-and-rename discipline.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ccra
