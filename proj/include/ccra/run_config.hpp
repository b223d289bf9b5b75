#pragma once

#include <istream>
#include <string>

#include "ccra/pipeline.hpp"

namespace ccra {

/// Plain-text key=value run configuration.
///
/// Keys: L, N, d, T, d_hidden, d_llm, V, k, sigma, seed, variant. Missing keys
/// keep their defaults; when k is given without sigma, sigma becomes k/3.
/// Blank lines and lines starting with '#' are skipped; anything else that is
/// not a known key=value pair fails with its line number.
CcraConfig parse_run_config(std::istream& in);
CcraConfig parse_run_config_file(const std::string& path);

}  // namespace ccra
