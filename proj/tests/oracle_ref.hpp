#pragma once

#include <cstddef>
#include <vector>

#include "ccra/pipeline.hpp"

// Straight-line reference implementation of the full progressive attention
// chain, written with explicit loops on raw vectors and no calls into the
// library's numeric kernels. Tests compare every stage output against it.
namespace oracle {

struct Trace {
  std::vector<double> alpha;             // T
  std::vector<double> map;               // L*N
  std::vector<double> weights_raw;       // L
  std::vector<double> weights_smoothed;  // L
  std::vector<double> patch_w;           // N
  std::vector<double> features_lp;       // L*N*d
  std::vector<double> semantic;          // N*d
  std::vector<double> regional;          // N*d
  std::vector<double> fused;             // N*2d
  std::vector<double> projected;         // N*llm
  std::vector<double> logits;            // V
  double loss = 0.0;
};

Trace run(const ccra::TextEmbeddings& text, const ccra::VisualStack& vs,
          const ccra::CcraParams& params, const ccra::CcraConfig& cfg, std::size_t target);

}  // namespace oracle
