#pragma once

#include <cstddef>

#include "ccra/conditioning.hpp"
#include "ccra/graph.hpp"
#include "ccra/ops.hpp"
#include "ccra/tensor.hpp"

namespace ccra {

/// Spatially pooled per-layer summaries.
struct LayerDescriptors {
  Tensor descriptors;  // L x d
};

/// Raw layer attention and its smoothed distribution. `smoothed` is always a
/// probability vector: the raw scores go through a softmax and a
/// mass-conserving Gaussian convolution along the layer axis.
struct LayerWeights {
  Tensor raw;       // L
  Tensor smoothed;  // L
  std::size_t kernel_size = 1;
  double sigma = 1.0;
};

struct LwcaParams {
  Tensor w_key;  // d x d_hidden
  Tensor gamma;  // d
  Tensor beta;   // d
};

struct LwcaVars {
  Var w_key, gamma, beta;
};

/// Order of softmax and smoothing. The default normalizes first and then
/// smooths (mass-conserving); the alternative smooths the raw scores and
/// softmaxes afterwards.
enum class SmoothMode { kSoftmaxThenSmooth, kSmoothThenSoftmax };

LayerDescriptors layer_descriptors(const Tensor& features_lp /* L x N x d */);

Tensor layer_weights(const Tensor& queries, const LayerDescriptors& ld,
                     const TokenImportance& alpha, const LwcaParams& params);

LayerWeights smooth_layer_weights(const Tensor& raw, std::size_t kernel_size, double sigma,
                                  SmoothMode mode = SmoothMode::kSoftmaxThenSmooth);

Tensor semantic_aggregate(const Tensor& features_lp, const LayerWeights& weights,
                          const LwcaParams& params, double eps = ops::kLayerNormEps);

struct LwcaGraph {
  Var semantic;          // N x d
  Var weights_raw;       // L
  Var weights_smoothed;  // L
};

/// Full stage over layer-major features ((L*N) x d).
LwcaGraph lwca_graph(Graph& g, Var features, std::size_t layer_count, Var queries, Var alpha,
                     const LwcaVars& params, std::size_t kernel_size, double sigma, double eps,
                     SmoothMode mode = SmoothMode::kSoftmaxThenSmooth);

}  // namespace ccra
