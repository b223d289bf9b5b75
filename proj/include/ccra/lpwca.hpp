#pragma once

#include <vector>

#include "ccra/conditioning.hpp"
#include "ccra/graph.hpp"
#include "ccra/ops.hpp"
#include "ccra/tensor.hpp"

namespace ccra {

/// Per-layer patch embeddings from a vision encoder; all layers share N and d.
struct VisualStack {
  std::vector<Tensor> layers;  // each N x d

  std::size_t layer_count() const { return layers.size(); }
  std::size_t patch_count() const { return layers.empty() ? 0 : layers[0].rows(); }
  std::size_t feature_dim() const { return layers.empty() ? 0 : layers[0].cols(); }
};

/// All patch-layer tokens as one layer-major sequence: token (l, i) at row l*N + i.
struct StackedFeatures {
  Tensor tokens;  // (L*N) x d
  std::size_t layer_count = 0;
};

/// One scalar attention weight per (layer, patch) token.
struct LayerPatchMap {
  Tensor weights;  // L x N
};

struct LpwcaParams {
  Tensor w_key;  // d x d_hidden
  Tensor gamma;  // d
  Tensor beta;   // d
};

struct LpwcaVars {
  Var w_key, gamma, beta;
};

StackedFeatures stack_layers(const VisualStack& vs);
VisualStack unstack_layers(const StackedFeatures& fs);

/// Scaled dot products between stage queries and projected patch-layer keys.
Tensor lpwca_scores(const Tensor& queries, const StackedFeatures& fs, const LpwcaParams& params);

/// Aggregates the score matrix over tokens with the importance weights and
/// reshapes to L x N.
LayerPatchMap aggregate_map(const TokenImportance& alpha, const Tensor& scores,
                            std::size_t layer_count);

struct LpwcaResult {
  Tensor features;   // L x N x d
  LayerPatchMap map;
};

/// Full stage: importance weights, scores, map, gate-and-normalize.
LpwcaResult lpwca_forward(const TextEmbeddings& text, const VisualStack& vs,
                          const ConditioningParams& cond, const LpwcaParams& params,
                          double eps = ops::kLayerNormEps);

struct LpwcaGraph {
  Var features;  // (L*N) x d, layer-major
  Var map_flat;  // L*N
};

/// `normalize_gate` applies a softmax over the flat map before gating
/// (ablation switch; the default raw gate matches the stage definition).
LpwcaGraph lpwca_graph(Graph& g, Var stacked, Var queries, Var alpha, const LpwcaVars& params,
                       double eps, bool normalize_gate = false);

}  // namespace ccra
