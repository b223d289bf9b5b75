#pragma once

#include "ccra/conditioning.hpp"
#include "ccra/graph.hpp"
#include "ccra/ops.hpp"
#include "ccra/tensor.hpp"

namespace ccra {

/// One multiplicative gate per patch.
struct PatchWeights {
  Tensor weights;  // N
};

struct PwcaParams {
  Tensor w_key;  // d x d_hidden
  Tensor gamma;  // d
  Tensor beta;   // d
};

struct PwcaVars {
  Var w_key, gamma, beta;
};

PatchWeights patch_weights(const Tensor& queries, const Tensor& features_semantic,
                           const TokenImportance& alpha, const PwcaParams& params);

/// Row i becomes LN(f[i] * (1 + w[i])); the (1 + .) gate plays the role of the
/// residual here, so no additive term appears.
Tensor regional_modulate(const Tensor& features_semantic, const PatchWeights& weights,
                         const PwcaParams& params, double eps = ops::kLayerNormEps);

struct PwcaGraph {
  Var regional;  // N x d
  Var weights;   // N
};

PwcaGraph pwca_graph(Graph& g, Var features_semantic, Var queries, Var alpha,
                     const PwcaVars& params, double eps);

}  // namespace ccra
