#include "ccra/pwca.hpp"

#include <cmath>

#include "ccra/errors.hpp"

namespace ccra {

PatchWeights patch_weights(const Tensor& queries, const Tensor& features_semantic,
                           const TokenImportance& alpha, const PwcaParams& params) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.w_key.cols()));
  Tensor keys = ops::matmul(features_semantic, params.w_key);
  Tensor scores = ops::scale(ops::matmul(queries, ops::transpose(keys)), scale);  // T x N
  if (alpha.weights.size() != scores.rows()) {
    throw ShapeMismatch("patch_weights: alpha " + shape_string(alpha.weights) + " vs scores " +
                        shape_string(scores));
  }
  Tensor flat = ops::matmul(alpha.weights.reshaped({1, alpha.weights.size()}), scores);
  return PatchWeights{flat.reshaped({scores.cols()})};
}

Tensor regional_modulate(const Tensor& features_semantic, const PatchWeights& weights,
                         const PwcaParams& params, double eps) {
  if (features_semantic.ndim() != 2 || weights.weights.size() != features_semantic.rows()) {
    throw ShapeMismatch("regional_modulate: features " + shape_string(features_semantic) +
                        " vs weights " + shape_string(weights.weights));
  }
  Tensor gated = ops::scale_rows(features_semantic, ops::add_const(weights.weights, 1.0));
  return ops::layer_norm_rows(gated, params.gamma, params.beta, eps);
}

PwcaGraph pwca_graph(Graph& g, Var features_semantic, Var queries, Var alpha,
                     const PwcaVars& params, double eps) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.value(params.w_key).cols()));
  const std::size_t token_count = g.value(alpha).size();
  const std::size_t patches = g.value(features_semantic).rows();

  Var keys = g.matmul(features_semantic, params.w_key);
  Var scores = g.scale(g.matmul(queries, g.transpose(keys)), scale);  // T x N
  Var alpha_row = g.reshape(alpha, {1, token_count});
  Var weights = g.reshape(g.matmul(alpha_row, scores), {patches});

  Var gated = g.scale_rows(features_semantic, g.add_const(weights, 1.0));
  Var regional = g.layer_norm_rows(gated, params.gamma, params.beta, eps);
  return PwcaGraph{regional, weights};
}

}  // namespace ccra
