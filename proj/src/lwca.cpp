#include "ccra/lwca.hpp"

#include <cmath>

#include "ccra/errors.hpp"

namespace ccra {

LayerDescriptors layer_descriptors(const Tensor& features_lp) {
  if (features_lp.ndim() != 3) {
    throw ShapeMismatch("layer_descriptors: expected L x N x d, got " + shape_string(features_lp));
  }
  const std::size_t layers = features_lp.extent(0);
  const std::size_t patches = features_lp.extent(1);
  const std::size_t dim = features_lp.extent(2);
  Tensor flat = features_lp.reshaped({layers * patches, dim});
  return LayerDescriptors{ops::avg_pool_row_blocks(flat, layers)};
}

Tensor layer_weights(const Tensor& queries, const LayerDescriptors& ld,
                     const TokenImportance& alpha, const LwcaParams& params) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.w_key.cols()));
  Tensor keys = ops::matmul(ld.descriptors, params.w_key);
  Tensor scores = ops::scale(ops::matmul(queries, ops::transpose(keys)), scale);  // T x L
  if (alpha.weights.size() != scores.rows()) {
    throw ShapeMismatch("layer_weights: alpha " + shape_string(alpha.weights) + " vs scores " +
                        shape_string(scores));
  }
  Tensor flat = ops::matmul(alpha.weights.reshaped({1, alpha.weights.size()}), scores);
  return flat.reshaped({scores.cols()});
}

LayerWeights smooth_layer_weights(const Tensor& raw, std::size_t kernel_size, double sigma,
                                  SmoothMode mode) {
  Tensor kernel = ops::gaussian_kernel(kernel_size, sigma);
  Tensor smoothed;
  if (mode == SmoothMode::kSoftmaxThenSmooth) {
    smoothed = ops::conv1d_reflect(ops::softmax(raw), kernel);
  } else {
    smoothed = ops::softmax(ops::conv1d_reflect(raw, kernel));
  }
  return LayerWeights{raw, std::move(smoothed), kernel_size, sigma};
}

Tensor semantic_aggregate(const Tensor& features_lp, const LayerWeights& weights,
                          const LwcaParams& params, double eps) {
  if (features_lp.ndim() != 3 || features_lp.extent(0) != weights.smoothed.size()) {
    throw ShapeMismatch("semantic_aggregate: features " + shape_string(features_lp) +
                        " vs weights " + shape_string(weights.smoothed));
  }
  const std::size_t layers = features_lp.extent(0);
  const std::size_t patches = features_lp.extent(1);
  const std::size_t dim = features_lp.extent(2);
  Tensor flat = features_lp.reshaped({layers * patches, dim});
  Tensor pooled = ops::layer_weighted_sum(flat, weights.smoothed);        // N x d
  Tensor mean = ops::avg_pool_rows(pooled);                               // d
  return ops::layer_norm_rows(ops::add_row_broadcast(pooled, mean), params.gamma, params.beta,
                              eps);
}

LwcaGraph lwca_graph(Graph& g, Var features, std::size_t layer_count, Var queries, Var alpha,
                     const LwcaVars& params, std::size_t kernel_size, double sigma, double eps,
                     SmoothMode mode) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.value(params.w_key).cols()));
  const std::size_t token_count = g.value(alpha).size();

  Var descriptors = g.avg_pool_row_blocks(features, layer_count);  // L x d
  Var keys = g.matmul(descriptors, params.w_key);
  Var scores = g.scale(g.matmul(queries, g.transpose(keys)), scale);  // T x L
  Var alpha_row = g.reshape(alpha, {1, token_count});
  Var raw = g.reshape(g.matmul(alpha_row, scores), {layer_count});

  Var kernel = g.input(ops::gaussian_kernel(kernel_size, sigma));
  Var smoothed = mode == SmoothMode::kSoftmaxThenSmooth
                     ? g.conv1d_reflect(g.softmax(raw), kernel)
                     : g.softmax(g.conv1d_reflect(raw, kernel));

  Var pooled = g.layer_weighted_sum(features, smoothed);  // N x d
  Var mean = g.avg_pool_rows(pooled);
  Var semantic =
      g.layer_norm_rows(g.add_row_broadcast(pooled, mean), params.gamma, params.beta, eps);
  return LwcaGraph{semantic, raw, smoothed};
}

}  // namespace ccra
