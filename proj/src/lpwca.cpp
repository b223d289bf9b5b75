#include "ccra/lpwca.hpp"

#include <cmath>

#include "ccra/errors.hpp"

namespace ccra {

StackedFeatures stack_layers(const VisualStack& vs) {
  if (vs.layers.empty()) {
    throw EmptyInput("stack_layers: visual stack has no layers");
  }
  const Tensor& first = vs.layers.front();
  if (first.ndim() != 2) {
    throw InconsistentLayerShapes("stack_layers: layers must be 2-D, got " + shape_string(first));
  }
  for (const Tensor& layer : vs.layers) {
    if (!layer.same_shape(first)) {
      throw InconsistentLayerShapes("stack_layers: layer shape " + shape_string(layer) +
                                    " differs from " + shape_string(first));
    }
  }
  const std::size_t patches = first.rows(), dim = first.cols();
  std::vector<double> data;
  data.reserve(vs.layers.size() * patches * dim);
  for (const Tensor& layer : vs.layers) {
    data.insert(data.end(), layer.values().begin(), layer.values().end());
  }
  return StackedFeatures{Tensor({vs.layers.size() * patches, dim}, std::move(data)),
                         vs.layers.size()};
}

VisualStack unstack_layers(const StackedFeatures& fs) {
  const std::size_t layers = fs.layer_count;
  if (layers == 0 || fs.tokens.rows() % layers != 0) {
    throw InconsistentLayerShapes("unstack_layers: " + shape_string(fs.tokens) +
                                  " does not split into " + std::to_string(layers) + " layers");
  }
  const std::size_t patches = fs.tokens.rows() / layers;
  VisualStack vs;
  vs.layers.reserve(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    vs.layers.push_back(ops::slice_rows(fs.tokens, l * patches, patches));
  }
  return vs;
}

Tensor lpwca_scores(const Tensor& queries, const StackedFeatures& fs, const LpwcaParams& params) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(params.w_key.cols()));
  Tensor keys = ops::matmul(fs.tokens, params.w_key);
  return ops::scale(ops::matmul(queries, ops::transpose(keys)), scale);
}

LayerPatchMap aggregate_map(const TokenImportance& alpha, const Tensor& scores,
                            std::size_t layer_count) {
  if (scores.ndim() != 2 || alpha.weights.size() != scores.rows()) {
    throw ShapeMismatch("aggregate_map: alpha " + shape_string(alpha.weights) + " vs scores " +
                        shape_string(scores));
  }
  if (layer_count == 0 || scores.cols() % layer_count != 0) {
    throw ShapeMismatch("aggregate_map: " + std::to_string(scores.cols()) +
                        " tokens do not split into " + std::to_string(layer_count) + " layers");
  }
  Tensor flat = ops::matmul(alpha.weights.reshaped({1, alpha.weights.size()}), scores);
  return LayerPatchMap{flat.reshaped({layer_count, scores.cols() / layer_count})};
}

LpwcaGraph lpwca_graph(Graph& g, Var stacked, Var queries, Var alpha, const LpwcaVars& params,
                       double eps, bool normalize_gate) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.value(params.w_key).cols()));
  const std::size_t token_count = g.value(alpha).size();
  const std::size_t stack_rows = g.value(stacked).rows();

  Var keys = g.matmul(stacked, params.w_key);
  Var scores = g.scale(g.matmul(queries, g.transpose(keys)), scale);  // T x (L*N)
  Var alpha_row = g.reshape(alpha, {1, token_count});
  Var map_flat = g.reshape(g.matmul(alpha_row, scores), {stack_rows});
  Var gate_base = normalize_gate ? g.softmax(map_flat) : map_flat;
  Var gated = g.scale_rows(stacked, g.add_const(gate_base, 1.0));
  Var features = g.layer_norm_rows(gated, params.gamma, params.beta, eps);
  return LpwcaGraph{features, map_flat};
}

LpwcaResult lpwca_forward(const TextEmbeddings& text, const VisualStack& vs,
                          const ConditioningParams& cond, const LpwcaParams& params, double eps) {
  StackedFeatures fs = stack_layers(vs);
  Graph g;
  Var text_var = g.input(text.tokens);
  ConditioningVars cond_vars{
      g.input(cond.w_query_self),  g.input(cond.w_key_self), g.input(cond.w_value_self),
      g.input(cond.score_head),    g.input(cond.w_query_lp), g.input(cond.w_query_layer),
      g.input(cond.w_query_patch),
  };
  LpwcaVars vars{g.input(params.w_key), g.input(params.gamma), g.input(params.beta)};

  Var alpha = token_importance_graph(g, text_var, cond_vars);
  Var queries = project_queries_graph(g, text_var, cond_vars.w_query_lp);
  LpwcaGraph stage = lpwca_graph(g, g.input(fs.tokens), queries, alpha, vars, eps);

  const std::size_t layers = fs.layer_count;
  const std::size_t patches = vs.patch_count();
  LpwcaResult out;
  out.features = g.value(stage.features).reshaped({layers, patches, vs.feature_dim()});
  out.map = LayerPatchMap{g.value(stage.map_flat).reshaped({layers, patches})};
  return out;
}

}  // namespace ccra
