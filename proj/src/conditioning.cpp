#include "ccra/conditioning.hpp"

#include <cmath>

#include "ccra/errors.hpp"

namespace ccra {

Var token_importance_graph(Graph& g, Var text, const ConditioningVars& params) {
  const std::size_t hidden = g.value(params.w_query_self).cols();
  const double scale = 1.0 / std::sqrt(static_cast<double>(hidden));

  Var q = g.matmul(text, params.w_query_self);
  Var k = g.matmul(text, params.w_key_self);
  Var v = g.matmul(text, params.w_value_self);
  Var attn = g.softmax(g.scale(g.matmul(q, g.transpose(k)), scale));
  Var contextualized = g.matmul(attn, v);  // T x d_hidden

  const std::size_t tokens = g.value(text).rows();
  Var head = g.reshape(params.score_head, {hidden, 1});
  Var scores = g.reshape(g.matmul(contextualized, head), {tokens});
  return g.softmax(scores);
}

Var project_queries_graph(Graph& g, Var text, Var w_query) {
  return g.matmul(text, w_query);
}

TokenImportance token_importance(const TextEmbeddings& text, const ConditioningParams& params) {
  Graph g;
  Var t = g.input(text.tokens);
  ConditioningVars vars{
      g.input(params.w_query_self),  g.input(params.w_key_self), g.input(params.w_value_self),
      g.input(params.score_head),    g.input(params.w_query_lp), g.input(params.w_query_layer),
      g.input(params.w_query_patch),
  };
  return TokenImportance{g.value(token_importance_graph(g, t, vars))};
}

Tensor project_queries(const TextEmbeddings& text, const Tensor& w_query) {
  Graph g;
  return g.value(project_queries_graph(g, g.input(text.tokens), g.input(w_query)));
}

}  // namespace ccra
