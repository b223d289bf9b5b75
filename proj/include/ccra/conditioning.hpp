#pragma once

#include "ccra/graph.hpp"
#include "ccra/tensor.hpp"

namespace ccra {

/// Query token embeddings, one row per token.
struct TextEmbeddings {
  Tensor tokens;  // T x d
};

/// Softmax distribution over tokens; every attention stage aggregates with it.
struct TokenImportance {
  Tensor weights;  // T
};

/// Weights shared by all stages: the token self-attention that produces the
/// importance distribution, the scoring head that reduces contextualized
/// tokens to scalars, and one query projection per attention stage.
struct ConditioningParams {
  Tensor w_query_self;   // d x d_hidden
  Tensor w_key_self;     // d x d_hidden
  Tensor w_value_self;   // d x d_hidden
  Tensor score_head;     // d_hidden
  Tensor w_query_lp;     // d x d_hidden
  Tensor w_query_layer;  // d x d_hidden
  Tensor w_query_patch;  // d x d_hidden
};

struct ConditioningVars {
  Var w_query_self, w_key_self, w_value_self, score_head;
  Var w_query_lp, w_query_layer, w_query_patch;
};

/// Single-head scaled-dot self-attention over the tokens (scale 1/sqrt(d_hidden)),
/// then the score head maps each contextualized token to a scalar and a softmax
/// turns the scalars into the importance distribution.
Var token_importance_graph(Graph& g, Var text, const ConditioningVars& params);

/// Q = tokens * W for one stage's query projection.
Var project_queries_graph(Graph& g, Var text, Var w_query);

TokenImportance token_importance(const TextEmbeddings& text, const ConditioningParams& params);
Tensor project_queries(const TextEmbeddings& text, const Tensor& w_query);

}  // namespace ccra
