#include "ccra/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <utility>

#include "ccra/errors.hpp"
#include "ccra/ops.hpp"
#include "ccra/rng.hpp"

namespace ccra {

namespace {

constexpr double kEps = ops::kLayerNormEps;

struct BoundParams {
  ConditioningVars cond;
  LpwcaVars lpwca;
  LwcaVars lwca;
  PwcaVars pwca;
  Var w_proj, b_proj, w_decoder;
  Var text_proj;
  bool has_text_proj = false;
  std::vector<Var> ordered;  // aligned with param_entries()
};

BoundParams bind_params(Graph& g, const CcraParams& params) {
  auto entries = param_entries(const_cast<CcraParams&>(params));
  BoundParams bound;
  std::unordered_map<std::string, Var> by_name;
  bound.ordered.reserve(entries.size());
  for (const ParamEntry& e : entries) {
    Var v = g.input(*e.tensor);
    bound.ordered.push_back(v);
    by_name.emplace(e.name, v);
  }
  bound.cond = ConditioningVars{
      by_name.at("conditioning.w_query_self"), by_name.at("conditioning.w_key_self"),
      by_name.at("conditioning.w_value_self"), by_name.at("conditioning.score_head"),
      by_name.at("conditioning.w_query_lp"),   by_name.at("conditioning.w_query_layer"),
      by_name.at("conditioning.w_query_patch"),
  };
  bound.lpwca = LpwcaVars{by_name.at("lpwca.w_key"), by_name.at("lpwca.gamma"),
                          by_name.at("lpwca.beta")};
  bound.lwca = LwcaVars{by_name.at("lwca.w_key"), by_name.at("lwca.gamma"),
                        by_name.at("lwca.beta")};
  bound.pwca = PwcaVars{by_name.at("pwca.w_key"), by_name.at("pwca.gamma"),
                        by_name.at("pwca.beta")};
  bound.w_proj = by_name.at("projection.weight");
  bound.b_proj = by_name.at("projection.bias");
  bound.w_decoder = by_name.at("decoder.weight");
  if (auto it = by_name.find("text_projection"); it != by_name.end()) {
    bound.text_proj = it->second;
    bound.has_text_proj = true;
  }
  return bound;
}

struct ForwardVars {
  Var alpha;
  Var map_flat;          // L*N
  Var weights_raw;       // L
  Var weights_smoothed;  // L
  Var patch_w;           // N
  Var features_lp;       // (L*N) x d
  Var semantic, regional, fused, projected, logits;
};

Var decoder_logits(Graph& g, Var text, Var projected, const BoundParams& bp,
                   const CcraConfig& cfg) {
  Var text_llm = bp.has_text_proj ? g.matmul(text, bp.text_proj) : text;
  Var pooled = g.avg_pool_rows(g.concat_rows(text_llm, projected));
  return g.reshape(g.matmul(g.reshape(pooled, {1, cfg.llm_dim}), bp.w_decoder),
                   {cfg.vocab_size});
}

ForwardVars build_forward(Graph& g, Variant variant, Var text, Var stacked,
                          const BoundParams& bp, const CcraConfig& cfg,
                          const char** stage_marker = nullptr) {
  const std::size_t layers = cfg.layer_count;
  const std::size_t patches = cfg.patch_count;
  auto mark = [&](const char* name) {
    if (stage_marker) *stage_marker = name;
  };

  ForwardVars out;
  mark("conditioning");
  out.alpha = token_importance_graph(g, text, bp.cond);
  Var q_layer = project_queries_graph(g, text, bp.cond.w_query_layer);
  Var q_patch = project_queries_graph(g, text, bp.cond.w_query_patch);
  Var f_last = g.slice_rows(stacked, (layers - 1) * patches, patches);

  switch (variant) {
    case Variant::kPai: {
      mark("lpwca");
      Var q_lp = project_queries_graph(g, text, bp.cond.w_query_lp);
      LpwcaGraph lp = lpwca_graph(g, stacked, q_lp, out.alpha, bp.lpwca, kEps,
                                  cfg.normalize_layer_patch_gate);
      mark("lwca");
      LwcaGraph lw = lwca_graph(g, lp.features, layers, q_layer, out.alpha, bp.lwca,
                                cfg.kernel_size, cfg.sigma, kEps, cfg.smooth_mode);
      mark("pwca");
      PwcaGraph pw = pwca_graph(g, lw.semantic, q_patch, out.alpha, bp.pwca, kEps);
      out.features_lp = lp.features;
      out.map_flat = lp.map_flat;
      out.weights_raw = lw.weights_raw;
      out.weights_smoothed = lw.weights_smoothed;
      out.patch_w = pw.weights;
      out.semantic = lw.semantic;
      out.regional = pw.regional;
      break;
    }
    case Variant::kDecoupled: {
      // Both attentions read the raw stack; the patch branch takes its keys
      // from the weighted layer sum and gates the plain layer mean, then the
      // two branch outputs are averaged.
      mark("lwca");
      LwcaGraph lw = lwca_graph(g, stacked, layers, q_layer, out.alpha, bp.lwca,
                                cfg.kernel_size, cfg.sigma, kEps, cfg.smooth_mode);
      mark("pwca");
      Var uniform = g.input(Tensor({layers}, 1.0 / static_cast<double>(layers)));
      Var mean_layers = g.layer_weighted_sum(stacked, uniform);
      Var key_src = g.layer_weighted_sum(stacked, lw.weights_smoothed);

      const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_dim));
      Var keys = g.matmul(key_src, bp.pwca.w_key);
      Var scores = g.scale(g.matmul(q_patch, g.transpose(keys)), scale);
      Var alpha_row = g.reshape(out.alpha, {1, cfg.token_count});
      Var patch_w = g.reshape(g.matmul(alpha_row, scores), {patches});
      Var gated = g.scale_rows(mean_layers, g.add_const(patch_w, 1.0));
      Var reg_branch = g.layer_norm_rows(gated, bp.pwca.gamma, bp.pwca.beta, kEps);

      out.features_lp = stacked;
      out.map_flat = g.input(Tensor({layers * patches}));
      out.weights_raw = lw.weights_raw;
      out.weights_smoothed = lw.weights_smoothed;
      out.patch_w = patch_w;
      out.semantic = lw.semantic;
      out.regional = g.scale(g.add(lw.semantic, reg_branch), 0.5);
      break;
    }
    case Variant::kShuffled: {
      // Joint stage first, then patch gating on every layer, then the layer
      // stage aggregates the gated stack.
      mark("lpwca");
      Var q_lp = project_queries_graph(g, text, bp.cond.w_query_lp);
      LpwcaGraph lp = lpwca_graph(g, stacked, q_lp, out.alpha, bp.lpwca, kEps,
                                  cfg.normalize_layer_patch_gate);
      mark("pwca");
      Var gated_stack{};
      Var patch_sum{};
      for (std::size_t l = 0; l < layers; ++l) {
        Var layer = g.slice_rows(lp.features, l * patches, patches);
        PwcaGraph pw = pwca_graph(g, layer, q_patch, out.alpha, bp.pwca, kEps);
        gated_stack = l == 0 ? pw.regional : g.concat_rows(gated_stack, pw.regional);
        patch_sum = l == 0 ? pw.weights : g.add(patch_sum, pw.weights);
      }
      mark("lwca");
      LwcaGraph lw = lwca_graph(g, gated_stack, layers, q_layer, out.alpha, bp.lwca,
                                cfg.kernel_size, cfg.sigma, kEps, cfg.smooth_mode);
      out.features_lp = lp.features;
      out.map_flat = lp.map_flat;
      out.weights_raw = lw.weights_raw;
      out.weights_smoothed = lw.weights_smoothed;
      out.patch_w = g.scale(patch_sum, 1.0 / static_cast<double>(layers));
      out.semantic = lw.semantic;
      out.regional = lw.semantic;
      break;
    }
    default:
      throw UnknownVariant("variant_forward: unknown variant");
  }

  mark("fuse");
  out.fused = g.concat_cols(out.regional, f_last);
  mark("project");
  out.projected = g.add_row_broadcast(g.matmul(out.fused, bp.w_proj), bp.b_proj);
  mark("decode");
  out.logits = decoder_logits(g, text, out.projected, bp, cfg);
  return out;
}

void check_inputs(const TextEmbeddings& text, const VisualStack& vs, const CcraConfig& cfg) {
  cfg.validate();
  if (text.tokens.ndim() != 2 || text.tokens.rows() != cfg.token_count ||
      text.tokens.cols() != cfg.feature_dim) {
    throw ShapeMismatch("forward: text shape " + shape_string(text.tokens) +
                        " does not match config " + std::to_string(cfg.token_count) + " x " +
                        std::to_string(cfg.feature_dim));
  }
  if (vs.layer_count() != cfg.layer_count || vs.patch_count() != cfg.patch_count ||
      vs.feature_dim() != cfg.feature_dim) {
    throw ShapeMismatch("forward: visual stack (" + std::to_string(vs.layer_count()) +
                        " layers of " + std::to_string(vs.patch_count()) + " x " +
                        std::to_string(vs.feature_dim()) + ") does not match config");
  }
}

ForwardTrace extract_trace(const Graph& g, const ForwardVars& fv, const CcraConfig& cfg) {
  ForwardTrace t;
  t.alpha = g.value(fv.alpha);
  t.layer_patch_map = g.value(fv.map_flat).reshaped({cfg.layer_count, cfg.patch_count});
  t.layer_weights_raw = g.value(fv.weights_raw);
  t.layer_weights_smoothed = g.value(fv.weights_smoothed);
  t.patch_weights = g.value(fv.patch_w);
  t.features_lp =
      g.value(fv.features_lp).reshaped({cfg.layer_count, cfg.patch_count, cfg.feature_dim});
  t.features_semantic = g.value(fv.semantic);
  t.features_regional = g.value(fv.regional);
  t.features_fused = g.value(fv.fused);
  t.projected = g.value(fv.projected);
  t.logits = g.value(fv.logits);
  return t;
}

}  // namespace

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::kPai: return "pai";
    case Variant::kDecoupled: return "decoupled";
    case Variant::kShuffled: return "shuffled";
  }
  throw UnknownVariant("variant_name: unknown variant");
}

Variant parse_variant(const std::string& name) {
  if (name == "pai") return Variant::kPai;
  if (name == "decoupled") return Variant::kDecoupled;
  if (name == "shuffled") return Variant::kShuffled;
  throw UnknownVariant("unknown variant '" + name + "' (expected pai, decoupled or shuffled)");
}

void CcraConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(layer_count, "L");
  positive(patch_count, "N");
  positive(feature_dim, "d");
  positive(token_count, "T");
  positive(hidden_dim, "d_hidden");
  positive(llm_dim, "d_llm");
  positive(vocab_size, "V");
  if (kernel_size == 0 || kernel_size % 2 == 0) {
    throw ConfigError("k must be odd and positive, got " + std::to_string(kernel_size));
  }
  if (kernel_size > 2 * layer_count - 1) {
    throw ConfigError("k = " + std::to_string(kernel_size) + " exceeds 2L-1 = " +
                      std::to_string(2 * layer_count - 1));
  }
  if (!(sigma > 0.0)) {
    throw ConfigError("sigma must be positive");
  }
}

std::vector<ParamEntry> param_entries(CcraParams& p) {
  std::vector<ParamEntry> entries{
      {"conditioning.w_query_self", "conditioning", &p.conditioning.w_query_self, true, true},
      {"conditioning.w_key_self", "conditioning", &p.conditioning.w_key_self, true, true},
      {"conditioning.w_value_self", "conditioning", &p.conditioning.w_value_self, true, true},
      {"conditioning.score_head", "conditioning", &p.conditioning.score_head, true, true},
      {"conditioning.w_query_lp", "conditioning", &p.conditioning.w_query_lp, true, true},
      {"conditioning.w_query_layer", "conditioning", &p.conditioning.w_query_layer, true, true},
      {"conditioning.w_query_patch", "conditioning", &p.conditioning.w_query_patch, true, true},
      {"lpwca.w_key", "lpwca", &p.lpwca.w_key, true, true},
      {"lpwca.gamma", "lpwca", &p.lpwca.gamma, true, true},
      {"lpwca.beta", "lpwca", &p.lpwca.beta, true, true},
      {"lwca.w_key", "lwca", &p.lwca.w_key, true, true},
      {"lwca.gamma", "lwca", &p.lwca.gamma, true, true},
      {"lwca.beta", "lwca", &p.lwca.beta, true, true},
      {"pwca.w_key", "pwca", &p.pwca.w_key, true, true},
      {"pwca.gamma", "pwca", &p.pwca.gamma, true, true},
      {"pwca.beta", "pwca", &p.pwca.beta, true, true},
      {"projection.weight", "projection", &p.w_proj, true, true},
      {"projection.bias", "projection", &p.b_proj, true, true},
      {"decoder.weight", "decoder", &p.w_decoder, false, true},
  };
  if (!p.text_proj.empty()) {
    entries.push_back({"text_projection", "fixed", &p.text_proj, false, false});
  }
  return entries;
}

CcraParams make_params(const CcraConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  auto projection = [&rng](std::size_t rows, std::size_t cols) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    Tensor t({rows, cols});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
    return t;
  };
  const std::size_t d = cfg.feature_dim, dh = cfg.hidden_dim, llm = cfg.llm_dim;

  CcraParams p;
  p.conditioning.w_query_self = projection(d, dh);
  p.conditioning.w_key_self = projection(d, dh);
  p.conditioning.w_value_self = projection(d, dh);
  p.conditioning.score_head = Tensor({dh});  // zero: importance starts uniform
  p.conditioning.w_query_lp = projection(d, dh);
  p.conditioning.w_query_layer = projection(d, dh);
  p.conditioning.w_query_patch = projection(d, dh);
  p.lpwca = LpwcaParams{projection(d, dh), Tensor({d}, 1.0), Tensor({d})};
  p.lwca = LwcaParams{projection(d, dh), Tensor({d}, 1.0), Tensor({d})};
  p.pwca = PwcaParams{projection(d, dh), Tensor({d}, 1.0), Tensor({d})};
  p.w_proj = projection(2 * d, llm);
  p.b_proj = Tensor({llm});
  p.w_decoder = Tensor({llm, cfg.vocab_size});  // zero: logits start exactly uniform
  if (d != llm) p.text_proj = projection(d, llm);
  return p;
}

CcraParams make_random_params(const CcraConfig& cfg, std::uint64_t seed) {
  CcraParams p = make_params(cfg);
  Rng rng(seed);
  for (const ParamEntry& e : param_entries(p)) {
    Tensor& t = *e.tensor;
    const bool is_gain = e.name.find("gamma") != std::string::npos;
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = is_gain ? rng.uniform(0.75, 1.25) : rng.uniform(-0.5, 0.5);
    }
  }
  return p;
}

Tensor fuse(const Tensor& f_regional, const Tensor& f_last) {
  if (f_regional.ndim() != 2 || !f_regional.same_shape(f_last)) {
    throw ShapeMismatch("fuse: " + shape_string(f_regional) + " vs " + shape_string(f_last));
  }
  return ops::concat_cols(f_regional, f_last);
}

Tensor project_visual(const Tensor& fused, const CcraParams& params) {
  return ops::add_row_broadcast(ops::matmul(fused, params.w_proj), params.b_proj);
}

ForwardTrace ccra_forward(const TextEmbeddings& text, const VisualStack& vs,
                          const CcraParams& params, const CcraConfig& cfg) {
  return variant_forward(Variant::kPai, text, vs, params, cfg);
}

ForwardTrace variant_forward(Variant variant, const TextEmbeddings& text, const VisualStack& vs,
                             const CcraParams& params, const CcraConfig& cfg) {
  check_inputs(text, vs, cfg);
  StackedFeatures fs = stack_layers(vs);
  Graph g;
  Var text_var = g.input(text.tokens);
  Var stacked = g.input(fs.tokens);
  const char* stage = "bind";
  try {
    BoundParams bp = bind_params(g, params);
    ForwardVars fv = build_forward(g, variant, text_var, stacked, bp, cfg, &stage);
    return extract_trace(g, fv, cfg);
  } catch (const UnknownVariant&) {
    throw;
  } catch (const Error& e) {
    throw Error(std::string(e.what()) + " [stage: " + stage + "]");
  }
}

ParameterCounts count_parameters(const CcraConfig& cfg) {
  cfg.validate();
  const std::size_t d = cfg.feature_dim, dh = cfg.hidden_dim, llm = cfg.llm_dim;
  ParameterCounts counts;
  counts.groups = {
      {"conditioning", 6 * d * dh + dh},
      {"lpwca", d * dh + 2 * d},
      {"lwca", d * dh + 2 * d},
      {"pwca", d * dh + 2 * d},
      {"projection", 2 * d * llm + llm},
  };
  for (const auto& [name, n] : counts.groups) counts.total += n;
  return counts;
}

std::size_t enumerate_parameter_count(CcraParams& params) {
  std::size_t total = 0;
  for (const ParamEntry& e : param_entries(params)) {
    if (e.counted) total += e.tensor->size();
  }
  return total;
}

double toy_train_step(CcraParams& params, const std::vector<TrainSample>& batch, double lr,
                      const CcraConfig& cfg) {
  if (batch.empty()) throw EmptyInput("toy_train_step: batch is empty");
  if (lr < 0.0) throw Error("toy_train_step: learning rate must be nonnegative");

  auto entries = param_entries(params);
  std::vector<Tensor> grad_sums(entries.size());
  double loss_total = 0.0;

  try {
    for (const TrainSample& sample : batch) {
      check_inputs(sample.text, sample.visual, cfg);
      if (sample.target >= cfg.vocab_size) {
        throw ShapeMismatch("toy_train_step: target " + std::to_string(sample.target) +
                            " out of range for V = " + std::to_string(cfg.vocab_size));
      }
      StackedFeatures fs = stack_layers(sample.visual);
      Graph g;
      Var text_var = g.input(sample.text.tokens);
      Var stacked = g.input(fs.tokens);
      BoundParams bp = bind_params(g, params);
      ForwardVars fv = build_forward(g, cfg.variant, text_var, stacked, bp, cfg);
      Var loss = g.cross_entropy_with_logits(fv.logits, sample.target);
      loss_total += g.value(loss)[0];

      std::vector<Tensor> grads = g.backward(loss);
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const Tensor& grad = grads[bp.ordered[i].id];
        grad_sums[i] = grad_sums[i].empty() ? grad : ops::add(grad_sums[i], grad);
      }
    }

    if (lr > 0.0) {
      const double step = -lr / static_cast<double>(batch.size());
      for (std::size_t i = 0; i < entries.size(); ++i) {
        if (!entries[i].trainable) continue;
        *entries[i].tensor = ops::add(*entries[i].tensor, ops::scale(grad_sums[i], step));
      }
    }
  } catch (const NonFiniteValue& e) {
    throw NonFiniteLoss(std::string("toy_train_step: ") + e.what());
  }

  const double loss = loss_total / static_cast<double>(batch.size());
  if (!std::isfinite(loss)) {
    throw NonFiniteLoss("toy_train_step: loss is not finite");
  }
  return loss;
}

TrainSample synth_inputs(const CcraConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  TrainSample sample;
  Tensor text({cfg.token_count, cfg.feature_dim});
  for (std::size_t i = 0; i < text.size(); ++i) text[i] = rng.normal();
  sample.text.tokens = std::move(text);
  sample.visual.layers.reserve(cfg.layer_count);
  for (std::size_t l = 0; l < cfg.layer_count; ++l) {
    Tensor layer({cfg.patch_count, cfg.feature_dim});
    for (std::size_t i = 0; i < layer.size(); ++i) layer[i] = rng.normal();
    sample.visual.layers.push_back(std::move(layer));
  }
  sample.target = static_cast<std::size_t>(rng.below(cfg.vocab_size));
  return sample;
}

bool GradCheckReport::passed() const {
  for (const Group& g : groups) {
    if (!(g.max_rel_err < tolerance)) return false;
  }
  return true;
}

namespace {

double eval_loss(const TrainSample& sample, const CcraParams& params, const CcraConfig& cfg) {
  StackedFeatures fs = stack_layers(sample.visual);
  Graph g;
  Var text_var = g.input(sample.text.tokens);
  Var stacked = g.input(fs.tokens);
  BoundParams bp = bind_params(g, params);
  ForwardVars fv = build_forward(g, cfg.variant, text_var, stacked, bp, cfg);
  return g.value(g.cross_entropy_with_logits(fv.logits, sample.target))[0];
}

}  // namespace

GradCheckReport gradient_check(const CcraConfig& cfg, double eps, double tolerance) {
  cfg.validate();
  if (!(eps > 0.0)) throw Error("gradient_check: eps must be positive");

  TrainSample sample = synth_inputs(cfg, cfg.seed);
  CcraParams params = make_random_params(cfg, cfg.seed + 0x9e3779b97f4a7c15ULL);

  // Analytic gradients from one recorded pass.
  StackedFeatures fs = stack_layers(sample.visual);
  Graph g;
  Var text_var = g.input(sample.text.tokens);
  Var stacked = g.input(fs.tokens);
  BoundParams bp = bind_params(g, params);
  ForwardVars fv = build_forward(g, cfg.variant, text_var, stacked, bp, cfg);
  std::vector<Tensor> grads = g.backward(g.cross_entropy_with_logits(fv.logits, sample.target));

  GradCheckReport report;
  report.eps = eps;
  report.tolerance = tolerance;
  const std::vector<std::string> group_order = {"conditioning", "lpwca",      "lwca",
                                                "pwca",         "projection", "decoder"};
  std::unordered_map<std::string, double> worst;
  for (const std::string& name : group_order) worst[name] = 0.0;

  auto entries = param_entries(params);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].group == "fixed") continue;
    const Tensor& analytic = grads[bp.ordered[i].id];
    Tensor& tensor = *entries[i].tensor;
    for (std::size_t c = 0; c < tensor.size(); ++c) {
      const double original = tensor[c];
      tensor[c] = original + eps;
      const double hi = eval_loss(sample, params, cfg);
      tensor[c] = original - eps;
      const double lo = eval_loss(sample, params, cfg);
      tensor[c] = original;
      const double fd = (hi - lo) / (2.0 * eps);
      const double denom = std::max({std::abs(analytic[c]), std::abs(fd), 1e-5});
      const double rel = std::abs(analytic[c] - fd) / denom;
      double& w = worst[entries[i].group];
      if (rel > w) w = rel;
    }
  }

  for (const std::string& name : group_order) {
    report.groups.push_back({name, worst[name]});
  }
  return report;
}

}  // namespace ccra
