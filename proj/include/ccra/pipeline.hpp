#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ccra/conditioning.hpp"
#include "ccra/lpwca.hpp"
#include "ccra/lwca.hpp"
#include "ccra/pwca.hpp"
#include "ccra/tensor.hpp"

namespace ccra {

/// Stage orderings: the progressive default, the parallel variant that skips
/// the joint layer-patch stage, and the variant that swaps patch- and
/// layer-wise refinement.
enum class Variant { kPai, kDecoupled, kShuffled };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);  // throws UnknownVariant

struct CcraConfig {
  std::size_t layer_count = 4;   // L
  std::size_t patch_count = 16;  // N (perfect square required for heatmaps)
  std::size_t feature_dim = 16;  // d
  std::size_t token_count = 3;   // T
  std::size_t hidden_dim = 128;  // attention projection width
  std::size_t llm_dim = 16;      // decoder feature width
  std::size_t vocab_size = 7;
  std::size_t kernel_size = 5;   // layer smoothing taps, odd
  double sigma = 5.0 / 3.0;      // kernel width, defaults to kernel_size / 3
  std::uint64_t seed = 42;
  Variant variant = Variant::kPai;

  // Ablation switches, not part of the on-disk config format.
  SmoothMode smooth_mode = SmoothMode::kSoftmaxThenSmooth;
  bool normalize_layer_patch_gate = false;

  void validate() const;  // throws ConfigError
};

/// Every learnable tensor of the module plus the fixed text projection used
/// by the toy decoder when d != llm_dim. Enumerable in a stable order for
/// counting, updates, and gradient checks.
struct CcraParams {
  ConditioningParams conditioning;
  LpwcaParams lpwca;
  LwcaParams lwca;
  PwcaParams pwca;
  Tensor w_proj;     // 2d x llm_dim
  Tensor b_proj;     // llm_dim
  Tensor w_decoder;  // llm_dim x vocab (zero at init so the toy loss starts at ln V)
  Tensor text_proj;  // d x llm_dim, fixed, present only when d != llm_dim
};

struct ParamEntry {
  std::string name;
  std::string group;   // conditioning | lpwca | lwca | pwca | projection | decoder | fixed
  Tensor* tensor;
  bool counted;    // contributes to the module's additional-parameter count
  bool trainable;  // receives updates in the toy loop
};

std::vector<ParamEntry> param_entries(CcraParams& params);

/// Seeded init: projections uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)],
/// score head and decoder zero (uniform importance and exactly-uniform logits
/// at the start), layer-norm affine at identity.
CcraParams make_params(const CcraConfig& cfg);

/// Fully randomized parameters for gradient checking at a generic point.
CcraParams make_random_params(const CcraConfig& cfg, std::uint64_t seed);

/// Everything a forward pass produces, kept for interpretability export.
/// For kDecoupled the joint map is zero and features_lp is the raw stack (the
/// stage is skipped); for kShuffled patch gating happens per layer, so
/// patch_weights holds the layer average and regional equals semantic, the
/// tensor that enters fusion.
struct ForwardTrace {
  Tensor alpha;                   // T
  Tensor layer_patch_map;         // L x N
  Tensor layer_weights_raw;       // L
  Tensor layer_weights_smoothed;  // L
  Tensor patch_weights;           // N
  Tensor features_lp;             // L x N x d
  Tensor features_semantic;       // N x d
  Tensor features_regional;       // N x d
  Tensor features_fused;          // N x 2d
  Tensor projected;               // N x llm_dim
  Tensor logits;                  // V
};

/// Row-wise [regional ; last-layer] concatenation, regional first.
Tensor fuse(const Tensor& f_regional, const Tensor& f_last);
/// Affine head applied per fused row.
Tensor project_visual(const Tensor& fused, const CcraParams& params);

ForwardTrace ccra_forward(const TextEmbeddings& text, const VisualStack& vs,
                          const CcraParams& params, const CcraConfig& cfg);
ForwardTrace variant_forward(Variant variant, const TextEmbeddings& text, const VisualStack& vs,
                             const CcraParams& params, const CcraConfig& cfg);

struct ParameterCounts {
  std::vector<std::pair<std::string, std::size_t>> groups;
  std::size_t total = 0;  // counted groups only
};

/// Closed-form inventory of the module's additional parameters (decoder and
/// fixed text projection excluded).
ParameterCounts count_parameters(const CcraConfig& cfg);
/// Same number obtained by walking the runtime parameter list.
std::size_t enumerate_parameter_count(CcraParams& params);

struct TrainSample {
  TextEmbeddings text;
  VisualStack visual;
  std::size_t target = 0;
};

/// One vanilla gradient-descent step on the mean cross-entropy of the batch.
/// Returns the pre-update loss. Throws NonFiniteLoss when the loss or the
/// updated parameters stop being finite.
double toy_train_step(CcraParams& params, const std::vector<TrainSample>& batch, double lr,
                      const CcraConfig& cfg);

/// Deterministic standard-normal inputs and a target token drawn from `seed`.
TrainSample synth_inputs(const CcraConfig& cfg, std::uint64_t seed);

struct GradCheckReport {
  struct Group {
    std::string name;
    double max_rel_err = 0.0;
  };
  std::vector<Group> groups;
  double eps = 0.0;
  double tolerance = 0.0;
  bool passed() const;
};

/// Analytic gradients vs. central differences for every parameter group on a
/// seeded instance with fully randomized parameters.
GradCheckReport gradient_check(const CcraConfig& cfg, double eps, double tolerance);

}  // namespace ccra
