#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ccra/pipeline.hpp"
#include "oracle_ref.hpp"

using namespace ccra;

namespace {

double field_diff(const Tensor& got, const std::vector<double>& want) {
  REQUIRE(got.size() == want.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    worst = std::max(worst, std::abs(got[i] - want[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("forward matches the straight-line oracle across the config grid") {
  std::uint64_t seed = 1000;
  for (std::size_t layers : {1u, 2u, 4u}) {
    for (std::size_t patches : {1u, 4u, 9u}) {
      for (std::size_t tokens : {1u, 3u}) {
        for (std::size_t dim : {2u, 4u}) {
          for (std::size_t hidden : {1u, 2u}) {
            CcraConfig cfg;
            cfg.layer_count = layers;
            cfg.patch_count = patches;
            cfg.feature_dim = dim;
            cfg.token_count = tokens;
            cfg.hidden_dim = hidden;
            cfg.llm_dim = dim == 2 ? 2 : 3;  // cover both text projection paths
            cfg.vocab_size = 5;
            cfg.kernel_size = std::min<std::size_t>(5, 2 * layers - 1);
            cfg.sigma = static_cast<double>(cfg.kernel_size) / 3.0;
            cfg.seed = ++seed;

            CcraParams params = make_random_params(cfg, seed * 31 + 7);
            TrainSample sample = synth_inputs(cfg, seed * 17 + 3);
            const std::size_t target = sample.target;

            ForwardTrace trace = ccra_forward(sample.text, sample.visual, params, cfg);
            oracle::Trace expected =
                oracle::run(sample.text, sample.visual, params, cfg, target);

            INFO("L=", layers, " N=", patches, " T=", tokens, " d=", dim, " dh=", hidden);
            CHECK(field_diff(trace.alpha, expected.alpha) < 1e-10);
            CHECK(field_diff(trace.layer_patch_map, expected.map) < 1e-10);
            CHECK(field_diff(trace.layer_weights_raw, expected.weights_raw) < 1e-10);
            CHECK(field_diff(trace.layer_weights_smoothed, expected.weights_smoothed) < 1e-10);
            CHECK(field_diff(trace.patch_weights, expected.patch_w) < 1e-10);
            CHECK(field_diff(trace.features_lp, expected.features_lp) < 1e-10);
            CHECK(field_diff(trace.features_semantic, expected.semantic) < 1e-10);
            CHECK(field_diff(trace.features_regional, expected.regional) < 1e-10);
            CHECK(field_diff(trace.features_fused, expected.fused) < 1e-10);
            CHECK(field_diff(trace.projected, expected.projected) < 1e-10);
            CHECK(field_diff(trace.logits, expected.logits) < 1e-10);

            CcraParams probe = params;
            const double loss = toy_train_step(probe, {sample}, 0.0, cfg);
            CHECK(std::abs(loss - expected.loss) < 1e-10);
          }
        }
      }
    }
  }
}
