#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "ccra/conditioning.hpp"
#include "ccra/errors.hpp"
#include "ccra/ops.hpp"
#include "ccra/rng.hpp"

using namespace ccra;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

ConditioningParams random_conditioning(Rng& rng, std::size_t d, std::size_t hidden) {
  ConditioningParams p;
  p.w_query_self = random_tensor(rng, {d, hidden});
  p.w_key_self = random_tensor(rng, {d, hidden});
  p.w_value_self = random_tensor(rng, {d, hidden});
  p.score_head = random_tensor(rng, {hidden});
  p.w_query_lp = random_tensor(rng, {d, hidden});
  p.w_query_layer = random_tensor(rng, {d, hidden});
  p.w_query_patch = random_tensor(rng, {d, hidden});
  return p;
}

std::size_t argmax(const Tensor& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace

TEST_CASE("single token always gets full importance") {
  Rng rng(41);
  ConditioningParams params = random_conditioning(rng, 3, 4);
  TextEmbeddings text{random_tensor(rng, {1, 3})};
  TokenImportance alpha = token_importance(text, params);
  CHECK(alpha.weights.size() == 1);
  CHECK(alpha.weights[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical tokens share importance uniformly") {
  Rng rng(42);
  ConditioningParams params = random_conditioning(rng, 4, 3);
  const std::size_t tokens = 5;
  Tensor row = random_tensor(rng, {4});
  Tensor all({tokens, 4});
  for (std::size_t i = 0; i < tokens; ++i)
    for (std::size_t j = 0; j < 4; ++j) all.at(i, j) = row[j];
  TokenImportance alpha = token_importance(TextEmbeddings{all}, params);
  for (std::size_t i = 0; i < tokens; ++i) {
    CHECK(alpha.weights[i] == doctest::Approx(1.0 / tokens).epsilon(1e-12));
  }
}

TEST_CASE("T=2 hand case matches a scalar-arithmetic walkthrough") {
  // d = 2, d_hidden = 1: every projection is a 2-vector, every intermediate a
  // scalar, so the whole five-step formula can be traced by hand.
  ConditioningParams p;
  p.w_query_self = Tensor({2, 1}, std::vector<double>{0.3, -0.2});
  p.w_key_self = Tensor({2, 1}, std::vector<double>{0.5, 0.1});
  p.w_value_self = Tensor({2, 1}, std::vector<double>{-0.4, 0.7});
  p.score_head = Tensor({1}, std::vector<double>{1.3});
  p.w_query_lp = Tensor({2, 1}, 0.0);
  p.w_query_layer = Tensor({2, 1}, 0.0);
  p.w_query_patch = Tensor({2, 1}, 0.0);
  Tensor text({2, 2}, std::vector<double>{1.0, 2.0, -1.0, 0.5});

  // Scalar oracle, step by step.
  const double q0 = 1.0 * 0.3 + 2.0 * (-0.2);
  const double q1 = -1.0 * 0.3 + 0.5 * (-0.2);
  const double k0 = 1.0 * 0.5 + 2.0 * 0.1;
  const double k1 = -1.0 * 0.5 + 0.5 * 0.1;
  const double v0 = 1.0 * (-0.4) + 2.0 * 0.7;
  const double v1 = -1.0 * (-0.4) + 0.5 * 0.7;
  // scale = 1/sqrt(1) = 1
  auto soft2 = [](double a, double b) {
    const double hi = std::max(a, b);
    const double ea = std::exp(a - hi), eb = std::exp(b - hi);
    return std::pair<double, double>{ea / (ea + eb), eb / (ea + eb)};
  };
  auto [p00, p01] = soft2(q0 * k0, q0 * k1);
  auto [p10, p11] = soft2(q1 * k0, q1 * k1);
  const double c0 = p00 * v0 + p01 * v1;
  const double c1 = p10 * v0 + p11 * v1;
  auto [a0, a1] = soft2(c0 * 1.3, c1 * 1.3);

  TokenImportance alpha = token_importance(TextEmbeddings{text}, p);
  CHECK(alpha.weights[0] == doctest::Approx(a0).epsilon(1e-14));
  CHECK(alpha.weights[1] == doctest::Approx(a1).epsilon(1e-14));
}

TEST_CASE("importance weights satisfy their invariants") {
  Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t tokens = 1 + rng.below(6);
    ConditioningParams params = random_conditioning(rng, 5, 3);
    TokenImportance alpha =
        token_importance(TextEmbeddings{random_tensor(rng, {tokens, 5})}, params);
    double total = 0.0;
    for (std::size_t i = 0; i < tokens; ++i) {
      CHECK(alpha.weights[i] >= 0.0);
      total += alpha.weights[i];
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("token reordering permutes the importance weights") {
  Rng rng(44);
  ConditioningParams params = random_conditioning(rng, 4, 3);
  Tensor text = random_tensor(rng, {5, 4});
  TokenImportance base = token_importance(TextEmbeddings{text}, params);

  const std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  Tensor shuffled({5, 4});
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 4; ++j) shuffled.at(i, j) = text.at(perm[i], j);
  TokenImportance permuted = token_importance(TextEmbeddings{shuffled}, params);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(permuted.weights[i] == doctest::Approx(base.weights[perm[i]]).epsilon(1e-12));
  }
}

TEST_CASE("scaling the score head keeps the argmax token") {
  Rng rng(45);
  for (int trial = 0; trial < 10; ++trial) {
    ConditioningParams params = random_conditioning(rng, 4, 3);
    TextEmbeddings text{random_tensor(rng, {4, 4})};
    TokenImportance base = token_importance(text, params);

    ConditioningParams scaled = params;
    scaled.score_head = ops::scale(params.score_head, 7.5);
    TokenImportance boosted = token_importance(text, scaled);
    CHECK(argmax(base.weights) == argmax(boosted.weights));
  }
}

TEST_CASE("token importance is differentiable end to end") {
  Rng rng(46);
  const std::size_t tokens = 3, d = 3, hidden = 2;
  ConditioningParams params = random_conditioning(rng, d, hidden);
  Tensor text = random_tensor(rng, {tokens, d});
  Tensor probe_weights = random_tensor(rng, {tokens});

  auto loss_with = [&](const Tensor& score_head) {
    ConditioningParams p = params;
    p.score_head = score_head;
    Graph g;
    Var tv = g.input(text);
    ConditioningVars vars{g.input(p.w_query_self), g.input(p.w_key_self),
                          g.input(p.w_value_self), g.input(p.score_head),
                          g.input(p.w_query_lp),   g.input(p.w_query_layer),
                          g.input(p.w_query_patch)};
    Var alpha = token_importance_graph(g, tv, vars);
    return g.value(g.sum(g.mul(alpha, g.input(probe_weights))))[0];
  };

  Graph g;
  Var tv = g.input(text);
  ConditioningVars vars{g.input(params.w_query_self), g.input(params.w_key_self),
                        g.input(params.w_value_self), g.input(params.score_head),
                        g.input(params.w_query_lp),   g.input(params.w_query_layer),
                        g.input(params.w_query_patch)};
  Var alpha = token_importance_graph(g, tv, vars);
  Var loss = g.sum(g.mul(alpha, g.input(probe_weights)));
  std::vector<Tensor> grads = g.backward(loss);

  Tensor fd = finite_difference([&](const Tensor& h) { return loss_with(h); },
                                params.score_head, 1e-6);
  const Tensor& analytic = grads[vars.score_head.id];
  for (std::size_t i = 0; i < fd.size(); ++i) {
    CHECK(std::abs(analytic[i] - fd[i]) < 1e-7);
  }
}

TEST_CASE("project_queries") {
  Rng rng(47);
  Tensor text = random_tensor(rng, {3, 4});

  Tensor zero_w({4, 2});
  Tensor q = project_queries(TextEmbeddings{text}, zero_w);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == 0.0);

  Tensor eye({4, 4});
  for (std::size_t i = 0; i < 4; ++i) eye.at(i, i) = 1.0;
  q = project_queries(TextEmbeddings{text}, eye);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == text[i]);

  Tensor one_token({1, 2}, std::vector<double>{3.0, -2.0});
  Tensor w({2, 1}, std::vector<double>{0.5, 2.0});
  q = project_queries(TextEmbeddings{one_token}, w);
  CHECK(q.size() == 1);
  CHECK(q[0] == doctest::Approx(3.0 * 0.5 - 2.0 * 2.0));

  CHECK_THROWS_AS(project_queries(TextEmbeddings{text}, w), ShapeMismatch);
}
