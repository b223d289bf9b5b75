#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "ccra/errors.hpp"
#include "ccra/graph.hpp"
#include "ccra/ops.hpp"
#include "ccra/rng.hpp"
#include "ccra/tensor.hpp"

using namespace ccra;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.same_shape(b));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace

TEST_CASE("tensor construction rejects bad input") {
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1.0, 2.0}), ShapeMismatch);
  CHECK_THROWS_AS(Tensor({2}, std::vector<double>{1.0, std::nan("")}), NonFiniteValue);
  CHECK_THROWS_AS(Tensor({0}), EmptyInput);
  CHECK_THROWS_AS(Tensor(std::vector<std::size_t>{}), EmptyInput);
}

TEST_CASE("matmul identity and hand cases") {
  Tensor eye({2, 2}, std::vector<double>{1, 0, 0, 1});
  Tensor m({2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(max_abs_diff(ops::matmul(eye, m), m) == 0.0);

  Tensor a({1, 1}, std::vector<double>{2});
  Tensor b({1, 1}, std::vector<double>{3});
  CHECK(ops::matmul(a, b)[0] == doctest::Approx(6.0));

  Tensor zero({3, 2});
  Tensor out = ops::matmul(zero, m);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.0);
}

TEST_CASE("matmul reports both shapes on mismatch") {
  Tensor a({2, 3});
  Tensor b({2, 3});
  try {
    ops::matmul(a, b);
    FAIL("expected ShapeMismatch");
  } catch (const ShapeMismatch& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2 x 3]") != std::string::npos);
    CHECK(msg.find("vs") != std::string::npos);
  }
}

TEST_CASE("softmax hand cases") {
  Tensor sym({2}, std::vector<double>{0, 0});
  Tensor out = ops::softmax(sym);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-12));

  Tensor logs({2}, std::vector<double>{std::log(1.0), std::log(3.0)});
  out = ops::softmax(logs);
  CHECK(out[0] == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(out[1] == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax sums to one and ignores shifts") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    Tensor v = random_tensor(rng, {n}, -30.0, 30.0);
    Tensor out = ops::softmax(v);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(out[i] > 0.0);
      total += out[i];
    }
    CHECK(std::abs(total - 1.0) < 1e-12);

    const double shift = rng.uniform(-100.0, 100.0);
    Tensor shifted = ops::add_const(v, shift);
    CHECK(max_abs_diff(ops::softmax(shifted), out) < 1e-12);
  }
}

TEST_CASE("layer_norm hand cases") {
  Tensor gamma({3}, 1.0);
  Tensor beta({3});
  Tensor constant({3}, 4.2);
  Tensor out = ops::layer_norm(constant, gamma, beta);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == 0.0);

  Tensor two({2}, std::vector<double>{1.0, -1.0});
  out = ops::layer_norm(two, Tensor({2}, 1.0), Tensor({2}), 1e-12);
  CHECK(std::abs(out[0] - 1.0) < 1e-6);
  CHECK(std::abs(out[1] + 1.0) < 1e-6);

  Tensor x({3}, std::vector<double>{3.0, -1.0, 5.5});
  Tensor betas({3}, std::vector<double>{0.5, -2.0, 1.0});
  out = ops::layer_norm(x, Tensor({3}), betas);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == betas[i]);

  CHECK_THROWS_AS(ops::layer_norm(x, Tensor({2}, 1.0), betas), ShapeMismatch);
}

TEST_CASE("layer_norm normalizes generic rows") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + rng.below(10);
    Tensor x = random_tensor(rng, {d}, -5.0, 5.0);
    x[0] += 20.0;  // keep variance far above eps
    Tensor out = ops::layer_norm(x, Tensor({d}, 1.0), Tensor({d}), 1e-10);
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += out[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) var += (out[i] - mean) * (out[i] - mean);
    var /= static_cast<double>(d);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("avg_pool_rows") {
  Tensor m({3, 2}, std::vector<double>{1.5, -2.0, 1.5, -2.0, 1.5, -2.0});
  Tensor out = ops::avg_pool_rows(m);
  CHECK(out[0] == doctest::Approx(1.5));
  CHECK(out[1] == doctest::Approx(-2.0));

  Tensor m2({2, 2}, std::vector<double>{1, 2, 3, 4});
  out = ops::avg_pool_rows(m2);
  CHECK(out[0] == doctest::Approx(2.0));
  CHECK(out[1] == doctest::Approx(3.0));

  Tensor single({1, 4}, std::vector<double>{9, 8, 7, 6});
  out = ops::avg_pool_rows(single);
  for (std::size_t j = 0; j < 4; ++j) CHECK(out[j] == single.at(0, j));
}

TEST_CASE("gaussian_kernel values and symmetry") {
  Tensor k1 = ops::gaussian_kernel(1, 2.5);
  CHECK(k1.size() == 1);
  CHECK(k1[0] == 1.0);

  // k=3, sigma=1: [e, 1, e] / (1 + 2e) with e = exp(-1/2).
  const double e = std::exp(-0.5);
  Tensor k3 = ops::gaussian_kernel(3, 1.0);
  CHECK(std::abs(k3[0] - e / (1.0 + 2.0 * e)) < 1e-15);
  CHECK(std::abs(k3[1] - 1.0 / (1.0 + 2.0 * e)) < 1e-15);
  CHECK(std::abs(k3[0] - 0.274069) < 1e-6);
  CHECK(std::abs(k3[1] - 0.451863) < 1e-6);
  CHECK(std::abs(k3[2] - 0.274069) < 1e-6);

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 1 + 2 * rng.below(6);
    const double sigma = rng.uniform(0.2, 4.0);
    Tensor g = ops::gaussian_kernel(k, sigma);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      total += g[i];
      CHECK(g[i] == g[k - 1 - i]);  // palindromic
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }

  CHECK_THROWS_AS(ops::gaussian_kernel(4, 1.0), EvenKernel);
  CHECK_THROWS_AS(ops::gaussian_kernel(3, 0.0), NonPositiveSigma);
  CHECK_THROWS_AS(ops::gaussian_kernel(3, -1.0), NonPositiveSigma);
}

TEST_CASE("conv1d_reflect hand cases") {
  // Normalized kernel on a constant signal changes nothing.
  Tensor constant({6}, 3.25);
  Tensor g = ops::gaussian_kernel(5, 1.3);
  Tensor out = ops::conv1d_reflect(constant, g);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == doctest::Approx(3.25).epsilon(1e-12));

  // Impulse at the left edge: reflection folds the kernel tail back in.
  Tensor impulse({5}, std::vector<double>{1, 0, 0, 0, 0});
  Tensor k3 = ops::gaussian_kernel(3, 1.0);
  out = ops::conv1d_reflect(impulse, k3);
  CHECK(std::abs(out[0] - (k3[1] + k3[2])) < 1e-15);
  CHECK(std::abs(out[0] - 0.725932) < 1e-6);
  CHECK(std::abs(out[1] - 0.274069) < 1e-6);
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 0.0);
  CHECK(out[4] == 0.0);

  // Identity kernel is bit-exact.
  Tensor v({4}, std::vector<double>{0.1, -0.7, 2.0, 0.3});
  Tensor identity({1}, std::vector<double>{1.0});
  out = ops::conv1d_reflect(v, identity);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(out[i] == v[i]);

  CHECK_THROWS_AS(ops::conv1d_reflect(Tensor({2}, 1.0), ops::gaussian_kernel(5, 1.0)),
                  KernelTooLarge);
  CHECK_THROWS_AS(ops::conv1d_reflect(v, Tensor({2}, 0.5)), EvenKernel);
}

TEST_CASE("conv1d_reflect matches a brute-force padded reference") {
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(9);
    const std::size_t max_k = 2 * n - 1;
    std::size_t k = 1 + 2 * rng.below(4);
    if (k > max_k) k = max_k;
    Tensor v = random_tensor(rng, {n});
    Tensor g = ops::gaussian_kernel(k, rng.uniform(0.3, 2.0));

    // Reference: explicitly materialize the symmetric extension, then convolve.
    const std::size_t h = (k - 1) / 2;
    std::vector<double> padded;
    for (std::size_t i = h; i-- > 0;) padded.push_back(v[std::min(i, n - 1)]);
    for (std::size_t i = 0; i < n; ++i) padded.push_back(v[i]);
    for (std::size_t i = 0; i < h; ++i) padded.push_back(v[n - 1 - std::min(i, n - 1)]);

    Tensor out = ops::conv1d_reflect(v, g);
    for (std::size_t i = 0; i < n; ++i) {
      double expected = 0.0;
      for (std::size_t t = 0; t < k; ++t) {
        expected += g[t] * padded[i + (k - 1) - t];
      }
      CHECK(std::abs(out[i] - expected) < 1e-13);
    }
  }
}

TEST_CASE("conv1d_reflect conserves mass for normalized kernels") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + rng.below(10);
    std::size_t k = 1 + 2 * rng.below(5);
    if (k > 2 * n - 1) k = 2 * n - 1;
    Tensor v = random_tensor(rng, {n}, -3.0, 3.0);
    Tensor g = ops::gaussian_kernel(k, rng.uniform(0.3, 3.0));
    CHECK(std::abs(ops::sum(ops::conv1d_reflect(v, g)) - ops::sum(v)) < 1e-10);
  }
}

TEST_CASE("finite_difference on simple functions") {
  auto square = [](const Tensor& x) { return x[0] * x[0]; };
  Tensor x({1}, std::vector<double>{3.0});
  Tensor grad = finite_difference(square, x, 1e-5);
  CHECK(std::abs(grad[0] - 6.0) < 1e-8);

  auto constant = [](const Tensor&) { return 4.0; };
  Tensor c({4}, 0.7);
  grad = finite_difference(constant, c, 1e-5);
  for (std::size_t i = 0; i < 4; ++i) CHECK(grad[i] == 0.0);

  auto total = [](const Tensor& t) { return ops::sum(t); };
  Rng rng(5);
  Tensor any = random_tensor(rng, {6});
  grad = finite_difference(total, any, 1e-5);
  for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(grad[i] - 1.0) < 1e-10);

  auto bad = [](const Tensor& t) { return std::log(t[0]); };
  Tensor neg({1}, std::vector<double>{1e-10});
  CHECK_THROWS_AS(finite_difference(bad, neg, 1.0), NonFiniteEvaluation);
}

TEST_CASE("ops are deterministic") {
  Rng rng(31);
  Tensor a = random_tensor(rng, {4, 5});
  Tensor b = random_tensor(rng, {5, 3});
  Tensor first = ops::matmul(a, b);
  Tensor second = ops::matmul(a, b);
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(first[i] == second[i]);

  Tensor v = random_tensor(rng, {7});
  Tensor s1 = ops::softmax(v);
  Tensor s2 = ops::softmax(v);
  for (std::size_t i = 0; i < s1.size(); ++i) CHECK(s1[i] == s2[i]);
}
