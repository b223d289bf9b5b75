#include "ccra/ops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ccra/errors.hpp"

namespace ccra::ops {

namespace {

void require_2d(const Tensor& t, const char* who) {
  if (t.ndim() != 2) {
    throw ShapeMismatch(std::string(who) + ": expected a 2-D tensor, got " + shape_string(t));
  }
}

void require_1d(const Tensor& t, const char* who) {
  if (t.ndim() != 1) {
    throw ShapeMismatch(std::string(who) + ": expected a 1-D tensor, got " + shape_string(t));
  }
}

// Edge-including reflection of an out-of-range row index: -1 -> 0, n -> n-1.
std::size_t reflect_index(long long i, long long n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - 1 - i;
  return static_cast<std::size_t>(i);
}

void softmax_row(const double* in, double* out, std::size_t n) {
  double hi = in[0];
  for (std::size_t i = 1; i < n; ++i) hi = std::max(hi, in[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - hi);
    denom += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= denom;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_2d(a, "matmul");
  require_2d(b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeMismatch("matmul: inner extents differ: " + shape_string(a) + " vs " +
                        shape_string(b));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      const double av = a.at(i, t);
      for (std::size_t j = 0; j < n; ++j) {
        c.at(i, j) += av * b.at(t, j);
      }
    }
  }
  debug_check_finite(c, "matmul");
  return c;
}

Tensor transpose(const Tensor& a) {
  require_2d(a, "transpose");
  Tensor out({a.cols(), a.rows()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      out.at(j, i) = a.at(i, j);
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch("add: shapes differ: " + shape_string(a) + " vs " + shape_string(b));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return Tensor(a.shape(), std::move(out));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch("mul: shapes differ: " + shape_string(a) + " vs " + shape_string(b));
  }
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return Tensor(a.shape(), std::move(out));
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * c;
  return Tensor(a.shape(), std::move(out));
}

Tensor add_const(const Tensor& a, double c) {
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + c;
  return Tensor(a.shape(), std::move(out));
}

Tensor softmax(const Tensor& v) {
  require_1d(v, "softmax");
  if (v.size() == 0) throw EmptyInput("softmax: empty input");
  std::vector<double> out(v.size());
  softmax_row(v.data(), out.data(), v.size());
  return Tensor(v.shape(), std::move(out));
}

Tensor softmax_rows(const Tensor& m) {
  require_2d(m, "softmax_rows");
  Tensor out(m.shape());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    softmax_row(m.data() + i * m.cols(), out.data() + i * m.cols(), m.cols());
  }
  debug_check_finite(out, "softmax_rows");
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_1d(x, "layer_norm");
  return layer_norm_rows(x.reshaped({1, x.size()}), gamma, beta, eps).reshaped({x.size()});
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_2d(x, "layer_norm_rows");
  const std::size_t d = x.cols();
  if (gamma.ndim() != 1 || gamma.size() != d || beta.ndim() != 1 || beta.size() != d) {
    throw ShapeMismatch("layer_norm: x " + shape_string(x) + ", gamma " + shape_string(gamma) +
                        ", beta " + shape_string(beta) + " are inconsistent");
  }
  if (eps <= 0.0) {
    throw Error("layer_norm: eps must be positive");
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double* row = x.data() + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double c = row[j] - mean;
      var += c * c;
    }
    var /= static_cast<double>(d);  // biased variance
    const double inv_sigma = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      out.at(i, j) = gamma[j] * (row[j] - mean) * inv_sigma + beta[j];
    }
  }
  debug_check_finite(out, "layer_norm_rows");
  return out;
}

Tensor avg_pool_rows(const Tensor& m) {
  require_2d(m, "avg_pool_rows");
  if (m.rows() == 0) throw EmptyInput("avg_pool_rows: no rows");
  Tensor out({m.cols()});
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out[j] += m.at(i, j);
  }
  const double inv = 1.0 / static_cast<double>(m.rows());
  for (std::size_t j = 0; j < m.cols(); ++j) out[j] *= inv;
  return out;
}

Tensor avg_pool_row_blocks(const Tensor& m, std::size_t block_count) {
  require_2d(m, "avg_pool_row_blocks");
  if (block_count == 0 || m.rows() % block_count != 0) {
    throw ShapeMismatch("avg_pool_row_blocks: " + shape_string(m) + " does not split into " +
                        std::to_string(block_count) + " row blocks");
  }
  const std::size_t per_block = m.rows() / block_count;
  const double inv = 1.0 / static_cast<double>(per_block);
  Tensor out({block_count, m.cols()});
  for (std::size_t b = 0; b < block_count; ++b) {
    for (std::size_t i = 0; i < per_block; ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        out.at(b, j) += m.at(b * per_block + i, j);
      }
    }
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(b, j) *= inv;
  }
  return out;
}

Tensor gaussian_kernel(std::size_t k, double sigma) {
  if (k == 0 || k % 2 == 0) {
    throw EvenKernel("gaussian_kernel: size must be odd and positive, got " + std::to_string(k));
  }
  if (!(sigma > 0.0)) {
    throw NonPositiveSigma("gaussian_kernel: sigma must be positive");
  }
  const double center = static_cast<double>(k - 1) / 2.0;
  std::vector<double> taps(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double offset = static_cast<double>(i) - center;
    taps[i] = std::exp(-(offset * offset) / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (double& t : taps) t /= total;
  return Tensor({k}, std::move(taps));
}

Tensor conv1d_reflect(const Tensor& v, const Tensor& g) {
  require_1d(v, "conv1d_reflect");
  require_1d(g, "conv1d_reflect");
  const std::size_t n = v.size(), k = g.size();
  if (k % 2 == 0) {
    throw EvenKernel("conv1d_reflect: kernel size must be odd, got " + std::to_string(k));
  }
  if (k > 2 * n - 1) {
    throw KernelTooLarge("conv1d_reflect: kernel size " + std::to_string(k) +
                         " exceeds 2n-1 for n = " + std::to_string(n));
  }
  const long long h = static_cast<long long>(k - 1) / 2;
  Tensor out({n});
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    double acc = 0.0;
    for (long long t = -h; t <= h; ++t) {
      acc += g[static_cast<std::size_t>(h + t)] * v[reflect_index(i - t, static_cast<long long>(n))];
    }
    out[static_cast<std::size_t>(i)] = acc;
  }
  debug_check_finite(out, "conv1d_reflect");
  return out;
}

Tensor scale_rows(const Tensor& m, const Tensor& s) {
  require_2d(m, "scale_rows");
  require_1d(s, "scale_rows");
  if (s.size() != m.rows()) {
    throw ShapeMismatch("scale_rows: " + shape_string(m) + " vs scales " + shape_string(s));
  }
  Tensor out(m.shape());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) = m.at(i, j) * s[i];
  }
  return out;
}

Tensor add_row_broadcast(const Tensor& m, const Tensor& r) {
  require_2d(m, "add_row_broadcast");
  require_1d(r, "add_row_broadcast");
  if (r.size() != m.cols()) {
    throw ShapeMismatch("add_row_broadcast: " + shape_string(m) + " vs row " + shape_string(r));
  }
  Tensor out(m.shape());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) = m.at(i, j) + r[j];
  }
  return out;
}

Tensor layer_weighted_sum(const Tensor& m, const Tensor& w) {
  require_2d(m, "layer_weighted_sum");
  require_1d(w, "layer_weighted_sum");
  const std::size_t layers = w.size();
  if (layers == 0 || m.rows() % layers != 0) {
    throw ShapeMismatch("layer_weighted_sum: " + shape_string(m) + " does not split into " +
                        std::to_string(layers) + " layers");
  }
  const std::size_t patches = m.rows() / layers;
  Tensor out({patches, m.cols()});
  for (std::size_t l = 0; l < layers; ++l) {
    for (std::size_t i = 0; i < patches; ++i) {
      for (std::size_t j = 0; j < m.cols(); ++j) {
        out.at(i, j) += w[l] * m.at(l * patches + i, j);
      }
    }
  }
  debug_check_finite(out, "layer_weighted_sum");
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_2d(a, "concat_cols");
  require_2d(b, "concat_cols");
  if (a.rows() != b.rows()) {
    throw ShapeMismatch("concat_cols: row counts differ: " + shape_string(a) + " vs " +
                        shape_string(b));
  }
  Tensor out({a.rows(), a.cols() + b.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < b.cols(); ++j) out.at(i, a.cols() + j) = b.at(i, j);
  }
  return out;
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  require_2d(a, "concat_rows");
  require_2d(b, "concat_rows");
  if (a.cols() != b.cols()) {
    throw ShapeMismatch("concat_rows: column counts differ: " + shape_string(a) + " vs " +
                        shape_string(b));
  }
  Tensor out({a.rows() + b.rows(), a.cols()});
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out.at(i, j) = a.at(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) out.at(a.rows() + i, j) = b.at(i, j);
  return out;
}

Tensor slice_rows(const Tensor& m, std::size_t begin, std::size_t count) {
  require_2d(m, "slice_rows");
  if (count == 0 || begin + count > m.rows()) {
    throw ShapeMismatch("slice_rows: rows [" + std::to_string(begin) + ", " +
                        std::to_string(begin + count) + ") out of range for " + shape_string(m));
  }
  Tensor out({count, m.cols()});
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) = m.at(begin + i, j);
  return out;
}

double sum(const Tensor& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) acc += t[i];
  return acc;
}

double cross_entropy_with_logits(const Tensor& logits, std::size_t target) {
  require_1d(logits, "cross_entropy_with_logits");
  if (target >= logits.size()) {
    throw ShapeMismatch("cross_entropy_with_logits: target " + std::to_string(target) +
                        " out of range for " + shape_string(logits));
  }
  double hi = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) hi = std::max(hi, logits[i]);
  double denom = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) denom += std::exp(logits[i] - hi);
  return std::log(denom) + hi - logits[target];
}

double total_variation(const Tensor& v) {
  double tv = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) tv += std::abs(v[i] - v[i - 1]);
  return tv;
}

}  // namespace ccra::ops
