#include "ccra/graph.hpp"

#include <cmath>
#include <utility>

#include "ccra/errors.hpp"
#include "ccra/ops.hpp"

namespace ccra {

namespace {

std::size_t reflect_index(long long i, long long n) {
  if (i < 0) i = -i - 1;
  if (i >= n) i = 2 * n - 1 - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

Var Graph::push(Node node) {
  debug_check_finite(node.value, "graph op");
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::input(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Graph::matmul(Var a, Var b) {
  Node n;
  n.op = Op::kMatmul;
  n.args = {a.id, b.id, 0};
  n.arg_count = 2;
  n.value = ops::matmul(value(a), value(b));
  return push(std::move(n));
}

Var Graph::transpose(Var a) {
  Node n;
  n.op = Op::kTranspose;
  n.args = {a.id, 0, 0};
  n.arg_count = 1;
  n.value = ops::transpose(value(a));
  return push(std::move(n));
}

Var Graph::add(Var a, Var b) {
  Node n;
  n.op = Op::kAdd;
  n.args = {a.id, b.id, 0};
  n.arg_count = 2;
  n.value = ops::add(value(a), value(b));
  return push(std::move(n));
}

Var Graph::mul(Var a, Var b) {
  Node n;
  n.op = Op::kMul;
  n.args = {a.id, b.id, 0};
  n.arg_count = 2;
  n.value = ops::mul(value(a), value(b));
  return push(std::move(n));
}

Var Graph::scale(Var a, double c) {
  Node n;
  n.op = Op::kScale;
  n.args = {a.id, 0, 0};
  n.arg_count = 1;
  n.scalar = c;
  n.value = ops::scale(value(a), c);
  return push(std::move(n));
}

Var Graph::add_const(Var a, double c) {
  Node n;
  n.op = Op::kAddConst;
  n.args = {a.id, 0, 0};
  n.arg_count = 1;
  n.scalar = c;
  n.value = ops::add_const(value(a), c);
  return push(std::move(n));
}

Var Graph::softmax(Var a) {
  Node n;
  n.op = Op::kSoftmax;
  n.args = {a.id, 0, 0};
  n.arg_count = 1;
  const Tensor& x = value(a);
  n.value = x.ndim() == 1 ? ops::softmax(x) : ops::softmax_rows(x);
  return push(std::move(n));
}

Var Graph::layer_norm_rows(Var x, Var gamma, Var beta, double eps) {
  Node n;
  n.op = Op::kLayerNormRows;
  n.args = {x.id, gamma.id, beta.id};
  n.arg_count = 3;
  n.scalar = eps;
  n.value = ops::layer_norm_rows(value(x), value(gamma), value(beta), eps);
  return push(std::move(n));
}

Var Graph::avg_pool_rows(Var m) {
  Node n;
  n.op = Op::kAvgPoolRows;
  n.args = {m.id, 0, 0};
  n.arg_count = 1;
  n.value = ops::avg_pool_rows(value(m));
  return push(std::move(n));
}

Var Graph::avg_pool_row_blocks(Var m, std::size_t block_count) {
  Node n;
  n.op = Op::kAvgPoolRowBlocks;
  n.args = {m.id, 0, 0};
  n.arg_count = 1;
  n.index = block_count;
  n.value = ops::avg_pool_row_blocks(value(m), block_count);
  return push(std::move(n));
}

Var Graph::conv1d_reflect(Var v, Var g) {
  Node n;
  n.op = Op::kConv1dReflect;
  n.args = {v.id, g.id, 0};
  n.arg_count = 2;
  n.value = ops::conv1d_reflect(value(v), value(g));
  return push(std::move(n));
}

Var Graph::scale_rows(Var m, Var s) {
  Node n;
  n.op = Op::kScaleRows;
  n.args = {m.id, s.id, 0};
  n.arg_count = 2;
  n.value = ops::scale_rows(value(m), value(s));
  return push(std::move(n));
}

Var Graph::add_row_broadcast(Var m, Var r) {
  Node n;
  n.op = Op::kAddRowBroadcast;
  n.args = {m.id, r.id, 0};
  n.arg_count = 2;
  n.value = ops::add_row_broadcast(value(m), value(r));
  return push(std::move(n));
}

Var Graph::layer_weighted_sum(Var m, Var w) {
  Node n;
  n.op = Op::kLayerWeightedSum;
  n.args = {m.id, w.id, 0};
  n.arg_count = 2;
  n.value = ops::layer_weighted_sum(value(m), value(w));
  return push(std::move(n));
}

Var Graph::concat_cols(Var a, Var b) {
  Node n;
  n.op = Op::kConcatCols;
  n.args = {a.id, b.id, 0};
  n.arg_count = 2;
  n.value = ops::concat_cols(value(a), value(b));
  return push(std::move(n));
}

Var Graph::concat_rows(Var a, Var b) {
  Node n;
  n.op = Op::kConcatRows;
  n.args = {a.id, b.id, 0};
  n.arg_count = 2;
  n.value = ops::concat_rows(value(a), value(b));
  return push(std::move(n));
}

Var Graph::slice_rows(Var m, std::size_t begin, std::size_t count) {
  Node n;
  n.op = Op::kSliceRows;
  n.args = {m.id, 0, 0};
  n.arg_count = 1;
  n.index = begin;
  n.index2 = count;
  n.value = ops::slice_rows(value(m), begin, count);
  return push(std::move(n));
}

Var Graph::reshape(Var a, std::vector<std::size_t> shape) {
  Node n;
  n.op = Op::kReshape;
  n.args = {a.id, 0, 0};
  n.arg_count = 1;
  n.value = value(a).reshaped(std::move(shape));
  return push(std::move(n));
}

Var Graph::sum(Var a) {
  Node n;
  n.op = Op::kSum;
  n.args = {a.id, 0, 0};
  n.arg_count = 1;
  n.value = Tensor({1}, ops::sum(value(a)));
  return push(std::move(n));
}

Var Graph::cross_entropy_with_logits(Var logits, std::size_t target) {
  Node n;
  n.op = Op::kCrossEntropyLogits;
  n.args = {logits.id, 0, 0};
  n.arg_count = 1;
  n.index = target;
  n.value = Tensor({1}, ops::cross_entropy_with_logits(value(logits), target));
  return push(std::move(n));
}

void Graph::accumulate(std::vector<Tensor>& grads, std::uint32_t id, const Tensor& delta) const {
  if (grads[id].empty()) {
    grads[id] = delta;
  } else {
    grads[id] = ops::add(grads[id], delta);
  }
}

std::vector<Tensor> Graph::backward(Var output) const {
  if (output.id >= nodes_.size()) {
    throw Error("backward: output node out of range");
  }
  if (nodes_[output.id].value.size() != 1) {
    throw NonScalarOutput("backward: output must be scalar, got " +
                          shape_string(nodes_[output.id].value));
  }

  std::vector<Tensor> grads(nodes_.size());
  grads[output.id] = Tensor(nodes_[output.id].value.shape(), 1.0);

  for (std::size_t pos = output.id + 1; pos-- > 0;) {
    const Node& node = nodes_[pos];
    if (grads[pos].empty() || node.op == Op::kLeaf) continue;
    const Tensor& gy = grads[pos];
    const Tensor& y = node.value;

    switch (node.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul: {
        const Tensor& a = nodes_[node.args[0]].value;
        const Tensor& b = nodes_[node.args[1]].value;
        accumulate(grads, node.args[0], ops::matmul(gy, ops::transpose(b)));
        accumulate(grads, node.args[1], ops::matmul(ops::transpose(a), gy));
        break;
      }
      case Op::kTranspose:
        accumulate(grads, node.args[0], ops::transpose(gy));
        break;
      case Op::kAdd:
        accumulate(grads, node.args[0], gy);
        accumulate(grads, node.args[1], gy);
        break;
      case Op::kMul: {
        const Tensor& a = nodes_[node.args[0]].value;
        const Tensor& b = nodes_[node.args[1]].value;
        accumulate(grads, node.args[0], ops::mul(gy, b));
        accumulate(grads, node.args[1], ops::mul(gy, a));
        break;
      }
      case Op::kScale:
        accumulate(grads, node.args[0], ops::scale(gy, node.scalar));
        break;
      case Op::kAddConst:
        accumulate(grads, node.args[0], gy);
        break;
      case Op::kSoftmax: {
        // Per row: dx_i = y_i * (gy_i - sum_j gy_j y_j).
        const std::size_t width = y.ndim() == 1 ? y.size() : y.cols();
        const std::size_t rows = y.size() / width;
        Tensor gx(y.shape());
        for (std::size_t r = 0; r < rows; ++r) {
          const double* yr = y.data() + r * width;
          const double* gr = gy.data() + r * width;
          double dot = 0.0;
          for (std::size_t j = 0; j < width; ++j) dot += gr[j] * yr[j];
          for (std::size_t j = 0; j < width; ++j) {
            gx.data()[r * width + j] = yr[j] * (gr[j] - dot);
          }
        }
        accumulate(grads, node.args[0], gx);
        break;
      }
      case Op::kLayerNormRows: {
        const Tensor& x = nodes_[node.args[0]].value;
        const Tensor& gamma = nodes_[node.args[1]].value;
        const std::size_t d = x.cols();
        const double dim = static_cast<double>(d);
        Tensor gx(x.shape());
        Tensor ggamma(gamma.shape());
        Tensor gbeta(gamma.shape());
        for (std::size_t r = 0; r < x.rows(); ++r) {
          const double* xr = x.data() + r * d;
          const double* gr = gy.data() + r * d;
          double mean = 0.0;
          for (std::size_t j = 0; j < d; ++j) mean += xr[j];
          mean /= dim;
          double var = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double c = xr[j] - mean;
            var += c * c;
          }
          var /= dim;
          const double inv_sigma = 1.0 / std::sqrt(var + node.scalar);
          // g = gy * gamma; dx = (g - mean(g) - xhat * mean(g * xhat)) / sigma
          double g_mean = 0.0, gx_mean = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            const double xhat = (xr[j] - mean) * inv_sigma;
            const double g = gr[j] * gamma[j];
            g_mean += g;
            gx_mean += g * xhat;
            ggamma[j] += gr[j] * xhat;
            gbeta[j] += gr[j];
          }
          g_mean /= dim;
          gx_mean /= dim;
          for (std::size_t j = 0; j < d; ++j) {
            const double xhat = (xr[j] - mean) * inv_sigma;
            const double g = gr[j] * gamma[j];
            gx.at(r, j) = (g - g_mean - xhat * gx_mean) * inv_sigma;
          }
        }
        accumulate(grads, node.args[0], gx);
        accumulate(grads, node.args[1], ggamma);
        accumulate(grads, node.args[2], gbeta);
        break;
      }
      case Op::kAvgPoolRows: {
        const Tensor& m = nodes_[node.args[0]].value;
        const double inv = 1.0 / static_cast<double>(m.rows());
        Tensor gm(m.shape());
        for (std::size_t i = 0; i < m.rows(); ++i)
          for (std::size_t j = 0; j < m.cols(); ++j) gm.at(i, j) = gy[j] * inv;
        accumulate(grads, node.args[0], gm);
        break;
      }
      case Op::kAvgPoolRowBlocks: {
        const Tensor& m = nodes_[node.args[0]].value;
        const std::size_t blocks = node.index;
        const std::size_t per_block = m.rows() / blocks;
        const double inv = 1.0 / static_cast<double>(per_block);
        Tensor gm(m.shape());
        for (std::size_t b = 0; b < blocks; ++b)
          for (std::size_t i = 0; i < per_block; ++i)
            for (std::size_t j = 0; j < m.cols(); ++j)
              gm.at(b * per_block + i, j) = gy.at(b, j) * inv;
        accumulate(grads, node.args[0], gm);
        break;
      }
      case Op::kConv1dReflect: {
        const Tensor& v = nodes_[node.args[0]].value;
        const Tensor& g = nodes_[node.args[1]].value;
        const long long n = static_cast<long long>(v.size());
        const long long h = static_cast<long long>(g.size() - 1) / 2;
        Tensor gv(v.shape());
        Tensor gg(g.shape());
        for (long long i = 0; i < n; ++i) {
          for (long long t = -h; t <= h; ++t) {
            const std::size_t src = reflect_index(i - t, n);
            gv[src] += g[static_cast<std::size_t>(h + t)] * gy[static_cast<std::size_t>(i)];
            gg[static_cast<std::size_t>(h + t)] += v[src] * gy[static_cast<std::size_t>(i)];
          }
        }
        accumulate(grads, node.args[0], gv);
        accumulate(grads, node.args[1], gg);
        break;
      }
      case Op::kScaleRows: {
        const Tensor& m = nodes_[node.args[0]].value;
        const Tensor& s = nodes_[node.args[1]].value;
        Tensor gm(m.shape());
        Tensor gs(s.shape());
        for (std::size_t i = 0; i < m.rows(); ++i) {
          for (std::size_t j = 0; j < m.cols(); ++j) {
            gm.at(i, j) = gy.at(i, j) * s[i];
            gs[i] += gy.at(i, j) * m.at(i, j);
          }
        }
        accumulate(grads, node.args[0], gm);
        accumulate(grads, node.args[1], gs);
        break;
      }
      case Op::kAddRowBroadcast: {
        const Tensor& m = nodes_[node.args[0]].value;
        Tensor gr({m.cols()});
        for (std::size_t i = 0; i < m.rows(); ++i)
          for (std::size_t j = 0; j < m.cols(); ++j) gr[j] += gy.at(i, j);
        accumulate(grads, node.args[0], gy);
        accumulate(grads, node.args[1], gr);
        break;
      }
      case Op::kLayerWeightedSum: {
        const Tensor& m = nodes_[node.args[0]].value;
        const Tensor& w = nodes_[node.args[1]].value;
        const std::size_t layers = w.size();
        const std::size_t patches = m.rows() / layers;
        Tensor gm(m.shape());
        Tensor gw(w.shape());
        for (std::size_t l = 0; l < layers; ++l) {
          for (std::size_t i = 0; i < patches; ++i) {
            for (std::size_t j = 0; j < m.cols(); ++j) {
              gm.at(l * patches + i, j) = w[l] * gy.at(i, j);
              gw[l] += gy.at(i, j) * m.at(l * patches + i, j);
            }
          }
        }
        accumulate(grads, node.args[0], gm);
        accumulate(grads, node.args[1], gw);
        break;
      }
      case Op::kConcatCols: {
        const Tensor& a = nodes_[node.args[0]].value;
        const Tensor& b = nodes_[node.args[1]].value;
        Tensor ga(a.shape());
        Tensor gb(b.shape());
        for (std::size_t i = 0; i < a.rows(); ++i) {
          for (std::size_t j = 0; j < a.cols(); ++j) ga.at(i, j) = gy.at(i, j);
          for (std::size_t j = 0; j < b.cols(); ++j) gb.at(i, j) = gy.at(i, a.cols() + j);
        }
        accumulate(grads, node.args[0], ga);
        accumulate(grads, node.args[1], gb);
        break;
      }
      case Op::kConcatRows: {
        const Tensor& a = nodes_[node.args[0]].value;
        const Tensor& b = nodes_[node.args[1]].value;
        accumulate(grads, node.args[0], ops::slice_rows(gy, 0, a.rows()));
        accumulate(grads, node.args[1], ops::slice_rows(gy, a.rows(), b.rows()));
        break;
      }
      case Op::kSliceRows: {
        const Tensor& m = nodes_[node.args[0]].value;
        Tensor gm(m.shape());
        for (std::size_t i = 0; i < node.index2; ++i)
          for (std::size_t j = 0; j < m.cols(); ++j) gm.at(node.index + i, j) = gy.at(i, j);
        accumulate(grads, node.args[0], gm);
        break;
      }
      case Op::kReshape: {
        const Tensor& a = nodes_[node.args[0]].value;
        accumulate(grads, node.args[0], gy.reshaped(a.shape()));
        break;
      }
      case Op::kSum: {
        const Tensor& a = nodes_[node.args[0]].value;
        accumulate(grads, node.args[0], Tensor(a.shape(), gy[0]));
        break;
      }
      case Op::kCrossEntropyLogits: {
        const Tensor& logits = nodes_[node.args[0]].value;
        Tensor gl = ops::softmax(logits);
        gl[node.index] -= 1.0;
        accumulate(grads, node.args[0], ops::scale(gl, gy[0]));
        break;
      }
    }
  }

  // Untouched nodes get explicit zero gradients.
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) grads[i] = Tensor(nodes_[i].value.shape());
  }
  return grads;
}

Tensor finite_difference(const std::function<double(const Tensor&)>& f, const Tensor& x,
                         double eps) {
  if (!(eps > 0.0)) {
    throw Error("finite_difference: eps must be positive");
  }
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double original = probe[i];
    double hi = 0.0, lo = 0.0;
    try {
      probe[i] = original + eps;
      hi = f(probe);
      probe[i] = original - eps;
      lo = f(probe);
    } catch (const NonFiniteValue& e) {
      throw NonFiniteEvaluation(std::string("finite_difference: ") + e.what());
    }
    probe[i] = original;
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
      throw NonFiniteEvaluation("finite_difference: function evaluated to NaN/Inf");
    }
    grad[i] = (hi - lo) / (2.0 * eps);
  }
  return grad;
}

}  // namespace ccra
