#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ccra/tensor.hpp"

namespace ccra {

/// Handle to a node in a Graph.
struct Var {
  std::uint32_t id = 0;
};

/// Record-and-replay reverse-mode differentiation over the fixed primitive
/// set the attention stack needs. Nodes are appended in evaluation order, so
/// creation order is already a topological order and backward() is a single
/// reverse sweep. One Graph belongs to one forward pass; recording is not
/// shared across threads.
class Graph {
 public:
  Var input(Tensor value);

  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var scale(Var a, double c);
  Var add_const(Var a, double c);
  /// Softmax over the last axis (1-D tensors and 2-D rows).
  Var softmax(Var a);
  Var layer_norm_rows(Var x, Var gamma, Var beta, double eps);
  Var avg_pool_rows(Var m);
  Var avg_pool_row_blocks(Var m, std::size_t block_count);
  Var conv1d_reflect(Var v, Var g);
  Var scale_rows(Var m, Var s);
  Var add_row_broadcast(Var m, Var r);
  Var layer_weighted_sum(Var m, Var w);
  Var concat_cols(Var a, Var b);
  Var concat_rows(Var a, Var b);
  Var slice_rows(Var m, std::size_t begin, std::size_t count);
  Var reshape(Var a, std::vector<std::size_t> shape);
  Var sum(Var a);
  Var cross_entropy_with_logits(Var logits, std::size_t target);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  std::size_t node_count() const { return nodes_.size(); }

  /// Gradients of a scalar output with respect to every node, indexed by
  /// node id. Nodes the output does not depend on get zero gradients.
  std::vector<Tensor> backward(Var output) const;

 private:
  enum class Op {
    kLeaf,
    kMatmul,
    kTranspose,
    kAdd,
    kMul,
    kScale,
    kAddConst,
    kSoftmax,
    kLayerNormRows,
    kAvgPoolRows,
    kAvgPoolRowBlocks,
    kConv1dReflect,
    kScaleRows,
    kAddRowBroadcast,
    kLayerWeightedSum,
    kConcatCols,
    kConcatRows,
    kSliceRows,
    kReshape,
    kSum,
    kCrossEntropyLogits,
  };

  struct Node {
    Op op = Op::kLeaf;
    std::array<std::uint32_t, 3> args{};
    std::uint32_t arg_count = 0;
    double scalar = 0.0;     // Scale/AddConst constant, layer-norm eps
    std::size_t index = 0;   // slice begin, block count, CE target
    std::size_t index2 = 0;  // slice count
    Tensor value;
  };

  Var push(Node node);
  void accumulate(std::vector<Tensor>& grads, std::uint32_t id, const Tensor& delta) const;

  std::vector<Node> nodes_;
};

/// Central differences (f(x + eps e_i) - f(x - eps e_i)) / (2 eps).
Tensor finite_difference(const std::function<double(const Tensor&)>& f, const Tensor& x,
                         double eps);

}  // namespace ccra
