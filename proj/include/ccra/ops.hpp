#pragma once

#include <cstddef>

#include "ccra/tensor.hpp"

namespace ccra::ops {

inline constexpr double kLayerNormEps = 1e-5;

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_const(const Tensor& a, double c);

/// Stable softmax of a 1-D tensor (max-subtracted).
Tensor softmax(const Tensor& v);
/// Row-wise stable softmax of a 2-D tensor.
Tensor softmax_rows(const Tensor& m);

/// y = gamma * (x - mean) / sqrt(var + eps) + beta with biased variance.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = kLayerNormEps);
/// Same normalization applied independently to every row of a 2-D tensor.
Tensor layer_norm_rows(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       double eps = kLayerNormEps);

/// Column means of a 2-D tensor: [n x d] -> [d].
Tensor avg_pool_rows(const Tensor& m);
/// Column means over consecutive row blocks: [(b*r) x d] -> [b x d].
Tensor avg_pool_row_blocks(const Tensor& m, std::size_t block_count);

/// Normalized symmetric Gaussian taps; k odd, sigma > 0.
Tensor gaussian_kernel(std::size_t k, double sigma);

/// Same-length 1-D convolution with edge-including reflection
/// (index -1 reads element 0, index n reads element n-1). This padding keeps
/// the total mass of the signal unchanged for symmetric normalized kernels.
Tensor conv1d_reflect(const Tensor& v, const Tensor& g);

/// Row i of the output is row i of m scaled by s[i].
Tensor scale_rows(const Tensor& m, const Tensor& s);
/// Adds the 1-D tensor r to every row of m.
Tensor add_row_broadcast(const Tensor& m, const Tensor& r);
/// m is [(L*N) x d] in layer-major order; returns sum_l w[l] * m[l*N + i] as [N x d].
Tensor layer_weighted_sum(const Tensor& m, const Tensor& w);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor concat_rows(const Tensor& a, const Tensor& b);
Tensor slice_rows(const Tensor& m, std::size_t begin, std::size_t count);

double sum(const Tensor& t);
double cross_entropy_with_logits(const Tensor& logits, std::size_t target);

/// Discrete total variation sum |v[i+1] - v[i]| of a 1-D tensor.
double total_variation(const Tensor& v);

}  // namespace ccra::ops
