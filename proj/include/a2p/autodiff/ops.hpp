#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "a2p/autodiff/tensor.hpp"

// Differentiable operations. Two-dimensional tensors are [rows x cols]; there
// is no broadcasting except add_bias and the single-row form of
// cosine_similarity. Shape mismatches throw std::invalid_argument naming both
// shapes.
namespace a2p::ad {

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& a, const Tensor& bias);
Tensor scale(const Tensor& a, double s);
Tensor reshape(const Tensor& a, Shape shape);

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end);
// Gathers rows of a 2-D tensor; an embedding lookup is gather on the table.
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);

Tensor relu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
// max(0, x + margin), elementwise.
Tensor hinge(const Tensor& x, double margin);

// Row-wise softmax over the last dimension of softmax(x / temperature).
Tensor softmax(const Tensor& x, double temperature = 1.0);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = 1e-5);
// Inverted dropout; identity when !train or p == 0.
Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng, bool train);

// [n x dim] constant: interleaved sin/cos ladder, pos / base^(2i/dim).
Tensor sinusoidal_encoding(std::span<const double> positions, std::size_t dim,
                           double base = 10000.0);
// Several scalar features each encoded to dim_each and concatenated per row:
// values is [n x k] row-major, output [n x k*dim_each].
Tensor sinusoidal_encoding_multi(std::span<const double> values, std::size_t k,
                                 std::size_t dim_each, double base = 10000.0);

// x [B, Cin, L], w [Cout, Cin, K], b [Cout] -> [B, Cout, L]. Output at step i
// only sees inputs at i, i-d, ..., i-(K-1)d (left zero padding).
Tensor conv1d_causal(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t dilation);
// x [Cin, H, W], w [Cout, Cin, K, K], b [Cout] -> [Cout, H, W], zero "same" padding.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t dilation);

struct SamplePoint {
  double x = 0;
  double y = 0;
};
// Bilinear samples of fmap [C, H, W] at pixel-centre coordinates, clamped to
// the border. Result [n x C].
Tensor bilinear_sample(const Tensor& fmap, std::span<const SamplePoint> points);

// Row-wise cosine similarity. a is [m x d] or [1 x d] (broadcast), b is [m x d].
// Result has shape [m].
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor max(const Tensor& a);
// Column-wise max over rows of a 2-D tensor: [m x n] -> [1 x n].
Tensor max_rows(const Tensor& a);
// Column-wise mean over rows: [m x n] -> [1 x n].
Tensor mean_rows(const Tensor& a);

inline constexpr int kIgnoreIndex = -1;
// Mean softmax cross-entropy over rows whose target is not kIgnoreIndex.
// Returns exactly 0 (with zero gradient) when every row is ignored.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets);
// Mean binary cross-entropy on logits, numerically stable form.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets);
// Mean squared difference.
Tensor l2_loss(const Tensor& pred, const Tensor& target);

}  // namespace a2p::ad
