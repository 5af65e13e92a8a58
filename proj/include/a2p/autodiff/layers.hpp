#pragma once

#include <random>
#include <string>
#include <vector>

#include "a2p/autodiff/ops.hpp"
#include "a2p/autodiff/params.hpp"

// Layer building blocks shared by the networks.
namespace a2p::nn {

using ad::Tensor;

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  Linear() = default;
  Linear(ad::ParameterSet& params, const std::string& name, std::size_t in, std::size_t out, std::uint64_t seed);
  Tensor operator()(const Tensor& x) const { return ad::add_bias(ad::matmul(x, weight), bias); }
};

struct LayerNorm {
  Tensor gamma, beta;

  LayerNorm() = default;
  LayerNorm(ad::ParameterSet& params, const std::string& name, std::size_t dim);
  Tensor operator()(const Tensor& x) const { return ad::layer_norm(x, gamma, beta); }
};

struct TransformerConfig {
  std::size_t dim = 256;
  std::size_t heads = 8;
  std::size_t ff_dim = 512;
  std::size_t blocks = 6;
  double dropout = 0.1;
  // Multiplier on the initial weights of the attention output and second
  // feed-forward layers; small values keep tokens distinct at init.
  double residual_init_scale = 1.0;
};

// Post-norm encoder block: x = LN(x + Drop(MHA(x))); x = LN(x + Drop(FF(x))),
// FF = Linear -> ReLU -> Drop -> Linear. Attention is unmasked.
class TransformerBlock {
 public:
  TransformerBlock(ad::ParameterSet& params, const std::string& name, const TransformerConfig& cfg,
                   std::uint64_t seed);
  Tensor forward(const Tensor& x, std::mt19937_64& rng, bool train) const;

 private:
  Tensor attention(const Tensor& x, std::mt19937_64& rng, bool train) const;

  TransformerConfig cfg_;
  Linear q_, k_, v_, o_, ff1_, ff2_;
  LayerNorm ln1_, ln2_;
};

class TransformerEncoder {
 public:
  TransformerEncoder() = default;
  TransformerEncoder(ad::ParameterSet& params, const std::string& name, const TransformerConfig& cfg,
                     std::uint64_t seed);
  Tensor forward(Tensor x, std::mt19937_64& rng, bool train) const;
  const TransformerConfig& config() const { return cfg_; }

 private:
  TransformerConfig cfg_;
  std::vector<TransformerBlock> blocks_;
};

}  // namespace a2p::nn
