#include "a2p/autodiff/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace a2p::nn {

Linear::Linear(ad::ParameterSet& params, const std::string& name, std::size_t in, std::size_t out,
               std::uint64_t seed) {
  std::mt19937_64 rng(ad::split_seed(seed, name));
  weight = params.add(name + ".weight", ad::xavier_uniform({in, out}, in, out, rng));
  bias = params.add(name + ".bias", Tensor({out}, 0.0));
}

LayerNorm::LayerNorm(ad::ParameterSet& params, const std::string& name, std::size_t dim) {
  gamma = params.add(name + ".gamma", Tensor({dim}, 1.0));
  beta = params.add(name + ".beta", Tensor({dim}, 0.0));
}

TransformerBlock::TransformerBlock(ad::ParameterSet& params, const std::string& name, const TransformerConfig& cfg,
                                   std::uint64_t seed)
    : cfg_(cfg),
      q_(params, name + ".attn.q", cfg.dim, cfg.dim, seed),
      k_(params, name + ".attn.k", cfg.dim, cfg.dim, seed),
      v_(params, name + ".attn.v", cfg.dim, cfg.dim, seed),
      o_(params, name + ".attn.o", cfg.dim, cfg.dim, seed),
      ff1_(params, name + ".ff1", cfg.dim, cfg.ff_dim, seed),
      ff2_(params, name + ".ff2", cfg.ff_dim, cfg.dim, seed),
      ln1_(params, name + ".ln1", cfg.dim),
      ln2_(params, name + ".ln2", cfg.dim) {
  if (cfg.heads == 0 || cfg.dim % cfg.heads != 0) {
    throw std::invalid_argument("transformer: dim " + std::to_string(cfg.dim) + " not divisible by " +
                                std::to_string(cfg.heads) + " heads");
  }
  for (auto* w : {&o_.weight, &ff2_.weight})
    for (auto& v : w->values()) v *= cfg.residual_init_scale;
}

Tensor TransformerBlock::attention(const Tensor& x, std::mt19937_64& rng, bool train) const {
  const Tensor q = q_(x), k = k_(x), v = v_(x);
  const std::size_t hd = cfg_.dim / cfg_.heads;
  const double inv = 1.0 / std::sqrt(static_cast<double>(hd));
  std::vector<Tensor> heads;
  heads.reserve(cfg_.heads);
  for (std::size_t h = 0; h < cfg_.heads; ++h) {
    const Tensor qh = ad::slice(q, 1, h * hd, (h + 1) * hd);
    const Tensor kh = ad::slice(k, 1, h * hd, (h + 1) * hd);
    const Tensor vh = ad::slice(v, 1, h * hd, (h + 1) * hd);
    Tensor p = ad::softmax(ad::scale(ad::matmul(qh, ad::transpose(kh)), inv));
    p = ad::dropout(p, cfg_.dropout, rng, train);
    heads.push_back(ad::matmul(p, vh));
  }
  return o_(ad::concat(heads, 1));
}

Tensor TransformerBlock::forward(const Tensor& x, std::mt19937_64& rng, bool train) const {
  Tensor h = ln1_(ad::add(x, ad::dropout(attention(x, rng, train), cfg_.dropout, rng, train)));
  Tensor f = ff2_(ad::dropout(ad::relu(ff1_(h)), cfg_.dropout, rng, train));
  return ln2_(ad::add(h, ad::dropout(f, cfg_.dropout, rng, train)));
}

TransformerEncoder::TransformerEncoder(ad::ParameterSet& params, const std::string& name,
                                       const TransformerConfig& cfg, std::uint64_t seed)
    : cfg_(cfg) {
  for (std::size_t i = 0; i < cfg.blocks; ++i)
    blocks_.emplace_back(params, name + ".block" + std::to_string(i), cfg, seed);
}

Tensor TransformerEncoder::forward(Tensor x, std::mt19937_64& rng, bool train) const {
  for (const auto& b : blocks_) x = b.forward(x, rng, train);
  return x;
}

}  // namespace a2p::nn
