#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "a2p/autodiff/tensor.hpp"

namespace a2p::ad {

// Ordered, named collection of trainable leaves. Insertion order is the
// serialization order.
class ParameterSet {
 public:
  Tensor add(const std::string& name, Tensor t);
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;

  const std::vector<std::pair<std::string, Tensor>>& items() const { return items_; }
  std::size_t count() const;  // total scalar parameters
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

// Uniform(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
Tensor normal_init(Shape shape, double stddev, std::mt19937_64& rng);

// Deterministic child seed for layer `tag`, so adding a layer does not shift
// the streams of the others.
std::uint64_t split_seed(std::uint64_t seed, const std::string& tag);

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // One bias-corrected update of every parameter from its accumulated grad.
  void step(ParameterSet& params);
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// Little-endian binary checkpoint:
//   "A2PCKPT\0" | u32 version | u32 count | per tensor:
//   u32 name_len | name bytes | u32 rank | u32 dims[rank] | f32 values[]
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParameterSet& params, const std::filesystem::path& path);
std::vector<std::pair<std::string, Tensor>> read_checkpoint(const std::filesystem::path& path);
// Copies stored values into same-named, same-shaped parameters; throws on any
// missing name or shape difference.
void load_checkpoint(ParameterSet& params, const std::filesystem::path& path);

}  // namespace a2p::ad
