#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "a2p/autodiff/ops.hpp"

namespace a2p::test {

// Max relative error between analytic and central-difference gradients of
// f(inputs) (a scalar) with respect to every input.
inline double gradcheck(std::vector<ad::Tensor> inputs,
                        const std::function<ad::Tensor(const std::vector<ad::Tensor>&)>& f, double h = 1e-6) {
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  f(inputs).backward();
  double worst = 0;
  for (auto& t : inputs) {
    const std::vector<double> analytic = t.grad();
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double orig = t.values()[i];
      double fp, fm;
      {
        ad::NoGradGuard g;
        t.values()[i] = orig + h;
        fp = f(inputs).item();
        t.values()[i] = orig - h;
        fm = f(inputs).item();
      }
      t.values()[i] = orig;
      const double numeric = (fp - fm) / (2 * h);
      const double denom = std::max({1e-3, std::abs(numeric), std::abs(analytic[i])});
      worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
    }
  }
  return worst;
}

inline ad::Tensor random_tensor(ad::Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  ad::Tensor t(shape);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// Weighted sum so every output element gets a distinct upstream gradient.
inline ad::Tensor probe(const ad::Tensor& y) {
  ad::Tensor w(y.shape());
  for (std::size_t i = 0; i < w.size(); ++i) w.values()[i] = std::sin(1.7 * i + 0.3);
  return ad::sum(ad::mul(y, w));
}

}  // namespace a2p::test
