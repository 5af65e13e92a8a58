#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "a2p/autodiff/layers.hpp"
#include "a2p/autodiff/ops.hpp"
#include "a2p/autodiff/params.hpp"
#include "gradcheck.hpp"

using namespace a2p;
using ad::Tensor;
using test::gradcheck;
using test::probe;
using test::random_tensor;

namespace {
constexpr int kInstances = 20;
constexpr double kTol = 1e-4;

// Values kept away from 0 so relu/hinge/max kinks are not straddled.
Tensor away_from_zero(ad::Shape s, std::mt19937_64& rng) {
  Tensor t = random_tensor(s, rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.values())
    if (sign(rng)) v = -v;
  return t;
}
}  // namespace

TEST_CASE("gradcheck: elementwise and matrix ops") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < kInstances; ++i) {
    Tensor a = random_tensor({3, 4}, rng), b = random_tensor({4, 2}, rng), c = random_tensor({3, 4}, rng);
    Tensor bias = random_tensor({4}, rng);
    CHECK(gradcheck({a, b}, [](auto& x) { return probe(ad::matmul(x[0], x[1])); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::transpose(x[0])); }) < kTol);
    CHECK(gradcheck({a, c}, [](auto& x) { return probe(ad::add(x[0], x[1])); }) < kTol);
    CHECK(gradcheck({a, c}, [](auto& x) { return probe(ad::sub(x[0], x[1])); }) < kTol);
    CHECK(gradcheck({a, c}, [](auto& x) { return probe(ad::mul(x[0], x[1])); }) < kTol);
    CHECK(gradcheck({a, bias}, [](auto& x) { return probe(ad::add_bias(x[0], x[1])); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::scale(x[0], -2.5)); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::reshape(x[0], {2, 6})); }) < kTol);
    CHECK(gradcheck({a, c}, [](auto& x) { return probe(ad::concat({x[0], x[1]}, 0)); }) < kTol);
    CHECK(gradcheck({a, c}, [](auto& x) { return probe(ad::concat({x[0], x[1]}, 1)); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::slice(x[0], 1, 1, 3)); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::slice(x[0], 0, 1, 2)); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) {
            const std::size_t ids[] = {2, 0, 2};
            return probe(ad::embedding(x[0], ids));
          }) < kTol);
  }
}

TEST_CASE("gradcheck: nonlinearities and reductions") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < kInstances; ++i) {
    Tensor a = away_from_zero({3, 5}, rng);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::relu(x[0])); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::sigmoid(x[0])); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::hinge(x[0], 0.05)); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::softmax(x[0], 0.7)); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return ad::sum(x[0]); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return ad::mean(x[0]); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return ad::max(x[0]); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::max_rows(x[0])); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) { return probe(ad::mean_rows(x[0])); }) < kTol);
    Tensor g = random_tensor({5}, rng, 0.5, 1.5), be = random_tensor({5}, rng);
    CHECK(gradcheck({a, g, be}, [](auto& x) { return probe(ad::layer_norm(x[0], x[1], x[2])); }) < kTol);
  }
}

TEST_CASE("gradcheck: losses and similarity") {
  std::mt19937_64 rng(13);
  for (int i = 0; i < kInstances; ++i) {
    Tensor a = random_tensor({4, 3}, rng), b = random_tensor({4, 3}, rng), r = random_tensor({1, 3}, rng);
    CHECK(gradcheck({a, b}, [](auto& x) { return probe(ad::cosine_similarity(x[0], x[1])); }) < kTol);
    CHECK(gradcheck({r, b}, [](auto& x) { return probe(ad::cosine_similarity(x[0], x[1])); }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) {
            const int t[] = {0, ad::kIgnoreIndex, 2, 1};
            return ad::cross_entropy(x[0], t);
          }) < kTol);
    CHECK(gradcheck({a}, [](auto& x) {
            const double t[] = {0, 1, 1, 0, 0.5, 1, 0, 0, 1, 1, 0, 1};
            return ad::bce_with_logits(x[0], t);
          }) < kTol);
    CHECK(gradcheck({a, b}, [](auto& x) { return ad::l2_loss(x[0], x[1]); }) < kTol);
  }
}

TEST_CASE("gradcheck: convolutions and bilinear sampling") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < kInstances; ++i) {
    Tensor x = random_tensor({2, 2, 9}, rng), w = random_tensor({3, 2, 3}, rng), b = random_tensor({3}, rng);
    const std::size_t d = 1 + i % 3;
    CHECK(gradcheck({x, w, b}, [d](auto& v) { return probe(ad::conv1d_causal(v[0], v[1], v[2], d)); }) < kTol);
    Tensor img = random_tensor({2, 6, 7}, rng), w2 = random_tensor({2, 2, 3, 3}, rng), b2 = random_tensor({2}, rng);
    CHECK(gradcheck({img, w2, b2}, [d](auto& v) { return probe(ad::conv2d(v[0], v[1], v[2], d)); }) < kTol);
    std::uniform_real_distribution<double> u(0.2, 4.7);
    // Non-integer points so the bilinear weights are smooth in fmap.
    std::vector<ad::SamplePoint> pts = {{u(rng) + 0.013, u(rng) + 0.017}, {u(rng) + 0.011, u(rng) + 0.019}};
    CHECK(gradcheck({img}, [&](auto& v) { return probe(ad::bilinear_sample(v[0], pts)); }) < kTol);
  }
}

TEST_CASE("gradcheck: transformer block") {
  std::mt19937_64 rng(19);
  ad::ParameterSet ps;
  nn::TransformerConfig cfg{.dim = 8, .heads = 2, .ff_dim = 12, .blocks = 2, .dropout = 0.0};
  nn::TransformerEncoder enc(ps, "enc", cfg, 3);
  for (int i = 0; i < 3; ++i) {
    Tensor x = random_tensor({4, 8}, rng);
    std::vector<Tensor> inputs{x};
    for (auto& [n, p] : ps.items()) inputs.push_back(p);
    CHECK(gradcheck(inputs, [&](auto& v) {
            std::mt19937_64 r(1);
            return probe(enc.forward(v[0], r, false));
          }) < kTol);
  }
}

TEST_CASE("softmax rows sum to one and are shift invariant") {
  Tensor x({2, 3}, {1, 2, 3, 1001, 1002, 1003});
  Tensor s = ad::softmax(x);
  for (int r = 0; r < 2; ++r) {
    CHECK(s.at(r, 0) + s.at(r, 1) + s.at(r, 2) == doctest::Approx(1.0));
    CHECK(s.at(r, 2) == doctest::Approx(std::exp(2.0) / (1 + std::exp(1.0) + std::exp(2.0))));
  }
}

TEST_CASE("layer_norm output has zero mean and unit variance") {
  Tensor x({1, 4}, {1, 2, 3, 10});
  Tensor y = ad::layer_norm(x, Tensor({4}, 1.0), Tensor({4}, 0.0));
  double m = 0, v = 0;
  for (double e : y.values()) m += e / 4;
  for (double e : y.values()) v += (e - m) * (e - m) / 4;
  CHECK(m == doctest::Approx(0).epsilon(1e-9));
  CHECK(v == doctest::Approx(1).epsilon(1e-4));
}

TEST_CASE("cross_entropy with every row ignored is zero") {
  Tensor x({2, 3}, 1.0, true);
  const int t[] = {ad::kIgnoreIndex, ad::kIgnoreIndex};
  Tensor l = ad::cross_entropy(x, t);
  CHECK(l.item() == 0.0);
  l.backward();
  for (double g : x.grad()) CHECK(g == 0.0);
}

TEST_CASE("shape mismatch names both shapes") {
  Tensor a({2, 3}), b({2, 3});
  try {
    ad::matmul(a, b);
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
  }
}

TEST_CASE("no-grad guard stops graph recording") {
  Tensor a({2}, 1.0, true);
  {
    ad::NoGradGuard g;
    CHECK_FALSE(ad::scale(a, 2).requires_grad());
  }
  CHECK(ad::scale(a, 2).requires_grad());
}

TEST_CASE("adam step matches hand computation") {
  ad::ParameterSet ps;
  Tensor w = ps.add("w", Tensor({1}, std::vector<double>{1.0}, true));
  ad::Adam opt({.lr = 0.1});
  ad::mul(w, w).backward();  // grad 2
  opt.step(ps);
  // First bias-corrected step is lr * g / (|g| + eps') = 0.1.
  CHECK(w[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(opt.steps() == 1);
}

TEST_CASE("adam minimises a quadratic") {
  ad::ParameterSet ps;
  Tensor w = ps.add("w", Tensor({3}, std::vector<double>{4, -3, 2}, true));
  ad::Adam opt({.lr = 0.05});
  for (int i = 0; i < 2000; ++i) {
    ps.zero_grad();
    ad::sum(ad::mul(w, w)).backward();
    opt.step(ps);
  }
  for (double v : w.values()) CHECK(std::abs(v) < 1e-2);
}

TEST_CASE("checkpoint round trip and mismatch detection") {
  ad::ParameterSet ps;
  std::mt19937_64 rng(5);
  nn::Linear l(ps, "l", 3, 2, 9);
  const auto path = std::filesystem::temp_directory_path() / "a2p_ckpt_test.bin";
  ad::save_checkpoint(ps, path);
  ad::ParameterSet other;
  nn::Linear l2(other, "l", 3, 2, 10);
  ad::load_checkpoint(other, path);
  for (std::size_t i = 0; i < l.weight.size(); ++i)
    CHECK(l2.weight[i] == doctest::Approx(l.weight[i]).epsilon(1e-6));
  ad::ParameterSet wrong;
  nn::Linear l3(wrong, "l", 4, 2, 10);
  CHECK_THROWS(ad::load_checkpoint(wrong, path));
  std::filesystem::remove(path);
}

TEST_CASE("initialisation is deterministic per seed") {
  ad::ParameterSet a, b, c;
  nn::Linear la(a, "x", 4, 4, 42), lb(b, "x", 4, 4, 42), lc(c, "x", 4, 4, 43);
  CHECK(la.weight.values() == lb.weight.values());
  CHECK(la.weight.values() != lc.weight.values());
}
