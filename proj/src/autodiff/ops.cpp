#include "a2p/autodiff/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace a2p::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                              shape_str(b));
}

void require_rank(const char* op, const Tensor& t, std::size_t r) {
  if (t.rank() != r) {
    throw std::invalid_argument(std::string(op) + ": expected rank " + std::to_string(r) +
                                ", got " + shape_str(t.shape()));
  }
}

// Parent grad buffer, or nullptr when the parent is not tracked.
double* pgrad(Node& self, std::size_t i) {
  auto& p = self.parents[i];
  return p->requires_grad ? p->grad.data() : nullptr;
}

template <class F>
Tensor unary(const Tensor& a, F f) {
  std::vector<double> out(a.size());
  const auto& v = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(v[i]);
  return Tensor(a.shape(), std::move(out));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  if (b.dim(0) != k) mismatch("matmul", a.shape(), b.shape());
  std::vector<double> out(m * n);
  MapMat(out.data(), m, n).noalias() = CMapMat(a.data(), m, k) * CMapMat(b.data(), k, n);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    CMapMat g(self.grad.data(), m, n);
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    if (double* ga = pgrad(self, 0)) MapMat(ga, m, k).noalias() += g * CMapMat(B.data(), k, n).transpose();
    if (double* gb = pgrad(self, 1)) MapMat(gb, k, n).noalias() += CMapMat(A.data(), m, k).transpose() * g;
  });
}

Tensor transpose(const Tensor& a) {
  require_rank("transpose", a, 2);
  const auto m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  MapMat(out.data(), n, m) = CMapMat(a.data(), m, n).transpose();
  return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    MapMat(pgrad(self, 0), m, n) += CMapMat(self.grad.data(), n, m).transpose();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("add", a.shape(), b.shape());
  std::vector<double> out(a.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (int p = 0; p < 2; ++p)
      if (double* g = pgrad(self, p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("sub", a.shape(), b.shape());
  std::vector<double> out(a.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (double* g = pgrad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (double* g = pgrad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) mismatch("mul", a.shape(), b.shape());
  std::vector<double> out(a.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& A = self.parents[0]->value;
    const auto& B = self.parents[1]->value;
    if (double* g = pgrad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * B[i];
    if (double* g = pgrad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * A[i];
  });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  require_rank("add_bias", a, 2);
  const auto m = a.dim(0), n = a.dim(1);
  if (bias.size() != n) mismatch("add_bias", a.shape(), bias.shape());
  std::vector<double> out(a.values());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bias[c];
  return make_result(a.shape(), std::move(out), {a, bias}, [m, n](Node& self) {
    if (double* g = pgrad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    if (double* g = pgrad(self, 1))
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) g[c] += self.grad[r * n + c];
  });
}

Tensor scale(const Tensor& a, double s) {
  std::vector<double> out(a.values());
  for (auto& v : out) v *= s;
  return make_result(a.shape(), std::move(out), {a}, [s](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad[i];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (numel(shape) != a.size()) mismatch("reshape", a.shape(), shape);
  return make_result(std::move(shape), a.values(), {a}, [](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  if (axis > 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  for (const auto& p : parts) require_rank("concat", p, 2);
  const std::size_t other = 1 - axis;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.dim(other) != parts[0].dim(other)) mismatch("concat", parts[0].shape(), p.shape());
    total += p.dim(axis);
  }
  Shape shape = parts[0].shape();
  shape[axis] = total;
  const std::size_t rows = shape[0], cols = shape[1];
  std::vector<double> out(rows * cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const auto pr = p.dim(0), pc = p.dim(1);
    for (std::size_t r = 0; r < pr; ++r)
      for (std::size_t c = 0; c < pc; ++c) {
        const auto orow = axis == 0 ? r + off : r;
        const auto ocol = axis == 1 ? c + off : c;
        out[orow * cols + ocol] = p.data()[r * pc + c];
      }
    off += p.dim(axis);
  }
  return make_result(shape, std::move(out), parts, [axis, cols, offsets](Node& self) {
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      double* g = pgrad(self, i);
      if (!g) continue;
      const auto pr = self.parents[i]->shape[0], pc = self.parents[i]->shape[1];
      for (std::size_t r = 0; r < pr; ++r)
        for (std::size_t c = 0; c < pc; ++c) {
          const auto orow = axis == 0 ? r + offsets[i] : r;
          const auto ocol = axis == 1 ? c + offsets[i] : c;
          g[r * pc + c] += self.grad[orow * cols + ocol];
        }
    }
  });
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t begin, std::size_t end) {
  require_rank("slice", a, 2);
  if (axis > 1 || begin >= end || end > a.dim(axis)) {
    throw std::invalid_argument("slice: bad range [" + std::to_string(begin) + "," +
                                std::to_string(end) + ") on axis " + std::to_string(axis) +
                                " of " + shape_str(a.shape()));
  }
  const auto rows = a.dim(0), cols = a.dim(1);
  const auto orows = axis == 0 ? end - begin : rows;
  const auto ocols = axis == 1 ? end - begin : cols;
  const auto r0 = axis == 0 ? begin : 0, c0 = axis == 1 ? begin : 0;
  std::vector<double> out(orows * ocols);
  for (std::size_t r = 0; r < orows; ++r)
    for (std::size_t c = 0; c < ocols; ++c) out[r * ocols + c] = a.data()[(r + r0) * cols + c + c0];
  return make_result({orows, ocols}, std::move(out), {a}, [=](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t r = 0; r < orows; ++r)
      for (std::size_t c = 0; c < ocols; ++c) g[(r + r0) * cols + c + c0] += self.grad[r * ocols + c];
  });
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank("embedding", table, 2);
  const auto v = table.dim(0), d = table.dim(1);
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * d);
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= v) {
      throw std::out_of_range("embedding: id " + std::to_string(idx[r]) + " out of range for table " +
                              shape_str(table.shape()));
    }
    std::copy_n(table.data() + idx[r] * d, d, out.data() + r * d);
  }
  return make_result({idx.size(), d}, std::move(out), {table}, [idx, d](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t c = 0; c < d; ++c) g[idx[r] * d + c] += self.grad[r * d + c];
  });
}

Tensor relu(const Tensor& a) {
  auto out = unary(a, [](double x) { return x > 0 ? x : 0.0; });
  return make_result(a.shape(), std::move(out.values()), {a}, [](Node& self) {
    const auto& x = self.parents[0]->value;
    double* g = pgrad(self, 0);
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] > 0) g[i] += self.grad[i];
  });
}

Tensor sigmoid(const Tensor& a) {
  auto out = unary(a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); });
  return make_result(a.shape(), std::move(out.values()), {a}, [](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const double y = self.value[i];
      g[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

Tensor hinge(const Tensor& x, double margin) {
  auto out = unary(x, [margin](double v) { return std::max(0.0, v + margin); });
  return make_result(x.shape(), std::move(out.values()), {x}, [margin](Node& self) {
    const auto& v = self.parents[0]->value;
    double* g = pgrad(self, 0);
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] + margin > 0) g[i] += self.grad[i];
  });
}

Tensor softmax(const Tensor& x, double temperature) {
  if (x.rank() == 0 || x.size() == 0) throw std::invalid_argument("softmax: empty tensor");
  if (!(temperature > 0)) throw std::invalid_argument("softmax: temperature must be positive");
  const auto n = x.shape().back();
  const auto rows = x.size() / n;
  std::vector<double> out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * n;
    double* o = out.data() + r * n;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, in[c] / temperature);
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += (o[c] = std::exp(in[c] / temperature - mx));
    for (std::size_t c = 0; c < n; ++c) o[c] /= s;
  }
  return make_result(x.shape(), std::move(out), {x}, [n, rows, temperature](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = self.value.data() + r * n;
      const double* dy = self.grad.data() + r * n;
      double dot = 0;
      for (std::size_t c = 0; c < n; ++c) dot += dy[c] * y[c];
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += y[c] * (dy[c] - dot) / temperature;
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank("layer_norm", x, 2);
  const auto rows = x.dim(0), n = x.dim(1);
  if (gamma.size() != n) mismatch("layer_norm", x.shape(), gamma.shape());
  if (beta.size() != n) mismatch("layer_norm", x.shape(), beta.shape());
  std::vector<double> out(x.size()), xhat(x.size()), inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * n;
    double mu = 0;
    for (std::size_t c = 0; c < n; ++c) mu += in[c];
    mu /= static_cast<double>(n);
    double var = 0;
    for (std::size_t c = 0; c < n; ++c) var += (in[c] - mu) * (in[c] - mu);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat[r * n + c] = (in[c] - mu) * inv_std[r];
      out[r * n + c] = gamma[c] * xhat[r * n + c] + beta[c];
    }
  }
  return make_result(x.shape(), std::move(out), {x, gamma, beta},
                     [rows, n, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                       const auto& gm = self.parents[1]->value;
                       double* gx = pgrad(self, 0);
                       double* gg = pgrad(self, 1);
                       double* gb = pgrad(self, 2);
                       const double nn = static_cast<double>(n);
                       for (std::size_t r = 0; r < rows; ++r) {
                         const double* dy = self.grad.data() + r * n;
                         const double* xh = xhat.data() + r * n;
                         double s1 = 0, s2 = 0;
                         for (std::size_t c = 0; c < n; ++c) {
                           const double dxh = dy[c] * gm[c];
                           s1 += dxh;
                           s2 += dxh * xh[c];
                           if (gg) gg[c] += dy[c] * xh[c];
                           if (gb) gb[c] += dy[c];
                         }
                         if (gx)
                           for (std::size_t c = 0; c < n; ++c)
                             gx[r * n + c] += inv_std[r] / nn * (nn * dy[c] * gm[c] - s1 - xh[c] * s2);
                       }
                     });
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng, bool train) {
  if (!train || p <= 0) return x;
  if (p >= 1) throw std::invalid_argument("dropout: p must be < 1");
  std::bernoulli_distribution keep(1.0 - p);
  const double s = 1.0 / (1.0 - p);
  std::vector<double> mask(x.size());
  for (auto& m : mask) m = keep(rng) ? s : 0.0;
  std::vector<double> out(x.values());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return make_result(x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t i = 0; i < mask.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

Tensor sinusoidal_encoding(std::span<const double> positions, std::size_t dim, double base) {
  return sinusoidal_encoding_multi(positions, 1, dim, base);
}

Tensor sinusoidal_encoding_multi(std::span<const double> values, std::size_t k, std::size_t dim_each,
                                 double base) {
  if (dim_each == 0 || dim_each % 2 != 0) {
    throw std::invalid_argument("sinusoidal_encoding: dimension must be even and positive");
  }
  if (k == 0 || values.size() % k != 0) throw std::invalid_argument("sinusoidal_encoding: bad feature count");
  const auto n = values.size() / k;
  const auto width = k * dim_each;
  std::vector<double> freq(dim_each / 2);
  for (std::size_t i = 0; i < freq.size(); ++i)
    freq[i] = 1.0 / std::pow(base, 2.0 * static_cast<double>(i) / static_cast<double>(dim_each));
  std::vector<double> out(n * width);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t f = 0; f < k; ++f) {
      const double v = values[r * k + f];
      double* o = out.data() + r * width + f * dim_each;
      for (std::size_t i = 0; i < freq.size(); ++i) {
        o[2 * i] = std::sin(v * freq[i]);
        o[2 * i + 1] = std::cos(v * freq[i]);
      }
    }
  return Tensor({n, width}, std::move(out));
}

Tensor conv1d_causal(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t dilation) {
  require_rank("conv1d_causal", x, 3);
  require_rank("conv1d_causal", w, 3);
  const auto B = x.dim(0), cin = x.dim(1), L = x.dim(2);
  const auto cout = w.dim(0), K = w.dim(2);
  if (w.dim(1) != cin) mismatch("conv1d_causal", x.shape(), w.shape());
  if (b.size() != cout) mismatch("conv1d_causal", w.shape(), b.shape());
  if (dilation == 0) throw std::invalid_argument("conv1d_causal: dilation must be >= 1");
  std::vector<double> out(B * cout * L);
  const double* X = x.data();
  const double* W = w.data();
  for (std::size_t bi = 0; bi < B; ++bi)
    for (std::size_t co = 0; co < cout; ++co) {
      double* o = out.data() + (bi * cout + co) * L;
      std::fill(o, o + L, b[co]);
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* in = X + (bi * cin + ci) * L;
        for (std::size_t k = 0; k < K; ++k) {
          const double wk = W[(co * cin + ci) * K + k];
          const std::size_t shift = (K - 1 - k) * dilation;
          for (std::size_t i = shift; i < L; ++i) o[i] += wk * in[i - shift];
        }
      }
    }
  return make_result({B, cout, L}, std::move(out), {x, w, b}, [=](Node& self) {
    const double* Xv = self.parents[0]->value.data();
    const double* Wv = self.parents[1]->value.data();
    double* gx = pgrad(self, 0);
    double* gw = pgrad(self, 1);
    double* gb = pgrad(self, 2);
    for (std::size_t bi = 0; bi < B; ++bi)
      for (std::size_t co = 0; co < cout; ++co) {
        const double* go = self.grad.data() + (bi * cout + co) * L;
        if (gb)
          for (std::size_t i = 0; i < L; ++i) gb[co] += go[i];
        for (std::size_t ci = 0; ci < cin; ++ci) {
          const double* in = Xv + (bi * cin + ci) * L;
          for (std::size_t k = 0; k < K; ++k) {
            const std::size_t shift = (K - 1 - k) * dilation;
            const std::size_t widx = (co * cin + ci) * K + k;
            if (gw) {
              double acc = 0;
              for (std::size_t i = shift; i < L; ++i) acc += go[i] * in[i - shift];
              gw[widx] += acc;
            }
            if (gx) {
              double* gi = gx + (bi * cin + ci) * L;
              const double wk = Wv[widx];
              for (std::size_t i = shift; i < L; ++i) gi[i - shift] += wk * go[i];
            }
          }
        }
      }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t dilation) {
  require_rank("conv2d", x, 3);
  require_rank("conv2d", w, 4);
  const auto cin = x.dim(0), H = x.dim(1), Wd = x.dim(2);
  const auto cout = w.dim(0), K = w.dim(2);
  if (w.dim(1) != cin || w.dim(3) != K || K % 2 == 0) mismatch("conv2d", x.shape(), w.shape());
  if (b.size() != cout) mismatch("conv2d", w.shape(), b.shape());
  if (dilation == 0) throw std::invalid_argument("conv2d: dilation must be >= 1");
  const long r = static_cast<long>(K / 2);
  const long d = static_cast<long>(dilation);
  const long h = static_cast<long>(H), wd = static_cast<long>(Wd);
  // Visits (out row y, in row yy, out col range [x0,x1), col offset dx) for every tap.
  auto for_taps = [=](auto&& body) {
    for (long ky = 0; ky < static_cast<long>(K); ++ky) {
      const long dy = (ky - r) * d;
      for (long kx = 0; kx < static_cast<long>(K); ++kx) {
        const long dx = (kx - r) * d;
        const long x0 = std::max(0L, -dx), x1 = std::min(wd, wd - dx);
        if (x0 >= x1) continue;
        for (long y = std::max(0L, -dy); y < std::min(h, h - dy); ++y)
          body(static_cast<std::size_t>(ky * static_cast<long>(K) + kx), y, y + dy, x0, x1, dx);
      }
    }
  };
  std::vector<double> out(cout * H * Wd);
  const double* X = x.data();
  const double* Wt = w.data();
  for (std::size_t co = 0; co < cout; ++co) {
    double* o = out.data() + co * H * Wd;
    std::fill(o, o + H * Wd, b[co]);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const double* in = X + ci * H * Wd;
      const double* wk = Wt + (co * cin + ci) * K * K;
      for_taps([&](std::size_t tap, long y, long yy, long x0, long x1, long dx) {
        const double wv = wk[tap];
        double* orow = o + y * wd;
        const double* irow = in + yy * wd + dx;
        for (long xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
      });
    }
  }
  return make_result({cout, H, Wd}, std::move(out), {x, w, b}, [=](Node& self) {
    const double* Xv = self.parents[0]->value.data();
    const double* Wv = self.parents[1]->value.data();
    double* gx = pgrad(self, 0);
    double* gw = pgrad(self, 1);
    double* gb = pgrad(self, 2);
    for (std::size_t co = 0; co < cout; ++co) {
      const double* go = self.grad.data() + co * H * Wd;
      if (gb)
        for (std::size_t i = 0; i < H * Wd; ++i) gb[co] += go[i];
      for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* in = Xv + ci * H * Wd;
        const std::size_t wbase = (co * cin + ci) * K * K;
        for_taps([&](std::size_t tap, long y, long yy, long x0, long x1, long dx) {
          const double* grow = go + y * wd;
          if (gw) {
            const double* irow = in + yy * wd + dx;
            double acc = 0;
            for (long xx = x0; xx < x1; ++xx) acc += grow[xx] * irow[xx];
            gw[wbase + tap] += acc;
          }
          if (gx) {
            double* girow = gx + ci * H * Wd + yy * wd + dx;
            const double wv = Wv[wbase + tap];
            for (long xx = x0; xx < x1; ++xx) girow[xx] += wv * grow[xx];
          }
        });
      }
    }
  });
}

Tensor bilinear_sample(const Tensor& fmap, std::span<const SamplePoint> points) {
  require_rank("bilinear_sample", fmap, 3);
  const auto C = fmap.dim(0), H = fmap.dim(1), W = fmap.dim(2);
  struct Tap {
    std::size_t i00, i01, i10, i11;
    double w00, w01, w10, w11;
  };
  std::vector<Tap> taps;
  taps.reserve(points.size());
  for (const auto& p : points) {
    const double x = std::clamp(p.x, 0.0, static_cast<double>(W - 1));
    const double y = std::clamp(p.y, 0.0, static_cast<double>(H - 1));
    const auto x0 = static_cast<std::size_t>(std::floor(x));
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const auto x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
    const double fx = x - static_cast<double>(x0), fy = y - static_cast<double>(y0);
    taps.push_back({y0 * W + x0, y0 * W + x1, y1 * W + x0, y1 * W + x1, (1 - fx) * (1 - fy),
                    fx * (1 - fy), (1 - fx) * fy, fx * fy});
  }
  const auto n = taps.size();
  std::vector<double> out(n * C);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t c = 0; c < C; ++c) {
      const double* f = fmap.data() + c * H * W;
      const auto& t = taps[k];
      out[k * C + c] = t.w00 * f[t.i00] + t.w01 * f[t.i01] + t.w10 * f[t.i10] + t.w11 * f[t.i11];
    }
  return make_result({n, C}, std::move(out), {fmap}, [taps = std::move(taps), C, H, W](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t k = 0; k < taps.size(); ++k)
      for (std::size_t c = 0; c < C; ++c) {
        const double go = self.grad[k * C + c];
        double* f = g + c * H * W;
        const auto& t = taps[k];
        f[t.i00] += t.w00 * go;
        f[t.i01] += t.w01 * go;
        f[t.i10] += t.w10 * go;
        f[t.i11] += t.w11 * go;
      }
  });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  require_rank("cosine_similarity", a, 2);
  require_rank("cosine_similarity", b, 2);
  const auto m = b.dim(0), d = b.dim(1);
  const bool broadcast = a.dim(0) == 1;
  if (a.dim(1) != d || (!broadcast && a.dim(0) != m)) mismatch("cosine_similarity", a.shape(), b.shape());
  constexpr double kTiny = 1e-12;
  std::vector<double> out(m), na(m), nb(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double* x = a.data() + (broadcast ? 0 : r * d);
    const double* y = b.data() + r * d;
    double dot = 0, xx = 0, yy = 0;
    for (std::size_t c = 0; c < d; ++c) {
      dot += x[c] * y[c];
      xx += x[c] * x[c];
      yy += y[c] * y[c];
    }
    na[r] = std::max(std::sqrt(xx), kTiny);
    nb[r] = std::max(std::sqrt(yy), kTiny);
    out[r] = dot / (na[r] * nb[r]);
  }
  return make_result({m}, std::move(out), {a, b},
                     [m, d, broadcast, na = std::move(na), nb = std::move(nb)](Node& self) {
                       const auto& A = self.parents[0]->value;
                       const auto& Bv = self.parents[1]->value;
                       double* ga = pgrad(self, 0);
                       double* gb = pgrad(self, 1);
                       for (std::size_t r = 0; r < m; ++r) {
                         const double* x = A.data() + (broadcast ? 0 : r * d);
                         const double* y = Bv.data() + r * d;
                         const double s = self.value[r], g = self.grad[r];
                         if (ga) {
                           double* gx = ga + (broadcast ? 0 : r * d);
                           for (std::size_t c = 0; c < d; ++c)
                             gx[c] += g * (y[c] / (na[r] * nb[r]) - s * x[c] / (na[r] * na[r]));
                         }
                         if (gb) {
                           double* gy = gb + r * d;
                           for (std::size_t c = 0; c < d; ++c)
                             gy[c] += g * (x[c] / (na[r] * nb[r]) - s * y[c] / (nb[r] * nb[r]));
                         }
                       }
                     });
}

Tensor sum(const Tensor& a) {
  double s = 0;
  for (double v : a.values()) s += v;
  return make_result({1}, {s}, {a}, [](Node& self) {
    double* g = pgrad(self, 0);
    const auto n = self.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[0];
  });
}

Tensor mean(const Tensor& a) {
  if (a.size() == 0) throw std::invalid_argument("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.size()));
}

Tensor max(const Tensor& a) {
  if (a.size() == 0) throw std::invalid_argument("max: empty tensor");
  const auto& v = a.values();
  const auto arg = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
  return make_result({1}, {v[arg]}, {a}, [arg](Node& self) { pgrad(self, 0)[arg] += self.grad[0]; });
}

Tensor max_rows(const Tensor& a) {
  require_rank("max_rows", a, 2);
  const auto m = a.dim(0), n = a.dim(1);
  if (m == 0) throw std::invalid_argument("max_rows: no rows");
  std::vector<std::size_t> arg(n, 0);
  std::vector<double> out(n);
  for (std::size_t c = 0; c < n; ++c) {
    out[c] = a.data()[c];
    for (std::size_t r = 1; r < m; ++r)
      if (a.data()[r * n + c] > out[c]) {
        out[c] = a.data()[r * n + c];
        arg[c] = r;
      }
  }
  return make_result({1, n}, std::move(out), {a}, [n, arg = std::move(arg)](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t c = 0; c < n; ++c) g[arg[c] * n + c] += self.grad[c];
  });
}

Tensor mean_rows(const Tensor& a) {
  require_rank("mean_rows", a, 2);
  const auto m = a.dim(0), n = a.dim(1);
  if (m == 0) throw std::invalid_argument("mean_rows: no rows");
  std::vector<double> out(n, 0.0);
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[c] += a.data()[r * n + c] / static_cast<double>(m);
  return make_result({1, n}, std::move(out), {a}, [m, n](Node& self) {
    double* g = pgrad(self, 0);
    for (std::size_t r = 0; r < m; ++r)
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += self.grad[c] / static_cast<double>(m);
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets) {
  require_rank("cross_entropy", logits, 2);
  const auto rows = logits.dim(0), C = logits.dim(1);
  if (targets.size() != rows) {
    throw std::invalid_argument("cross_entropy: " + std::to_string(targets.size()) +
                                " targets for logits " + shape_str(logits.shape()));
  }
  std::vector<double> probs(rows * C, 0.0);
  std::vector<int> tg(targets.begin(), targets.end());
  double loss = 0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (tg[r] == kIgnoreIndex) continue;
    if (tg[r] < 0 || static_cast<std::size_t>(tg[r]) >= C) {
      throw std::out_of_range("cross_entropy: target " + std::to_string(tg[r]) + " outside [0," +
                              std::to_string(C) + ")");
    }
    const double* z = logits.data() + r * C;
    const double mx = *std::max_element(z, z + C);
    double s = 0;
    for (std::size_t c = 0; c < C; ++c) s += (probs[r * C + c] = std::exp(z[c] - mx));
    for (std::size_t c = 0; c < C; ++c) probs[r * C + c] /= s;
    loss += -(z[tg[r]] - mx - std::log(s));
    ++count;
  }
  const double denom = count ? static_cast<double>(count) : 1.0;
  return make_result({1}, {loss / denom}, {logits},
                     [rows, C, denom, tg = std::move(tg), probs = std::move(probs)](Node& self) {
                       double* g = pgrad(self, 0);
                       for (std::size_t r = 0; r < rows; ++r) {
                         if (tg[r] == kIgnoreIndex) continue;
                         for (std::size_t c = 0; c < C; ++c) {
                           const double onehot = static_cast<int>(c) == tg[r] ? 1.0 : 0.0;
                           g[r * C + c] += self.grad[0] * (probs[r * C + c] - onehot) / denom;
                         }
                       }
                     });
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> targets) {
  if (targets.size() != logits.size()) {
    throw std::invalid_argument("bce_with_logits: " + std::to_string(targets.size()) +
                                " targets for logits " + shape_str(logits.shape()));
  }
  const auto n = logits.size();
  if (n == 0) throw std::invalid_argument("bce_with_logits: empty input");
  std::vector<double> tg(targets.begin(), targets.end());
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = logits[i];
    loss += std::max(z, 0.0) - z * tg[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return make_result({1}, {loss / static_cast<double>(n)}, {logits}, [n, tg = std::move(tg)](Node& self) {
    const auto& z = self.parents[0]->value;
    double* g = pgrad(self, 0);
    for (std::size_t i = 0; i < n; ++i)
      g[i] += self.grad[0] * (1.0 / (1.0 + std::exp(-z[i])) - tg[i]) / static_cast<double>(n);
  });
}

Tensor l2_loss(const Tensor& pred, const Tensor& target) {
  if (pred.shape() != target.shape()) mismatch("l2_loss", pred.shape(), target.shape());
  auto d = sub(pred, target);
  return mean(mul(d, d));
}

}  // namespace a2p::ad
