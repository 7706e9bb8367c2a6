#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <eegtcnet/eegtcnet.hpp>

namespace testing_support {

using eegtcnet::Dims;
using eegtcnet::Tensor;

inline Tensor random_tensor(std::mt19937_64& rng, Dims dims, float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(std::move(dims));
  for (auto& v : t.data()) v = u(rng);
  return t;
}

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Largest |a-b| / max(1, |b|) over all elements; infinity on shape mismatch.
inline double max_rel_error(const Tensor& a, const Tensor& b) {
  if (a.dims() != b.dims()) return INFINITY;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ref = b[i];
    worst = std::max(worst, std::fabs(static_cast<double>(a[i]) - ref) / std::max(1.0, std::fabs(ref)));
  }
  return worst;
}

inline eegtcnet::TrialSet random_trials(std::size_t n, std::size_t C, std::size_t T, std::uint64_t seed,
                                        int n_classes = 4) {
  eegtcnet::TrialSet s;
  s.C = C;
  s.T = T;
  s.n_classes = n_classes;
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor t({C, T});
    for (auto& v : t.data()) v = g(rng);
    s.push_back(t, static_cast<std::uint8_t>(i % static_cast<std::size_t>(n_classes)));
  }
  return s;
}

// Brute-force oracles built on explicitly zero-padded copies of the input,
// deliberately unlike the library's index arithmetic.
namespace oracle {

inline std::vector<double> pad_row(const float* row, std::size_t n, std::size_t left, std::size_t right) {
  std::vector<double> p(left + n + right, 0.0);
  for (std::size_t i = 0; i < n; ++i) p[left + i] = row[i];
  return p;
}

inline Tensor conv2d_same(const Tensor& x, const Tensor& w) {
  const std::size_t Cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t Cout = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const std::size_t top = (KH - 1) / 2, left = (KW - 1) / 2;
  const std::size_t PH = H + KH - 1, PW = W + KW - 1;
  std::vector<double> padded(Cin * PH * PW, 0.0);
  for (std::size_t c = 0; c < Cin; ++c)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t t = 0; t < W; ++t) padded[(c * PH + h + top) * PW + t + left] = x.at(c, h, t);
  Tensor y({Cout, H, W});
  for (std::size_t o = 0; o < Cout; ++o)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t t = 0; t < W; ++t) {
        double s = 0.0;
        for (std::size_t c = 0; c < Cin; ++c)
          for (std::size_t a = 0; a < KH; ++a)
            for (std::size_t b = 0; b < KW; ++b)
              s += padded[(c * PH + h + a) * PW + t + b] * w.values()[((o * Cin + c) * KH + a) * KW + b];
        y.at(o, h, t) = static_cast<float>(s);
      }
  return y;
}

inline Tensor depthwise_conv2d(const Tensor& x, const Tensor& w) {
  const std::size_t Cin = x.dim(0), C = x.dim(1), T = x.dim(2), D = w.dim(1);
  Tensor y({Cin * D, 1, T});
  for (std::size_t c = 0; c < Cin; ++c)
    for (std::size_t m = 0; m < D; ++m)
      for (std::size_t t = 0; t < T; ++t) {
        double s = 0.0;
        for (std::size_t h = 0; h < C; ++h) s += double(x.at(c, h, t)) * w.values()[((c * D + m) * C + h)];
        y.at(c * D + m, 0, t) = static_cast<float>(s);
      }
  return y;
}

inline Tensor separable_conv2d(const Tensor& x, const Tensor& dw, const Tensor& pw) {
  const std::size_t Cin = x.dim(0), W = x.dim(2), K = dw.dim(3), Cout = pw.dim(0);
  std::vector<std::vector<double>> stage(Cin, std::vector<double>(W));
  for (std::size_t c = 0; c < Cin; ++c) {
    const auto p = pad_row(&x.values()[c * W], W, (K - 1) / 2, K / 2);
    for (std::size_t t = 0; t < W; ++t) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += p[t + k] * dw.values()[c * K + k];
      stage[c][t] = static_cast<float>(s);
    }
  }
  Tensor y({Cout, 1, W});
  for (std::size_t o = 0; o < Cout; ++o)
    for (std::size_t t = 0; t < W; ++t) {
      double s = 0.0;
      for (std::size_t c = 0; c < Cin; ++c) s += stage[c][t] * pw.values()[o * Cin + c];
      y.at(o, 0, t) = static_cast<float>(s);
    }
  return y;
}

inline Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t d) {
  const std::size_t Cin = x.dim(0), W = x.dim(1), Cout = w.dim(0), K = w.dim(2);
  Tensor y({Cout, W});
  for (std::size_t o = 0; o < Cout; ++o)
    for (std::size_t t = 0; t < W; ++t) {
      double s = b[o];
      for (std::size_t c = 0; c < Cin; ++c) {
        const auto p = pad_row(&x.values()[c * W], W, (K - 1) * d, 0);
        for (std::size_t k = 0; k < K; ++k) s += p[t + k * d] * w.values()[(o * Cin + c) * K + k];
      }
      y.at(o, t) = static_cast<float>(s);
    }
  return y;
}

inline Tensor batchnorm(const Tensor& x, const Tensor& g, const Tensor& be, const Tensor& m, const Tensor& v,
                        double eps) {
  Tensor y = x;
  const std::size_t per = x.size() / x.dim(0);
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (std::size_t i = 0; i < per; ++i) {
      const double xv = x[c * per + i];
      y[c * per + i] = static_cast<float>(g[c] * (xv - m[c]) / std::sqrt(double(v[c]) + eps) + be[c]);
    }
  return y;
}

inline Tensor avg_pool(const Tensor& x, std::size_t k) {
  const std::size_t D = x.dim(0), H = x.dim(1), W = x.dim(2), out = W / k;
  Tensor y({D, H, out});
  for (std::size_t c = 0; c < D; ++c)
    for (std::size_t h = 0; h < H; ++h)
      for (std::size_t j = 0; j < out; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i) s += x.at(c, h, j * k + i);
        y.at(c, h, j) = static_cast<float>(s / double(k));
      }
  return y;
}

inline Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  Tensor y({w.dim(0)});
  for (std::size_t o = 0; o < w.dim(0); ++o) {
    double s = b[o];
    for (std::size_t i = 0; i < w.dim(1); ++i) s += double(w.at(o, i)) * x[i];
    y[o] = static_cast<float>(s);
  }
  return y;
}

inline Tensor softmax(const Tensor& x) {
  std::vector<double> e(x.size());
  double z = 0.0;
  // No max shift: the oracle stays within moderate logit ranges.
  for (std::size_t i = 0; i < x.size(); ++i) z += e[i] = std::exp(double(x[i]));
  Tensor y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<float>(e[i] / z);
  return y;
}

inline Tensor elu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.data()) v = v > 0.0f ? v : static_cast<float>(std::exp(double(v)) - 1.0);
  return y;
}

}  // namespace oracle

}  // namespace testing_support
