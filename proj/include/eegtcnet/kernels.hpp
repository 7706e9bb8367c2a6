#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

// Inference kernels. Every reduction accumulates in double and rounds to
// float on output. Convolutions are cross-correlations (no kernel flip).
//
// kernels::naive holds the direct per-output-element formulas; they are the
// reference every restructured kernel in kernels:: is checked against.

namespace eegtcnet::kernels {

inline constexpr float kBatchNormEps = 1e-3f;

namespace detail {

inline void require(bool cond, const char* kernel, const std::string& what) {
  if (!cond) throw ShapeError(std::string(kernel) + ": " + what);
}

inline void require_rank(const Tensor& t, std::size_t r, const char* kernel, const char* name) {
  require(t.rank() == r, kernel,
          std::string(name) + " must have rank " + std::to_string(r) + ", got " + dims_to_string(t.dims()));
}

// Left pad for "same" padding; the smaller half goes on the left for even kernels.
constexpr std::size_t same_pad_left(std::size_t k) { return (k - 1) / 2; }

// Output positions [lo, hi) whose source index i + offset lies in [0, n).
inline std::pair<std::size_t, std::size_t> valid_range(std::size_t n, long offset) {
  const long lo = std::max(0L, -offset);
  const long hi = std::min(static_cast<long>(n), static_cast<long>(n) - offset);
  if (hi <= lo) return {0, 0};
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

}  // namespace detail

namespace naive {

inline Tensor conv2d_same(const Tensor& x, const Tensor& w) {
  using detail::require;
  detail::require_rank(x, 3, "conv2d_same", "input");
  detail::require_rank(w, 4, "conv2d_same", "weight");
  const std::size_t cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t cout = w.dim(0), K1 = w.dim(2), K2 = w.dim(3);
  require(w.dim(1) == cin, "conv2d_same", "weight input depth " + std::to_string(w.dim(1)) +
                                              " != input depth " + std::to_string(cin));
  require(K1 <= H || K1 == 1, "conv2d_same", "kernel height exceeds input height");
  const auto top = static_cast<long>(detail::same_pad_left(K1));
  const auto left = static_cast<long>(detail::same_pad_left(K2));
  Tensor y({cout, H, W});
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < W; ++t) {
        double acc = 0.0;
        for (std::size_t ci = 0; ci < cin; ++ci) {
          for (std::size_t a = 0; a < K1; ++a) {
            for (std::size_t b = 0; b < K2; ++b) {
              const long hi = static_cast<long>(h + a) - top;
              const long ti = static_cast<long>(t + b) - left;
              if (hi < 0 || ti < 0 || hi >= static_cast<long>(H) || ti >= static_cast<long>(W)) continue;
              acc += static_cast<double>(w[((co * cin + ci) * K1 + a) * K2 + b]) *
                     x.at(ci, static_cast<std::size_t>(hi), static_cast<std::size_t>(ti));
            }
          }
        }
        y.at(co, h, t) = static_cast<float>(acc);
      }
    }
  }
  return y;
}

inline Tensor depthwise_conv2d(const Tensor& x, const Tensor& w) {
  using detail::require;
  detail::require_rank(x, 3, "depthwise_conv2d", "input");
  detail::require_rank(w, 4, "depthwise_conv2d", "weight");
  const std::size_t cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t D = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  require(w.dim(0) == cin, "depthwise_conv2d", "weight depth does not match input depth");
  require(KH == H, "depthwise_conv2d",
          "kernel height " + std::to_string(KH) + " != input height " + std::to_string(H));
  require(KW >= 1 && KW <= W, "depthwise_conv2d", "kernel width does not fit input");
  const std::size_t Ho = H - KH + 1, Wo = W - KW + 1;
  Tensor y({cin * D, Ho, Wo});
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t m = 0; m < D; ++m) {
      for (std::size_t h = 0; h < Ho; ++h) {
        for (std::size_t t = 0; t < Wo; ++t) {
          double acc = 0.0;
          for (std::size_t a = 0; a < KH; ++a) {
            for (std::size_t b = 0; b < KW; ++b) {
              acc += static_cast<double>(w[((c * D + m) * KH + a) * KW + b]) * x.at(c, h + a, t + b);
            }
          }
          y.at(c * D + m, h, t) = static_cast<float>(acc);
        }
      }
    }
  }
  return y;
}

inline Tensor separable_conv2d(const Tensor& x, const Tensor& dw, const Tensor& pw) {
  using detail::require;
  detail::require_rank(x, 3, "separable_conv2d", "input");
  detail::require_rank(dw, 4, "separable_conv2d", "depthwise weight");
  detail::require_rank(pw, 4, "separable_conv2d", "pointwise weight");
  const std::size_t cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t K = dw.dim(3), cout = pw.dim(0);
  require(dw.dim(0) == cin && dw.dim(1) == 1 && dw.dim(2) == 1, "separable_conv2d",
          "depthwise weight must be (Cin,1,1,K), got " + dims_to_string(dw.dims()));
  require(pw.dim(1) == cin && pw.dim(2) == 1 && pw.dim(3) == 1, "separable_conv2d",
          "pointwise weight must be (Cout,Cin,1,1), got " + dims_to_string(pw.dims()));
  const auto left = static_cast<long>(detail::same_pad_left(K));
  Tensor mid({cin, H, W});
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < W; ++t) {
        double acc = 0.0;
        for (std::size_t b = 0; b < K; ++b) {
          const long ti = static_cast<long>(t + b) - left;
          if (ti < 0 || ti >= static_cast<long>(W)) continue;
          acc += static_cast<double>(dw[c * K + b]) * x.at(c, h, static_cast<std::size_t>(ti));
        }
        mid.at(c, h, t) = static_cast<float>(acc);
      }
    }
  }
  Tensor y({cout, H, W});
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < W; ++t) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cin; ++c) acc += static_cast<double>(pw[co * cin + c]) * mid.at(c, h, t);
        y.at(co, h, t) = static_cast<float>(acc);
      }
    }
  }
  return y;
}

inline Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t d) {
  using detail::require;
  detail::require_rank(x, 2, "causal_conv1d", "input");
  detail::require_rank(w, 3, "causal_conv1d", "weight");
  detail::require_rank(b, 1, "causal_conv1d", "bias");
  const std::size_t cin = x.dim(0), W = x.dim(1);
  const std::size_t cout = w.dim(0), K = w.dim(2);
  require(d >= 1, "causal_conv1d", "dilation must be >= 1");
  require(w.dim(1) == cin, "causal_conv1d", "weight input depth does not match input depth");
  require(b.dim(0) == cout, "causal_conv1d", "bias length does not match output depth");
  const long pad = static_cast<long>((K - 1) * d);
  Tensor y({cout, W});
  for (std::size_t c = 0; c < cout; ++c) {
    for (std::size_t t = 0; t < W; ++t) {
      double acc = b[c];
      for (std::size_t i = 0; i < cin; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
          const long src = static_cast<long>(t + k * d) - pad;
          const double xv = src < 0 ? 0.0 : x.at(i, static_cast<std::size_t>(src));
          acc += static_cast<double>(w[(c * cin + i) * K + k]) * xv;
        }
      }
      y.at(c, t) = static_cast<float>(acc);
    }
  }
  return y;
}

inline Tensor batchnorm_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                              const Tensor& var, float eps = kBatchNormEps) {
  const std::size_t C = x.dim(0);
  for (const Tensor* p : {&gamma, &beta, &mean, &var}) {
    detail::require(p->rank() == 1 && p->dim(0) == C, "batchnorm_infer",
                    "parameter length does not match depth " + std::to_string(C));
  }
  const std::size_t inner = x.size() / C;
  Tensor y(x.dims());
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t j = 0; j < inner; ++j) {
      const double v = x[c * inner + j];
      y[c * inner + j] = static_cast<float>(static_cast<double>(gamma[c]) * (v - mean[c]) /
                                                std::sqrt(static_cast<double>(var[c]) + eps) +
                                            beta[c]);
    }
  }
  return y;
}

inline Tensor elu(const Tensor& x, double alpha = 1.0) {
  Tensor y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    y[i] = static_cast<float>(v > 0 ? v : alpha * (std::exp(v) - 1.0));
  }
  return y;
}

inline Tensor avg_pool(const Tensor& x, std::size_t k) {
  detail::require_rank(x, 3, "avg_pool", "input");
  detail::require(k >= 1, "avg_pool", "pool width must be >= 1");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  detail::require(W >= k, "avg_pool", "width " + std::to_string(W) + " < pool " + std::to_string(k));
  const std::size_t Wo = W / k;
  Tensor y({C, H, Wo});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t t = 0; t < Wo; ++t) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += x.at(c, h, t * k + j);
        y.at(c, h, t) = static_cast<float>(acc / static_cast<double>(k));
      }
    }
  }
  return y;
}

inline Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  detail::require_rank(x, 1, "dense", "input");
  detail::require_rank(w, 2, "dense", "weight");
  detail::require(w.dim(1) == x.dim(0) && b.rank() == 1 && b.dim(0) == w.dim(0), "dense",
                  "weight " + dims_to_string(w.dims()) + " / bias " + dims_to_string(b.dims()) +
                      " do not conform to input " + dims_to_string(x.dims()));
  Tensor y({w.dim(0)});
  for (std::size_t o = 0; o < w.dim(0); ++o) {
    double acc = b[o];
    for (std::size_t i = 0; i < x.dim(0); ++i) acc += static_cast<double>(w.at(o, i)) * x[i];
    y[o] = static_cast<float>(acc);
  }
  return y;
}

inline Tensor softmax(const Tensor& x) {
  detail::require_rank(x, 1, "softmax", "input");
  double mx = x[0];
  for (std::size_t i = 1; i < x.size(); ++i) mx = std::max(mx, static_cast<double>(x[i]));
  std::vector<double> e(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += e[i] = std::exp(x[i] - mx);
  Tensor y(x.dims());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = static_cast<float>(e[i] / sum);
  return y;
}

}  // namespace naive

// -- restructured kernels ---------------------------------------------------

inline Tensor conv2d_same(const Tensor& x, const Tensor& w) {
  using detail::require;
  detail::require_rank(x, 3, "conv2d_same", "input");
  detail::require_rank(w, 4, "conv2d_same", "weight");
  const std::size_t cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t cout = w.dim(0), K1 = w.dim(2), K2 = w.dim(3);
  require(w.dim(1) == cin, "conv2d_same", "weight input depth " + std::to_string(w.dim(1)) +
                                              " != input depth " + std::to_string(cin));
  require(K1 <= H || K1 == 1, "conv2d_same", "kernel height exceeds input height");
  const std::size_t top = detail::same_pad_left(K1);
  const std::size_t left = detail::same_pad_left(K2);
  const auto xs = x.data();
  const auto ws = w.data();
  Tensor y({cout, H, W});
  std::vector<double> acc(H * W);
  for (std::size_t co = 0; co < cout; ++co) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t a = 0; a < K1; ++a) {
        // Output rows h whose source row h + a - top is inside the input.
        const auto [h_lo, h_hi] = detail::valid_range(H, static_cast<long>(a) - static_cast<long>(top));
        for (std::size_t b = 0; b < K2; ++b) {
          const double wv = ws[((co * cin + ci) * K1 + a) * K2 + b];
          const long off = static_cast<long>(b) - static_cast<long>(left);
          const auto [t_lo, t_hi] = detail::valid_range(W, off);
          for (std::size_t h = h_lo; h < h_hi; ++h) {
            const float* src = xs.data() + (ci * H + (h + a - top)) * W;
            double* dst = acc.data() + h * W;
            for (std::size_t t = t_lo; t < t_hi; ++t) dst[t] += wv * src[static_cast<long>(t) + off];
          }
        }
      }
    }
    float* out = y.data().data() + co * H * W;
    for (std::size_t i = 0; i < H * W; ++i) out[i] = static_cast<float>(acc[i]);
  }
  return y;
}

inline Tensor depthwise_conv2d(const Tensor& x, const Tensor& w) {
  using detail::require;
  detail::require_rank(x, 3, "depthwise_conv2d", "input");
  detail::require_rank(w, 4, "depthwise_conv2d", "weight");
  const std::size_t cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t D = w.dim(1), KH = w.dim(2), KW = w.dim(3);
  require(w.dim(0) == cin, "depthwise_conv2d", "weight depth does not match input depth");
  require(KH == H, "depthwise_conv2d",
          "kernel height " + std::to_string(KH) + " != input height " + std::to_string(H));
  require(KW >= 1 && KW <= W, "depthwise_conv2d", "kernel width does not fit input");
  const std::size_t Ho = 1, Wo = W - KW + 1;
  const auto xs = x.data();
  const auto ws = w.data();
  Tensor y({cin * D, Ho, Wo});
  std::vector<double> acc(Wo);
  for (std::size_t c = 0; c < cin; ++c) {
    for (std::size_t m = 0; m < D; ++m) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t a = 0; a < KH; ++a) {
        for (std::size_t b = 0; b < KW; ++b) {
          const double wv = ws[((c * D + m) * KH + a) * KW + b];
          const float* src = xs.data() + (c * H + a) * W + b;
          for (std::size_t t = 0; t < Wo; ++t) acc[t] += wv * src[t];
        }
      }
      float* out = y.data().data() + (c * D + m) * Wo;
      for (std::size_t t = 0; t < Wo; ++t) out[t] = static_cast<float>(acc[t]);
    }
  }
  return y;
}

inline Tensor separable_conv2d(const Tensor& x, const Tensor& dw, const Tensor& pw) {
  using detail::require;
  detail::require_rank(x, 3, "separable_conv2d", "input");
  detail::require_rank(dw, 4, "separable_conv2d", "depthwise weight");
  detail::require_rank(pw, 4, "separable_conv2d", "pointwise weight");
  const std::size_t cin = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t K = dw.dim(3), cout = pw.dim(0);
  require(dw.dim(0) == cin && dw.dim(1) == 1 && dw.dim(2) == 1, "separable_conv2d",
          "depthwise weight must be (Cin,1,1,K), got " + dims_to_string(dw.dims()));
  require(pw.dim(1) == cin && pw.dim(2) == 1 && pw.dim(3) == 1, "separable_conv2d",
          "pointwise weight must be (Cout,Cin,1,1), got " + dims_to_string(pw.dims()));
  const std::size_t left = detail::same_pad_left(K);
  const std::size_t rows = cin * H;
  const auto xs = x.data();

  // Depthwise temporal stage, one row at a time.
  std::vector<float> mid(rows * W);
  std::vector<double> acc(W);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t c = r / H;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t b = 0; b < K; ++b) {
      const double wv = dw[c * K + b];
      const long off = static_cast<long>(b) - static_cast<long>(left);
      const auto [t_lo, t_hi] = detail::valid_range(W, off);
      const float* src = xs.data() + r * W;
      for (std::size_t t = t_lo; t < t_hi; ++t) acc[t] += wv * src[static_cast<long>(t) + off];
    }
    for (std::size_t t = 0; t < W; ++t) mid[r * W + t] = static_cast<float>(acc[t]);
  }

  // Pointwise mixing.
  Tensor y({cout, H, W});
  const std::size_t plane = H * W;
  std::vector<double> pacc(plane);
  for (std::size_t co = 0; co < cout; ++co) {
    std::fill(pacc.begin(), pacc.end(), 0.0);
    for (std::size_t c = 0; c < cin; ++c) {
      const double wv = pw[co * cin + c];
      const float* src = mid.data() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) pacc[i] += wv * src[i];
    }
    float* out = y.data().data() + co * plane;
    for (std::size_t i = 0; i < plane; ++i) out[i] = static_cast<float>(pacc[i]);
  }
  return y;
}

inline Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& b, std::size_t d) {
  using detail::require;
  detail::require_rank(x, 2, "causal_conv1d", "input");
  detail::require_rank(w, 3, "causal_conv1d", "weight");
  detail::require_rank(b, 1, "causal_conv1d", "bias");
  const std::size_t cin = x.dim(0), W = x.dim(1);
  const std::size_t cout = w.dim(0), K = w.dim(2);
  require(d >= 1, "causal_conv1d", "dilation must be >= 1");
  require(w.dim(1) == cin, "causal_conv1d", "weight input depth does not match input depth");
  require(b.dim(0) == cout, "causal_conv1d", "bias length does not match output depth");
  const std::size_t pad = (K - 1) * d;
  const auto xs = x.data();
  const auto ws = w.data();
  Tensor y({cout, W});
  std::vector<double> acc(W);
  for (std::size_t c = 0; c < cout; ++c) {
    std::fill(acc.begin(), acc.end(), static_cast<double>(b[c]));
    for (std::size_t i = 0; i < cin; ++i) {
      const float* row = xs.data() + i * W;
      for (std::size_t k = 0; k < K; ++k) {
        const double wv = ws[(c * cin + i) * K + k];
        // Tap k reads x[t + k*d - pad]; outputs before `shift` see only padding.
        const std::size_t shift = pad - k * d;
        for (std::size_t t = shift; t < W; ++t) acc[t] += wv * row[t - shift];
      }
    }
    float* out = y.data().data() + c * W;
    for (std::size_t t = 0; t < W; ++t) out[t] = static_cast<float>(acc[t]);
  }
  return y;
}

inline Tensor pointwise_conv1d(const Tensor& x, const Tensor& w, const Tensor& b) {
  detail::require(w.rank() == 3 && w.dim(2) == 1, "pointwise_conv1d", "weight must be (Cout,Cin,1)");
  return causal_conv1d(x, w, b, 1);
}

inline Tensor batchnorm_infer(const Tensor& x, const Tensor& gamma, const Tensor& beta, const Tensor& mean,
                              const Tensor& var, float eps = kBatchNormEps) {
  const std::size_t C = x.dim(0);
  for (const Tensor* p : {&gamma, &beta, &mean, &var}) {
    detail::require(p->rank() == 1 && p->dim(0) == C, "batchnorm_infer",
                    "parameter length does not match depth " + std::to_string(C));
  }
  const std::size_t inner = x.size() / C;
  Tensor y(x.dims());
  for (std::size_t c = 0; c < C; ++c) {
    const double scale = static_cast<double>(gamma[c]) / std::sqrt(static_cast<double>(var[c]) + eps);
    const double shift = static_cast<double>(beta[c]) - scale * mean[c];
    const float* src = x.data().data() + c * inner;
    float* dst = y.data().data() + c * inner;
    for (std::size_t j = 0; j < inner; ++j) dst[j] = static_cast<float>(scale * src[j] + shift);
  }
  return y;
}

inline Tensor elu(const Tensor& x, double alpha = 1.0) {
  Tensor y(x.dims());
  auto src = x.data();
  auto dst = y.data();
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = src[i];
    dst[i] = static_cast<float>(v > 0 ? v : alpha * std::expm1(v));
  }
  return y;
}

inline Tensor avg_pool(const Tensor& x, std::size_t k) {
  detail::require_rank(x, 3, "avg_pool", "input");
  detail::require(k >= 1, "avg_pool", "pool width must be >= 1");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  detail::require(W >= k, "avg_pool", "width " + std::to_string(W) + " < pool " + std::to_string(k));
  const std::size_t Wo = W / k;
  const double inv = 1.0 / static_cast<double>(k);
  Tensor y({C, H, Wo});
  const float* src = x.data().data();
  float* dst = y.data().data();
  for (std::size_t r = 0; r < C * H; ++r) {
    const float* row = src + r * W;
    for (std::size_t t = 0; t < Wo; ++t) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += row[t * k + j];
      dst[r * Wo + t] = static_cast<float>(acc * inv);
    }
  }
  return y;
}

inline Tensor dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  detail::require_rank(x, 1, "dense", "input");
  detail::require_rank(w, 2, "dense", "weight");
  detail::require(w.dim(1) == x.dim(0) && b.rank() == 1 && b.dim(0) == w.dim(0), "dense",
                  "weight " + dims_to_string(w.dims()) + " / bias " + dims_to_string(b.dims()) +
                      " do not conform to input " + dims_to_string(x.dims()));
  const std::size_t n = x.dim(0);
  Tensor y({w.dim(0)});
  const float* xs = x.data().data();
  for (std::size_t o = 0; o < w.dim(0); ++o) {
    const float* row = w.data().data() + o * n;
    double acc = b[o];
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<double>(row[i]) * xs[i];
    y[o] = static_cast<float>(acc);
  }
  return y;
}

inline Tensor softmax(const Tensor& x) {
  detail::require_rank(x, 1, "softmax", "input");
  detail::require(x.size() > 0, "softmax", "empty input");
  const auto xs = x.data();
  const double mx = *std::max_element(xs.begin(), xs.end());
  std::vector<double> e(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    e[i] = std::exp(static_cast<double>(xs[i]) - mx);
    sum += e[i];
  }
  Tensor y(x.dims());
  for (std::size_t i = 0; i < xs.size(); ++i) y[i] = static_cast<float>(e[i] / sum);
  return y;
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require(a.size() == b.size(), "add",
                  "operand sizes differ " + dims_to_string(a.dims()) + " vs " + dims_to_string(b.dims()));
  Tensor y(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i) y[i] = a[i] + b[i];
  return y;
}

// (C,W) -> (C): value at the final time step of every channel.
inline Tensor slice_last_timestep(const Tensor& x) {
  detail::require_rank(x, 2, "slice_last_timestep", "input");
  const std::size_t C = x.dim(0), W = x.dim(1);
  Tensor y({C});
  for (std::size_t c = 0; c < C; ++c) y[c] = x.at(c, W - 1);
  return y;
}

}  // namespace eegtcnet::kernels
