#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "runtime.hpp"
#include "trials.hpp"
#include "weights.hpp"

// Simulated 8-bit quantization: parameters and feature maps are stored as
// int8 codes but every layer still computes in real arithmetic on the
// dequantized values.

namespace eegtcnet {

struct QuantParam {
  float scale = 1.0f;
  std::int32_t zero_point = 0;
  friend bool operator==(const QuantParam&, const QuantParam&) = default;
};

struct QuantParams {
  std::map<std::string, QuantParam> weights;
  // Indexed by buffer (0 = network input). The probability output is left in
  // real precision and has no entry.
  std::vector<QuantParam> activations;
};

// Smallest scale used for all-zero tensors or degenerate activation ranges.
inline constexpr float kMinScale = 1e-12f;

inline std::int8_t quantize_value(float v, QuantParam q, std::int32_t lo, std::int32_t hi) {
  const double code = std::nearbyint(static_cast<double>(v) / q.scale) + q.zero_point;
  return static_cast<std::int8_t>(std::clamp<double>(code, lo, hi));
}

// Symmetric per-tensor quantization onto [-127, 127] with zero-point 0.
inline QuantizedTensor quantize_symmetric(const Tensor& t) {
  float max_abs = 0.0f;
  for (float v : t.data()) max_abs = std::max(max_abs, std::fabs(v));
  QuantizedTensor q;
  q.dims = t.dims();
  q.scale = std::max(max_abs / 127.0f, kMinScale);
  q.zero_point = 0;
  q.codes.reserve(t.size());
  for (float v : t.data()) q.codes.push_back(quantize_value(v, {q.scale, 0}, -127, 127));
  return q;
}

// Asymmetric parameters covering [lo, hi] (widened to include 0) with 256 levels.
inline QuantParam activation_params(float lo, float hi) {
  lo = std::min(lo, 0.0f);
  hi = std::max(hi, 0.0f);
  QuantParam q;
  q.scale = std::max((hi - lo) / 255.0f, kMinScale);
  const double zp = -128.0 - std::nearbyint(static_cast<double>(lo) / q.scale);
  q.zero_point = static_cast<std::int32_t>(std::clamp(zp, -128.0, 127.0));
  return q;
}

inline float fake_quantize(float v, QuantParam q) {
  const std::int8_t code = quantize_value(v, q, -128, 127);
  return q.scale * static_cast<float>(static_cast<std::int32_t>(code) - q.zero_point);
}

struct QuantizedModel {
  WeightStore weights;  // int8 entries
  QuantParams params;
};

// Quantizes every parameter tensor and calibrates one activation range per
// feature-map buffer from min/max over the calibration trials.
inline QuantizedModel quantize_weights(const WeightStore& weights, const TrialSet& calibration,
                                       const std::optional<StandardizationStats>& stats = std::nullopt) {
  if (calibration.n_trials == 0) throw std::invalid_argument("calibration set is empty");
  QuantizedModel m;
  m.weights = WeightStore{weights.family, weights.hp, {}};
  for (const auto& [name, _] : weights.entries) {
    QuantizedTensor q = quantize_symmetric(weights.tensor(name));
    m.params.weights[name] = {q.scale, q.zero_point};
    m.weights.entries.emplace(name, std::move(q));
  }

  const Network net(weights.graph(), m.weights);
  check_geometry(net, calibration);
  const std::size_t n_buffers = net.graph().layers.size();  // input plus all but the softmax output
  std::vector<float> lo(n_buffers, std::numeric_limits<float>::max());
  std::vector<float> hi(n_buffers, std::numeric_limits<float>::lowest());
  for (std::size_t i = 0; i < calibration.n_trials; ++i) {
    Tensor x = calibration.trial(i);
    if (stats) x = apply_standardization(x, *stats);
    net.forward(x, [&](std::size_t b, Tensor& t) {
      if (b >= n_buffers) return;
      const auto [mn, mx] = std::minmax_element(t.data().begin(), t.data().end());
      lo[b] = std::min(lo[b], *mn);
      hi[b] = std::max(hi[b], *mx);
    });
  }
  for (std::size_t b = 0; b < n_buffers; ++b) m.params.activations.push_back(activation_params(lo[b], hi[b]));
  return m;
}

// Hook that snaps each calibrated buffer onto its 8-bit lattice.
inline BufferHook activation_quantizer(const QuantParams& params) {
  return [&params](std::size_t b, Tensor& t) {
    if (b >= params.activations.size()) return;
    const QuantParam q = params.activations[b];
    for (auto& v : t.data()) v = fake_quantize(v, q);
  };
}

inline Tensor forward_quantized(const LayerGraph& graph, const QuantizedModel& model, const Tensor& trial) {
  return Network(graph, model.weights).forward(trial, activation_quantizer(model.params));
}

inline std::vector<Prediction> predict_batch_quantized(const QuantizedModel& model, const TrialSet& trials,
                                                       const std::optional<StandardizationStats>& stats = std::nullopt,
                                                       unsigned threads = default_threads()) {
  return predict_batch(Network(model.weights.graph(), model.weights), trials, stats, threads,
                       activation_quantizer(model.params));
}

}  // namespace eegtcnet
