#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "graph.hpp"

namespace eegtcnet {

struct LayerCost {
  std::string name;  // "input" or L<index>
  LayerKind kind = LayerKind::Input;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::uint64_t output_bytes = 0;
  Dims output_shape;
};

struct CostReport {
  Family family = Family::eeg_tcnet;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
  std::uint64_t peak_memory_bytes = 0;
  std::uint64_t rfs = 0;  // 0 for graphs without a TCN
  std::uint64_t bytes_per_element = 1;
  std::vector<LayerCost> per_layer;  // first row is the network input
};

namespace detail {

inline void require_valid(const LayerGraph& g) {
  const auto v = validate(g);
  if (!v.ok()) {
    std::string msg = "graph failed validation:";
    for (const auto& d : v.diagnostics) msg += "\n  " + d;
    throw GraphError(msg);
  }
}

inline std::uint64_t u(std::size_t v) { return static_cast<std::uint64_t>(v); }

inline std::uint64_t layer_param_count(const LayerGraph& g, std::size_t i) {
  const LayerSpec& l = g.layers[i];
  const Dims& in = g.shape_of(l.inputs.front());
  const std::uint64_t cin = u(in[0]);
  const std::uint64_t cout = static_cast<std::uint64_t>(l.filters);
  const std::uint64_t kh = static_cast<std::uint64_t>(l.kernel_h);
  const std::uint64_t kw = static_cast<std::uint64_t>(l.kernel_w);
  switch (l.kind) {
    case LayerKind::Conv2DSame: return kh * kw * cin * cout;
    case LayerKind::DepthwiseConv2D: return kh * kw * cin * static_cast<std::uint64_t>(l.depth_multiplier);
    case LayerKind::SeparableConv2D: return kh * kw * cin + cin * cout;
    case LayerKind::BatchNorm: return 4 * cin;
    case LayerKind::CausalConv1D: return kw * cin * cout + cout;
    case LayerKind::PointwiseConv1D: return cin * cout + cout;
    case LayerKind::Dense: return cin * cout + cout;
    default: return 0;
  }
}

inline std::uint64_t layer_mac_count(const LayerGraph& g, std::size_t i) {
  const LayerSpec& l = g.layers[i];
  const Dims& in = g.shape_of(l.inputs.front());
  const Dims& out = l.out_shape;
  const std::uint64_t cin = u(in[0]);
  const std::uint64_t kh = static_cast<std::uint64_t>(l.kernel_h);
  const std::uint64_t kw = static_cast<std::uint64_t>(l.kernel_w);
  switch (l.kind) {
    case LayerKind::Conv2DSame:
      return kh * kw * cin * u(out[0]) * u(out[1]) * u(out[2]);
    case LayerKind::DepthwiseConv2D:
      return kh * kw * cin * static_cast<std::uint64_t>(l.depth_multiplier) * u(out[1]) * u(out[2]);
    case LayerKind::SeparableConv2D:
      return (kh * kw + u(out[0])) * cin * u(out[1]) * u(out[2]);
    case LayerKind::CausalConv1D:
    case LayerKind::PointwiseConv1D:
      return kw * cin * u(out[0]) * u(out[1]);
    case LayerKind::Dense:
      return cin * u(out[0]);
    default:
      return 0;
  }
}

}  // namespace detail

// Trainable plus BatchNorm moving statistics (4 values per channel).
inline std::uint64_t count_params(const LayerGraph& g) {
  detail::require_valid(g);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < g.layers.size(); ++i) total += detail::layer_param_count(g, i);
  return total;
}

// Multiply-accumulates of the convolution and dense layers; bias adds,
// normalisation, activations and pooling are free.
inline std::uint64_t count_macs(const LayerGraph& g) {
  detail::require_valid(g);
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < g.layers.size(); ++i) total += detail::layer_mac_count(g, i);
  return total;
}

// Largest sum of two consecutive feature-map buffers under layer-by-layer
// execution; buffer 0 is the network input and every layer owns its output.
inline std::uint64_t peak_memory_bytes(const LayerGraph& g, std::uint64_t bytes_per_element = 1) {
  detail::require_valid(g);
  std::uint64_t prev = detail::u(element_count(g.input_shape)) * bytes_per_element;
  std::uint64_t peak = prev;
  for (const auto& l : g.layers) {
    const std::uint64_t cur = detail::u(element_count(l.out_shape)) * bytes_per_element;
    peak = std::max(peak, prev + cur);
    prev = cur;
  }
  return peak;
}

inline CostReport analyze(const LayerGraph& g, std::uint64_t bytes_per_element = 1) {
  CostReport r;
  r.family = g.family;
  r.bytes_per_element = bytes_per_element;
  r.params = count_params(g);
  r.macs = count_macs(g);
  r.peak_memory_bytes = peak_memory_bytes(g, bytes_per_element);
  if (g.family == Family::eeg_tcnet) {
    r.rfs = receptive_field_size(static_cast<std::uint64_t>(g.hp.K_T), static_cast<unsigned>(g.hp.L));
  }
  r.per_layer.push_back({"input", LayerKind::Input, 0, 0,
                         detail::u(element_count(g.input_shape)) * bytes_per_element, g.input_shape});
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    r.per_layer.push_back({layer_name(i), g.layers[i].kind, detail::layer_param_count(g, i),
                           detail::layer_mac_count(g, i),
                           detail::u(element_count(g.layers[i].out_shape)) * bytes_per_element,
                           g.layers[i].out_shape});
  }
  return r;
}

inline CostReport report(const HyperParams& hp, Family family, std::uint64_t bytes_per_element = 1) {
  return analyze(build_graph(hp, family), bytes_per_element);
}

// Per-subject configurations and parameter counts as printed in the
// published hyperparameter table, for cross-checking the counters.
struct PublishedConfig {
  Family family;
  int subject;
  HyperParams hp;
  std::uint64_t params;
};

inline std::vector<PublishedConfig> published_configs() {
  auto tcn = [](int kt, int l, int ft, int f1, int ke, double pt, double pe, bool s) {
    HyperParams hp;
    hp.K_T = kt;
    hp.L = l;
    hp.F_T = ft;
    hp.F1 = f1;
    hp.F2 = 2 * f1;
    hp.K_E = ke;
    hp.p_t = pt;
    hp.p_e = pe;
    hp.standardize = s;
    return hp;
  };
  auto net = [](int f1, int ke, double pe) {
    HyperParams hp;
    hp.F1 = f1;
    hp.F2 = 2 * f1;
    hp.K_E = ke;
    hp.p_e = pe;
    hp.standardize = false;
    return hp;
  };
  const auto T = Family::eeg_tcnet;
  const auto E = Family::eegnet;
  return {
      {T, 1, tcn(3, 3, 15, 8, 32, 0.3, 0.2, true), 6144},
      {T, 2, tcn(4, 2, 17, 8, 64, 0.2, 0.2, false), 6793},
      {T, 3, tcn(4, 2, 15, 8, 64, 0.3, 0.2, true), 5815},
      {T, 4, tcn(4, 3, 17, 16, 32, 0.2, 0.1, true), 12171},
      {T, 5, tcn(3, 4, 25, 16, 64, 0.2, 0.2, true), 20526},
      {T, 6, tcn(4, 3, 17, 16, 32, 0.3, 0.1, true), 12171},
      {T, 7, tcn(4, 2, 20, 8, 32, 0.3, 0.1, true), 8184},
      {T, 8, tcn(3, 3, 25, 16, 64, 0.3, 0.2, true), 16526},
      {T, 9, tcn(3, 4, 12, 16, 64, 0.2, 0.2, true), 8176},
      {E, 1, net(32, 128, 0.0), 15620},
      {E, 2, net(32, 128, 0.0), 15620},
      {E, 3, net(8, 64, 0.1), 2628},
      {E, 4, net(16, 32, 0.1), 5252},
      {E, 5, net(32, 32, 0.0), 12548},
      {E, 6, net(32, 64, 0.2), 13572},
      {E, 7, net(32, 32, 0.2), 12548},
      {E, 8, net(32, 32, 0.2), 12548},
      {E, 9, net(8, 64, 0.0), 2628},
  };
}

struct PublishedCheck {
  PublishedConfig config;
  std::uint64_t computed = 0;  // at the printed K_E
  std::int64_t delta = 0;      // computed - published
  // Set when the printed count disagrees and K_E = 32 reproduces it.
  bool matches_with_ke32 = false;
  std::uint64_t computed_ke32 = 0;
};

inline std::vector<PublishedCheck> check_published() {
  std::vector<PublishedCheck> out;
  for (const auto& cfg : published_configs()) {
    PublishedCheck c{cfg};
    c.computed = count_params(build_graph(cfg.hp, cfg.family));
    c.delta = static_cast<std::int64_t>(c.computed) - static_cast<std::int64_t>(cfg.params);
    if (c.delta != 0 && cfg.hp.K_E != 32) {
      HyperParams alt = cfg.hp;
      alt.K_E = 32;
      c.computed_ke32 = count_params(build_graph(alt, cfg.family));
      c.matches_with_ke32 = c.computed_ke32 == cfg.params;
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace eegtcnet
