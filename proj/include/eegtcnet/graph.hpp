#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hyperparams.hpp"
#include "tensor.hpp"

namespace eegtcnet {

struct GraphError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ReceptiveFieldError : GraphError {
  using GraphError::GraphError;
};

enum class LayerKind {
  Input,
  Conv2DSame,
  BatchNorm,
  DepthwiseConv2D,
  EluAct,
  AvgPool2D,
  SeparableConv2D,
  Dropout,
  CausalConv1D,
  PointwiseConv1D,
  Add,
  SliceLastTimestep,
  Flatten,
  Dense,
  SoftmaxAct,
};

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::Input: return "Input";
    case LayerKind::Conv2DSame: return "Conv2DSame";
    case LayerKind::BatchNorm: return "BatchNorm";
    case LayerKind::DepthwiseConv2D: return "DepthwiseConv2D";
    case LayerKind::EluAct: return "EluAct";
    case LayerKind::AvgPool2D: return "AvgPool2D";
    case LayerKind::SeparableConv2D: return "SeparableConv2D";
    case LayerKind::Dropout: return "Dropout";
    case LayerKind::CausalConv1D: return "CausalConv1D";
    case LayerKind::PointwiseConv1D: return "PointwiseConv1D";
    case LayerKind::Add: return "Add";
    case LayerKind::SliceLastTimestep: return "SliceLastTimestep";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::Dense: return "Dense";
    case LayerKind::SoftmaxAct: return "SoftmaxAct";
  }
  return "?";
}

// Index used for the network input in LayerSpec::inputs.
inline constexpr int kGraphInput = -1;

struct ParamSpec {
  std::string role;
  Dims dims;
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::Input;
  int filters = 0;           // output depth (conv), units (dense)
  int kernel_h = 1;
  int kernel_w = 1;
  int depth_multiplier = 1;
  int pool = 1;
  int dilation = 1;
  double rate = 0.0;         // dropout probability
  std::vector<int> inputs{};   // producer layer indices, kGraphInput for the network input
  Dims out_shape{};

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Ordered layer list with residual edges. The network input is not a layer;
// layer indices (and thus parameter names) start at the first real layer.
struct LayerGraph {
  Family family = Family::eeg_tcnet;
  HyperParams hp;
  Dims input_shape;
  std::vector<LayerSpec> layers;
  std::vector<std::pair<int, int>> residual_edges;  // (block input layer, Add layer)

  const Dims& shape_of(int index) const {
    return index == kGraphInput ? input_shape : layers.at(static_cast<std::size_t>(index)).out_shape;
  }
  const Dims& output_shape() const { return layers.empty() ? input_shape : layers.back().out_shape; }

  friend bool operator==(const LayerGraph&, const LayerGraph&) = default;
};

inline std::string layer_name(std::size_t index) {
  return (index < 10 ? "L0" : "L") + std::to_string(index);
}

inline std::string param_name(std::size_t index, std::string_view role) {
  return layer_name(index) + "." + std::string(role);
}

// 1 + 2 (K_T - 1)(2^L - 1)
inline std::uint64_t receptive_field_size(std::uint64_t kernel, unsigned blocks) {
  if (kernel < 1) throw std::invalid_argument("kernel length must be >= 1");
  if (blocks > 62) throw std::invalid_argument("block count too large");
  return 1 + 2 * (kernel - 1) * ((std::uint64_t{1} << blocks) - 1);
}

namespace detail {

// Drops a unit height axis so (D,1,W) and (D,W) compare equal as sequences.
inline Dims as_sequence(const Dims& d) {
  if (d.size() == 3 && d[1] == 1) return {d[0], d[2]};
  return d;
}

inline std::string shape_msg(std::size_t index, const LayerSpec& l, const std::string& what) {
  return layer_name(index) + " (" + std::string(to_string(l.kind)) + "): " + what;
}

}  // namespace detail

// Output shape of one layer given its input shapes. Throws ShapeError.
inline Dims infer_layer_shape(std::size_t index, const LayerSpec& l, const std::vector<Dims>& in) {
  using detail::shape_msg;
  auto need_inputs = [&](std::size_t n) {
    if (in.size() != n) {
      throw ShapeError(shape_msg(index, l, "expected " + std::to_string(n) + " input(s), got " +
                                               std::to_string(in.size())));
    }
  };
  auto need_rank = [&](const Dims& d, std::size_t r) {
    if (d.size() != r) {
      throw ShapeError(shape_msg(index, l, "expected rank-" + std::to_string(r) + " input, got " +
                                               dims_to_string(d)));
    }
  };
  auto sequence_input = [&](const Dims& d) {
    Dims s = detail::as_sequence(d);
    if (s.size() != 2) throw ShapeError(shape_msg(index, l, "expected (depth,width) input, got " + dims_to_string(d)));
    return s;
  };
  auto positive = [&](int v, const char* what) {
    if (v < 1) throw ShapeError(shape_msg(index, l, std::string(what) + " must be >= 1"));
  };

  switch (l.kind) {
    case LayerKind::Input:
      throw ShapeError(shape_msg(index, l, "Input is implicit and cannot appear in the layer list"));
    case LayerKind::Conv2DSame: {
      need_inputs(1);
      need_rank(in[0], 3);
      positive(l.filters, "filters");
      positive(l.kernel_h, "kernel height");
      positive(l.kernel_w, "kernel width");
      return {static_cast<std::size_t>(l.filters), in[0][1], in[0][2]};
    }
    case LayerKind::DepthwiseConv2D: {
      need_inputs(1);
      need_rank(in[0], 3);
      positive(l.depth_multiplier, "depth multiplier");
      const auto kh = static_cast<std::size_t>(l.kernel_h);
      const auto kw = static_cast<std::size_t>(l.kernel_w);
      if (kh < 1 || kw < 1 || kh > in[0][1] || kw > in[0][2]) {
        throw ShapeError(shape_msg(index, l, "kernel (" + std::to_string(kh) + "," + std::to_string(kw) +
                                                 ") does not fit input " + dims_to_string(in[0])));
      }
      return {in[0][0] * static_cast<std::size_t>(l.depth_multiplier), in[0][1] - kh + 1, in[0][2] - kw + 1};
    }
    case LayerKind::SeparableConv2D: {
      need_inputs(1);
      need_rank(in[0], 3);
      positive(l.filters, "filters");
      positive(l.kernel_w, "kernel width");
      if (l.kernel_h != 1) throw ShapeError(shape_msg(index, l, "separable kernel height must be 1"));
      return {static_cast<std::size_t>(l.filters), in[0][1], in[0][2]};
    }
    case LayerKind::BatchNorm:
    case LayerKind::EluAct:
    case LayerKind::Dropout:
      need_inputs(1);
      return in[0];
    case LayerKind::AvgPool2D: {
      need_inputs(1);
      need_rank(in[0], 3);
      positive(l.pool, "pool width");
      const auto k = static_cast<std::size_t>(l.pool);
      if (in[0][2] < k) {
        throw ShapeError(shape_msg(index, l, "width " + std::to_string(in[0][2]) + " smaller than pool " +
                                                 std::to_string(k)));
      }
      return {in[0][0], in[0][1], in[0][2] / k};
    }
    case LayerKind::CausalConv1D:
    case LayerKind::PointwiseConv1D: {
      need_inputs(1);
      const Dims s = sequence_input(in[0]);
      positive(l.filters, "filters");
      positive(l.kernel_w, "kernel");
      positive(l.dilation, "dilation");
      if (l.kind == LayerKind::PointwiseConv1D && l.kernel_w != 1) {
        throw ShapeError(shape_msg(index, l, "pointwise kernel must be 1"));
      }
      return {static_cast<std::size_t>(l.filters), s[1]};
    }
    case LayerKind::Add: {
      need_inputs(2);
      const Dims a = detail::as_sequence(in[0]);
      const Dims b = detail::as_sequence(in[1]);
      if (a != b) {
        throw ShapeError(shape_msg(index, l, "input shapes differ " + dims_to_string(in[0]) + " vs " +
                                                 dims_to_string(in[1])));
      }
      return a;
    }
    case LayerKind::SliceLastTimestep: {
      need_inputs(1);
      const Dims s = sequence_input(in[0]);
      if (s[1] < 1) throw ShapeError(shape_msg(index, l, "empty sequence"));
      return {s[0]};
    }
    case LayerKind::Flatten:
      need_inputs(1);
      return {element_count(in[0])};
    case LayerKind::Dense:
      need_inputs(1);
      need_rank(in[0], 1);
      positive(l.filters, "units");
      return {static_cast<std::size_t>(l.filters)};
    case LayerKind::SoftmaxAct:
      need_inputs(1);
      need_rank(in[0], 1);
      return in[0];
  }
  throw ShapeError(shape_msg(index, l, "unknown layer kind"));
}

// Recomputes every out_shape in place. Throws ShapeError/GraphError.
inline void infer_shapes(LayerGraph& g) {
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    auto& l = g.layers[i];
    std::vector<Dims> in;
    for (int src : l.inputs) {
      if (src != kGraphInput && (src < 0 || static_cast<std::size_t>(src) >= i)) {
        throw GraphError(layer_name(i) + ": input " + std::to_string(src) + " is not an earlier layer");
      }
      in.push_back(g.shape_of(src));
    }
    l.out_shape = infer_layer_shape(i, l, in);
  }
}

// Parameter tensors owned by a layer, in canonical order.
inline std::vector<ParamSpec> layer_params(const LayerGraph& g, std::size_t index) {
  const LayerSpec& l = g.layers.at(index);
  const Dims& in = g.shape_of(l.inputs.empty() ? kGraphInput : l.inputs.front());
  const auto F = static_cast<std::size_t>(l.filters);
  const auto kh = static_cast<std::size_t>(l.kernel_h);
  const auto kw = static_cast<std::size_t>(l.kernel_w);
  switch (l.kind) {
    case LayerKind::Conv2DSame:
      return {{"weight", {F, in[0], kh, kw}}};
    case LayerKind::DepthwiseConv2D:
      return {{"weight", {in[0], static_cast<std::size_t>(l.depth_multiplier), kh, kw}}};
    case LayerKind::SeparableConv2D:
      return {{"depthwise", {in[0], 1, kh, kw}}, {"pointwise", {F, in[0], 1, 1}}};
    case LayerKind::BatchNorm: {
      const std::size_t c = in[0];
      return {{"gamma", {c}}, {"beta", {c}}, {"mean", {c}}, {"var", {c}}};
    }
    case LayerKind::CausalConv1D:
    case LayerKind::PointwiseConv1D:
      return {{"weight", {F, in[0], kw}}, {"bias", {F}}};
    case LayerKind::Dense:
      return {{"weight", {F, in[0]}}, {"bias", {F}}};
    default:
      return {};
  }
}

struct NamedParam {
  std::string name;
  Dims dims;
};

// Every parameter tensor of the graph, in layer order.
inline std::vector<NamedParam> canonical_params(const LayerGraph& g) {
  std::vector<NamedParam> out;
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    for (auto& p : layer_params(g, i)) out.push_back({param_name(i, p.role), std::move(p.dims)});
  }
  return out;
}

namespace detail {

class GraphBuilder {
 public:
  explicit GraphBuilder(LayerGraph& g) : g_(g) {}

  int add(LayerSpec l) {
    if (l.inputs.empty()) l.inputs = {last_};
    g_.layers.push_back(std::move(l));
    last_ = static_cast<int>(g_.layers.size()) - 1;
    return last_;
  }
  int last() const { return last_; }

 private:
  LayerGraph& g_;
  int last_ = kGraphInput;
};

inline void add_front_end(GraphBuilder& b, const HyperParams& hp) {
  b.add({.kind = LayerKind::Conv2DSame, .filters = hp.F1, .kernel_h = 1, .kernel_w = hp.K_E});
  b.add({.kind = LayerKind::BatchNorm});
  b.add({.kind = LayerKind::DepthwiseConv2D, .kernel_h = hp.C, .kernel_w = 1, .depth_multiplier = 2});
  b.add({.kind = LayerKind::BatchNorm});
  b.add({.kind = LayerKind::EluAct});
  b.add({.kind = LayerKind::AvgPool2D, .pool = 8});
  b.add({.kind = LayerKind::Dropout, .rate = hp.p_e});
  b.add({.kind = LayerKind::SeparableConv2D, .filters = hp.F2, .kernel_h = 1, .kernel_w = 16});
  b.add({.kind = LayerKind::BatchNorm});
  b.add({.kind = LayerKind::EluAct});
  b.add({.kind = LayerKind::AvgPool2D, .pool = 8});
  b.add({.kind = LayerKind::Dropout, .rate = hp.p_e});
}

inline void finish(LayerGraph& g) {
  infer_shapes(g);
  if (g.output_shape() != Dims{static_cast<std::size_t>(g.hp.n_classes)}) {
    throw ShapeError("final output " + dims_to_string(g.output_shape()) + " does not match n_classes");
  }
}

}  // namespace detail

inline LayerGraph build_eeg_tcnet(const HyperParams& hp) {
  hp.validate();
  const auto pooled = static_cast<std::uint64_t>(hp.T / 64);
  const auto rfs = receptive_field_size(static_cast<std::uint64_t>(hp.K_T), static_cast<unsigned>(hp.L));
  if (rfs < pooled) {
    throw ReceptiveFieldError("receptive field " + std::to_string(rfs) + " (K_T=" + std::to_string(hp.K_T) +
                              ", L=" + std::to_string(hp.L) + ") is smaller than the pooled sequence length " +
                              std::to_string(pooled));
  }

  LayerGraph g;
  g.family = Family::eeg_tcnet;
  g.hp = hp;
  g.input_shape = {1, static_cast<std::size_t>(hp.C), static_cast<std::size_t>(hp.T)};
  detail::GraphBuilder b(g);
  detail::add_front_end(b, hp);

  int depth = hp.F2;
  for (int block = 0; block < hp.L; ++block) {
    const int block_in = b.last();
    const int d = 1 << block;
    b.add({.kind = LayerKind::CausalConv1D, .filters = hp.F_T, .kernel_w = hp.K_T, .dilation = d});
    b.add({.kind = LayerKind::BatchNorm});
    b.add({.kind = LayerKind::EluAct});
    b.add({.kind = LayerKind::Dropout, .rate = hp.p_t});
    b.add({.kind = LayerKind::CausalConv1D, .filters = hp.F_T, .kernel_w = hp.K_T, .dilation = d});
    b.add({.kind = LayerKind::BatchNorm});
    b.add({.kind = LayerKind::EluAct});
    const int main_out = b.add({.kind = LayerKind::Dropout, .rate = hp.p_t});
    int skip = block_in;
    if (depth != hp.F_T) {
      skip = b.add({.kind = LayerKind::PointwiseConv1D, .filters = hp.F_T, .inputs = {block_in}});
    }
    const int add = b.add({.kind = LayerKind::Add, .inputs = {main_out, skip}});
    g.residual_edges.emplace_back(block_in, add);
    depth = hp.F_T;
  }
  b.add({.kind = LayerKind::SliceLastTimestep});
  b.add({.kind = LayerKind::Dense, .filters = hp.n_classes});
  b.add({.kind = LayerKind::SoftmaxAct});
  detail::finish(g);
  return g;
}

// EEGNet with (1,8) pooling in both stages; TCN fields of hp are ignored.
inline LayerGraph build_eegnet(const HyperParams& hp) {
  hp.validate();
  LayerGraph g;
  g.family = Family::eegnet;
  g.hp = hp;
  g.input_shape = {1, static_cast<std::size_t>(hp.C), static_cast<std::size_t>(hp.T)};
  detail::GraphBuilder b(g);
  detail::add_front_end(b, hp);
  b.add({.kind = LayerKind::Flatten});
  b.add({.kind = LayerKind::Dense, .filters = hp.n_classes});
  b.add({.kind = LayerKind::SoftmaxAct});
  detail::finish(g);
  return g;
}

inline LayerGraph build_graph(const HyperParams& hp, Family family) {
  return family == Family::eeg_tcnet ? build_eeg_tcnet(hp) : build_eegnet(hp);
}

struct Validation {
  std::vector<std::string> diagnostics;
  bool ok() const noexcept { return diagnostics.empty(); }
  explicit operator bool() const noexcept { return ok(); }
};

// Structural checks: topological order, shape consistency, residual edge
// legality and the dilation schedule 1,2,4,... Never throws.
inline Validation validate(const LayerGraph& g) {
  Validation v;
  auto diag = [&](std::string msg) { v.diagnostics.push_back(std::move(msg)); };
  const auto n = g.layers.size();
  if (n == 0) {
    diag("graph has no layers");
    return v;
  }

  bool topo_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = g.layers[i];
    for (int src : l.inputs) {
      if (src != kGraphInput && (src < 0 || static_cast<std::size_t>(src) >= i)) {
        diag(layer_name(i) + " (" + std::string(to_string(l.kind)) + "): input " + std::to_string(src) +
             " breaks topological order");
        topo_ok = false;
      }
    }
    if (l.kind == LayerKind::Add && l.inputs.size() != 2) {
      diag(layer_name(i) + " (Add): expected exactly two inputs, got " + std::to_string(l.inputs.size()));
      topo_ok = false;
    }
  }
  if (!topo_ok) return v;

  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = g.layers[i];
    std::vector<Dims> in;
    for (int src : l.inputs) in.push_back(g.shape_of(src));
    if (l.kind == LayerKind::Add) {
      const Dims a = detail::as_sequence(in[0]);
      const Dims b = detail::as_sequence(in[1]);
      if (!a.empty() && !b.empty() && a[0] != b[0]) {
        diag(layer_name(i) + " (Add): input depths differ (" + std::to_string(a[0]) + " vs " +
             std::to_string(b[0]) + ") and no projection");
        continue;
      }
    }
    try {
      const Dims expect = infer_layer_shape(i, l, in);
      if (expect != l.out_shape) {
        diag(layer_name(i) + " (" + std::string(to_string(l.kind)) + "): recorded shape " +
             dims_to_string(l.out_shape) + " but inference gives " + dims_to_string(expect));
      }
    } catch (const std::exception& e) {
      diag(e.what());
    }
  }

  for (const auto& [src, add] : g.residual_edges) {
    if (add < 0 || static_cast<std::size_t>(add) >= n || g.layers[add].kind != LayerKind::Add) {
      diag("residual edge (" + std::to_string(src) + "," + std::to_string(add) + ") does not end at an Add layer");
      continue;
    }
    const auto& a = g.layers[add];
    int skip = a.inputs[1];
    if (skip != src) {
      const bool projected = skip >= 0 && g.layers[skip].kind == LayerKind::PointwiseConv1D &&
                             g.layers[skip].inputs == std::vector<int>{src};
      if (!projected) {
        diag(layer_name(add) + " (Add): skip input does not come from block input " + std::to_string(src));
        continue;
      }
    }
    // The main path from the block input to the Add must hold exactly two causal convolutions.
    int convs = 0;
    int cur = a.inputs[0];
    while (cur != src && cur > src) {
      if (g.layers[cur].kind == LayerKind::CausalConv1D) ++convs;
      if (g.layers[cur].inputs.size() != 1) break;
      cur = g.layers[cur].inputs[0];
    }
    if (cur != src || convs != 2) {
      diag(layer_name(add) + " (Add): residual edge from " + std::to_string(src) + " does not span exactly one TCN block");
    }
  }

  std::vector<std::size_t> causal;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.layers[i].kind == LayerKind::CausalConv1D) causal.push_back(i);
  }
  for (std::size_t k = 0; k < causal.size(); ++k) {
    const int d = g.layers[causal[k]].dilation;
    if (d < 1 || (d & (d - 1)) != 0) {
      diag(layer_name(causal[k]) + " (CausalConv1D): non-power-of-two dilation " + std::to_string(d));
      continue;
    }
    const int expected = 1 << (k / 2);
    if (d != expected) {
      diag(layer_name(causal[k]) + " (CausalConv1D): dilation " + std::to_string(d) + " breaks schedule, expected " +
           std::to_string(expected));
    }
  }

  const Dims want{static_cast<std::size_t>(g.hp.n_classes)};
  if (g.layers.back().out_shape != want) {
    diag("final output " + dims_to_string(g.layers.back().out_shape) + " does not equal n_classes " +
         std::to_string(g.hp.n_classes));
  }
  return v;
}

}  // namespace eegtcnet
