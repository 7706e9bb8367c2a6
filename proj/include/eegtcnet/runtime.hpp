#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "graph.hpp"
#include "kernels.hpp"
#include "tensor.hpp"
#include "trials.hpp"
#include "weights.hpp"

namespace eegtcnet {

struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Trial geometry (C,T) does not match what the network was built for.
struct GeometryError : ShapeError {
  GeometryError(std::size_t want_c, std::size_t want_t, std::size_t got_c, std::size_t got_t)
      : ShapeError("expected C=" + std::to_string(want_c) + ", T=" + std::to_string(want_t) + " but found C=" +
                   std::to_string(got_c) + ", T=" + std::to_string(got_t)),
        expected_c(want_c), expected_t(want_t), found_c(got_c), found_t(got_t) {}
  std::size_t expected_c, expected_t, found_c, found_t;
};

// Called on every feature-map buffer right after it is produced. Buffer 0 is
// the network input; buffer i+1 is the output of layer i.
using BufferHook = std::function<void(std::size_t buffer, Tensor&)>;

// A layer graph bound to real-valued parameters, ready to execute.
class Network {
 public:
  Network(LayerGraph graph, const WeightStore& weights) : graph_(std::move(graph)) {
    check_weights(weights, graph_);
    for (const auto& p : canonical_params(graph_)) params_.emplace(p.name, weights.tensor(p.name));
  }

  const LayerGraph& graph() const noexcept { return graph_; }
  std::size_t channels() const noexcept { return graph_.input_shape[1]; }
  std::size_t samples() const noexcept { return graph_.input_shape[2]; }

  // All layer buffers for one (C,T) trial.
  std::vector<Tensor> trace(const Tensor& trial, const BufferHook& hook = {}) const {
    if (trial.rank() != 2 || trial.dim(0) != channels() || trial.dim(1) != samples()) {
      const std::size_t c = trial.rank() >= 1 ? trial.dim(0) : 0;
      const std::size_t t = trial.rank() >= 2 ? trial.dim(1) : 0;
      throw GeometryError(channels(), samples(), c, t);
    }
    std::vector<Tensor> buffers;
    buffers.reserve(graph_.layers.size() + 1);
    buffers.push_back(trial.reshaped(graph_.input_shape));
    if (hook) hook(0, buffers.back());
    for (std::size_t i = 0; i < graph_.layers.size(); ++i) {
      Tensor out = run_layer(i, buffers);
      if (!out.all_finite()) {
        throw NonFiniteError(layer_name(i) + " (" + std::string(to_string(graph_.layers[i].kind)) +
                             ") produced a non-finite value");
      }
      buffers.push_back(std::move(out));
      if (hook) hook(i + 1, buffers.back());
    }
    return buffers;
  }

  // Class probabilities for one (C,T) trial.
  Tensor forward(const Tensor& trial, const BufferHook& hook = {}) const { return trace(trial, hook).back(); }

 private:
  const Tensor& param(std::size_t layer, const char* role) const { return params_.at(param_name(layer, role)); }

  Tensor run_layer(std::size_t i, const std::vector<Tensor>& buffers) const {
    namespace k = kernels;
    const LayerSpec& l = graph_.layers[i];
    auto in = [&](std::size_t slot) -> const Tensor& {
      return buffers[static_cast<std::size_t>(l.inputs.at(slot) + 1)];
    };
    auto as_sequence = [](const Tensor& t) {
      return t.rank() == 3 ? t.reshaped({t.dim(0), t.dim(2)}) : t;
    };
    switch (l.kind) {
      case LayerKind::Conv2DSame: return k::conv2d_same(in(0), param(i, "weight"));
      case LayerKind::DepthwiseConv2D: return k::depthwise_conv2d(in(0), param(i, "weight"));
      case LayerKind::SeparableConv2D:
        return k::separable_conv2d(in(0), param(i, "depthwise"), param(i, "pointwise"));
      case LayerKind::BatchNorm:
        return k::batchnorm_infer(in(0), param(i, "gamma"), param(i, "beta"), param(i, "mean"), param(i, "var"));
      case LayerKind::EluAct: return k::elu(in(0));
      case LayerKind::AvgPool2D: return k::avg_pool(in(0), static_cast<std::size_t>(l.pool));
      case LayerKind::Dropout: return in(0);
      case LayerKind::CausalConv1D:
        return k::causal_conv1d(as_sequence(in(0)), param(i, "weight"), param(i, "bias"),
                                static_cast<std::size_t>(l.dilation));
      case LayerKind::PointwiseConv1D:
        return k::pointwise_conv1d(as_sequence(in(0)), param(i, "weight"), param(i, "bias"));
      case LayerKind::Add: return k::add(as_sequence(in(0)), as_sequence(in(1)));
      case LayerKind::SliceLastTimestep: return k::slice_last_timestep(as_sequence(in(0)));
      case LayerKind::Flatten: return in(0).reshaped({in(0).size()});
      case LayerKind::Dense: return k::dense(in(0), param(i, "weight"), param(i, "bias"));
      case LayerKind::SoftmaxAct: return k::softmax(in(0));
      case LayerKind::Input: break;
    }
    throw GraphError(layer_name(i) + ": cannot execute layer kind " + std::string(to_string(l.kind)));
  }

  LayerGraph graph_;
  std::map<std::string, Tensor> params_;
};

inline Tensor forward(const LayerGraph& graph, const WeightStore& weights, const Tensor& trial) {
  return Network(graph, weights).forward(trial);
}

inline std::size_t argmax(const Tensor& probs) {
  const auto d = probs.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

struct Prediction {
  std::size_t predicted = 0;
  std::vector<float> probabilities;
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the first failure.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

inline void check_geometry(const Network& net, const TrialSet& trials) {
  if (trials.C != net.channels() || trials.T != net.samples()) {
    throw GeometryError(net.channels(), net.samples(), trials.C, trials.T);
  }
}

// Per-trial inference; results are in input order whatever the thread count.
inline std::vector<Prediction> predict_batch(const Network& net, const TrialSet& trials,
                                             const std::optional<StandardizationStats>& stats = std::nullopt,
                                             unsigned threads = default_threads(), const BufferHook& hook = {}) {
  check_geometry(net, trials);
  std::vector<Prediction> out(trials.n_trials);
  parallel_for(trials.n_trials, threads, [&](std::size_t i) {
    Tensor x = trials.trial(i);
    if (stats) x = apply_standardization(x, *stats);
    const Tensor p = net.forward(x, hook);
    out[i] = {argmax(p), p.values()};
  });
  return out;
}

inline std::vector<Prediction> predict_batch(const LayerGraph& graph, const WeightStore& weights,
                                             const TrialSet& trials,
                                             const std::optional<StandardizationStats>& stats = std::nullopt,
                                             unsigned threads = default_threads()) {
  return predict_batch(Network(graph, weights), trials, stats, threads);
}

}  // namespace eegtcnet
