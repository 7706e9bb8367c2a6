#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "byteio.hpp"
#include "graph.hpp"
#include "hyperparams.hpp"
#include "tensor.hpp"

namespace eegtcnet {

// 8-bit codes with an affine mapping back to reals: v = scale * (code - zero_point).
struct QuantizedTensor {
  Dims dims;
  std::vector<std::int8_t> codes;
  float scale = 1.0f;
  std::int32_t zero_point = 0;

  Tensor dequantize() const {
    std::vector<float> v(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
      v[i] = scale * static_cast<float>(static_cast<std::int32_t>(codes[i]) - zero_point);
    }
    return Tensor(dims, std::move(v));
  }

  friend bool operator==(const QuantizedTensor&, const QuantizedTensor&) = default;
};

enum class DType : std::uint8_t { real32 = 0, int8 = 1 };

using WeightEntry = std::variant<Tensor, QuantizedTensor>;

// Named parameter tensors for one network, keyed by canonical name.
struct WeightStore {
  Family family = Family::eeg_tcnet;
  HyperParams hp;
  std::map<std::string, WeightEntry> entries;

  LayerGraph graph() const { return build_graph(hp, family); }

  bool contains(const std::string& name) const { return entries.count(name) != 0; }

  // Real-valued view of a parameter; quantized entries are dequantized.
  Tensor tensor(const std::string& name) const {
    auto it = entries.find(name);
    if (it == entries.end()) throw FormatError(FormatErrc::missing_parameter, name);
    if (const auto* t = std::get_if<Tensor>(&it->second)) return *t;
    return std::get<QuantizedTensor>(it->second).dequantize();
  }

  bool is_quantized() const {
    for (const auto& [_, e] : entries) {
      if (std::holds_alternative<QuantizedTensor>(e)) return true;
    }
    return false;
  }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& [_, e] : entries) n += eegtcnet::element_count(dims_of(e));
    return n;
  }

  static const Dims& dims_of(const WeightEntry& e) {
    if (const auto* t = std::get_if<Tensor>(&e)) return t->dims();
    return std::get<QuantizedTensor>(e).dims;
  }

  WeightStore dequantized() const {
    WeightStore out{family, hp, {}};
    for (const auto& [name, _] : entries) out.entries.emplace(name, tensor(name));
    return out;
  }

  friend bool operator==(const WeightStore&, const WeightStore&) = default;
};

// Throws FormatError when the name set or any tensor shape departs from the graph.
inline void check_weights(const WeightStore& store, const LayerGraph& g) {
  std::set<std::string> expected;
  for (const auto& p : canonical_params(g)) {
    expected.insert(p.name);
    auto it = store.entries.find(p.name);
    if (it == store.entries.end()) throw FormatError(FormatErrc::missing_parameter, p.name);
    const Dims& have = WeightStore::dims_of(it->second);
    if (have != p.dims) {
      throw FormatError(FormatErrc::dims_mismatch,
                        p.name + " has dims " + dims_to_string(have) + ", expected " + dims_to_string(p.dims));
    }
  }
  for (const auto& [name, _] : store.entries) {
    if (!expected.count(name)) throw FormatError(FormatErrc::unknown_tensor, name);
  }
}

// He-uniform convolution/dense kernels, small biases and plausible
// BatchNorm statistics. Deterministic for a given seed.
inline WeightStore random_weights(const HyperParams& hp, Family family, std::uint64_t seed) {
  const LayerGraph g = build_graph(hp, family);
  WeightStore store{family, hp, {}};
  std::mt19937_64 rng(seed);
  auto fill = [&](const Dims& dims, float lo, float hi) {
    std::uniform_real_distribution<float> dist(lo, hi);
    Tensor t(dims);
    for (auto& v : t.data()) v = dist(rng);
    return t;
  };
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    for (const auto& p : layer_params(g, i)) {
      const std::string name = param_name(i, p.role);
      Tensor t;
      if (p.role == "gamma") t = fill(p.dims, 0.5f, 1.5f);
      else if (p.role == "beta" || p.role == "mean" || p.role == "bias") t = fill(p.dims, -0.1f, 0.1f);
      else if (p.role == "var") t = fill(p.dims, 0.5f, 1.5f);
      else {
        // fan-in: every axis but the output one
        const std::size_t fan_in = std::max<std::size_t>(1, eegtcnet::element_count(p.dims) / p.dims[0]);
        const float limit = std::sqrt(6.0f / static_cast<float>(fan_in));
        t = fill(p.dims, -limit, limit);
      }
      store.entries.emplace(name, std::move(t));
    }
  }
  return store;
}

namespace detail {

inline constexpr char kWeightMagic[] = "ETCW";
inline constexpr std::uint32_t kWeightVersion = 1;

inline nlohmann::json weight_metadata(const WeightStore& store, const std::vector<std::string>& order) {
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& name : order) {
    const auto& e = store.entries.at(name);
    manifest.push_back({{"name", name},
                        {"dtype", std::holds_alternative<Tensor>(e) ? 0 : 1},
                        {"dims", WeightStore::dims_of(e)}});
  }
  return {{"family", std::string(to_string(store.family))},
          {"hyperparams", to_json(store.hp)},
          {"tensors", std::move(manifest)}};
}

// Serializes entries in the given order without checking them against a graph.
inline Bytes write_weight_container(const WeightStore& store, const std::vector<std::string>& order) {
  ByteWriter w;
  w.raw(kWeightMagic);
  w.u32(kWeightVersion);
  const std::string meta = weight_metadata(store, order).dump();
  w.u32(static_cast<std::uint32_t>(meta.size()));
  w.raw(meta);
  w.u32(static_cast<std::uint32_t>(order.size()));
  for (const auto& name : order) {
    const auto& e = store.entries.at(name);
    w.u16(static_cast<std::uint16_t>(name.size()));
    w.raw(name);
    const Dims& dims = WeightStore::dims_of(e);
    const bool q = std::holds_alternative<QuantizedTensor>(e);
    w.u8(static_cast<std::uint8_t>(q ? DType::int8 : DType::real32));
    w.u8(static_cast<std::uint8_t>(dims.size()));
    for (auto d : dims) w.u32(static_cast<std::uint32_t>(d));
    if (q) {
      const auto& qt = std::get<QuantizedTensor>(e);
      w.i8s(qt.codes);
      w.f32(qt.scale);
      w.i32(qt.zero_point);
    } else {
      for (float v : std::get<Tensor>(e).data()) w.f32(v);
    }
  }
  return std::move(w).take();
}

}  // namespace detail

inline std::vector<std::string> canonical_order(const LayerGraph& g) {
  std::vector<std::string> names;
  for (const auto& p : canonical_params(g)) names.push_back(p.name);
  return names;
}

// ETCW container bytes. Tensors are written in canonical layer order.
inline Bytes save_weights(const WeightStore& store) {
  const LayerGraph g = store.graph();
  check_weights(store, g);
  return detail::write_weight_container(store, canonical_order(g));
}

inline WeightStore load_weights(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "ETCW");
  if (r.remaining() < 4 || r.str(4, "magic") != detail::kWeightMagic) {
    throw FormatError(FormatErrc::bad_magic, "not an ETCW weight container");
  }
  const std::uint32_t version = r.u32();
  if (version != detail::kWeightVersion) {
    throw FormatError(FormatErrc::version_mismatch,
                      "ETCW version " + std::to_string(version) + ", expected " + std::to_string(detail::kWeightVersion));
  }
  const std::uint32_t meta_len = r.u32();
  const std::string meta_text = r.str(meta_len, "metadata");
  WeightStore store;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_text);
    store.family = parse_family(meta.at("family").get<std::string>());
    store.hp = hyperparams_from_json(meta.at("hyperparams"));
    if (!meta.at("tensors").is_array()) throw ConfigError("tensors must be an array");
  } catch (const std::exception& e) {
    throw FormatError(FormatErrc::bad_metadata, e.what());
  }

  const std::uint32_t count = r.u32();
  nlohmann::json seen = nlohmann::json::array();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint16_t name_len = r.u16();
    std::string name = r.str(name_len, "tensor name");
    const std::uint8_t dtype = r.u8();
    if (dtype > 1) throw FormatError(FormatErrc::bad_dtype, name + " has dtype code " + std::to_string(dtype));
    const std::uint8_t ndim = r.u8();
    if (ndim < 1 || ndim > 4) throw FormatError(FormatErrc::dims_mismatch, name + " has rank " + std::to_string(ndim));
    Dims dims(ndim);
    for (auto& d : dims) d = r.u32();
    const std::size_t n = element_count(dims);
    if (store.entries.count(name)) throw FormatError(FormatErrc::duplicate_tensor, name);
    if (dtype == 0) {
      r.need(n * 4, "tensor payload");
      std::vector<float> data(n);
      r.f32s(data, "tensor payload");
      for (float v : data) {
        if (!std::isfinite(v)) throw FormatError(FormatErrc::invalid_value, name + " holds a non-finite value");
      }
      store.entries.emplace(name, Tensor(dims, std::move(data)));
    } else {
      QuantizedTensor q;
      q.dims = dims;
      q.codes.resize(n);
      r.i8s(q.codes, "quantized payload");
      q.scale = r.f32();
      q.zero_point = r.i32();
      if (!(q.scale > 0.0f) || !std::isfinite(q.scale) || q.zero_point < -128 || q.zero_point > 127) {
        throw FormatError(FormatErrc::invalid_value, name + " has an invalid quantization scale or zero-point");
      }
      store.entries.emplace(name, std::move(q));
    }
    seen.push_back({{"name", name}, {"dtype", dtype}, {"dims", dims}});
  }
  r.expect_end();

  if (meta.at("tensors") != seen) {
    throw FormatError(FormatErrc::manifest_mismatch, "metadata manifest does not describe the stored tensors");
  }
  LayerGraph g;
  try {
    g = store.graph();
  } catch (const std::exception& e) {
    throw FormatError(FormatErrc::bad_metadata, std::string("hyperparameters do not form a valid graph: ") + e.what());
  }
  check_weights(store, g);
  return store;
}

}  // namespace eegtcnet
