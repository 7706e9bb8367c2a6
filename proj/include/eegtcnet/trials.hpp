#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "byteio.hpp"
#include "tensor.hpp"

namespace eegtcnet {

// Labeled EEG trials, stored trial-major, then channel, then time.
struct TrialSet {
  std::size_t n_trials = 0;
  std::size_t C = 0;
  std::size_t T = 0;
  float fs = 250.0f;
  int n_classes = 4;
  std::vector<std::uint8_t> labels;
  std::vector<float> data;

  std::size_t trial_size() const noexcept { return C * T; }

  Tensor trial(std::size_t i) const {
    if (i >= n_trials) throw std::out_of_range("trial index " + std::to_string(i));
    const auto first = data.begin() + static_cast<std::ptrdiff_t>(i * trial_size());
    return Tensor({C, T}, std::vector<float>(first, first + static_cast<std::ptrdiff_t>(trial_size())));
  }

  void push_back(const Tensor& trial, std::uint8_t label) {
    if (trial.dims() != Dims{C, T}) {
      throw ShapeError("trial dims " + dims_to_string(trial.dims()) + " do not match (" + std::to_string(C) + "," +
                       std::to_string(T) + ")");
    }
    data.insert(data.end(), trial.values().begin(), trial.values().end());
    labels.push_back(label);
    ++n_trials;
  }

  // Throws FormatError(invalid_value) on the first broken invariant.
  void validate() const {
    if (labels.size() != n_trials || data.size() != n_trials * trial_size()) {
      throw FormatError(FormatErrc::invalid_value, "trial set sizes are inconsistent");
    }
    if (!(fs > 0.0f) || !std::isfinite(fs)) throw FormatError(FormatErrc::invalid_value, "sampling rate must be > 0");
    if (n_classes < 1 || n_classes > 255) throw FormatError(FormatErrc::invalid_value, "n_classes out of range");
    for (std::size_t i = 0; i < n_trials; ++i) {
      if (labels[i] >= n_classes) {
        throw FormatError(FormatErrc::invalid_value, "trial " + std::to_string(i) + " label " +
                                                         std::to_string(labels[i]) + " >= n_classes " +
                                                         std::to_string(n_classes));
      }
    }
    for (float v : data) {
      if (!std::isfinite(v)) throw FormatError(FormatErrc::invalid_value, "trial data holds a non-finite value");
    }
  }

  friend bool operator==(const TrialSet&, const TrialSet&) = default;
};

namespace detail {
inline constexpr char kTrialMagic[] = "ETRL";
inline constexpr std::uint32_t kTrialVersion = 1;
}  // namespace detail

inline Bytes save_trials(const TrialSet& s) {
  s.validate();
  if (s.C > 0xFFFF) throw FormatError(FormatErrc::invalid_value, "channel count exceeds u16");
  ByteWriter w;
  w.raw(detail::kTrialMagic);
  w.u32(detail::kTrialVersion);
  w.u32(static_cast<std::uint32_t>(s.n_trials));
  w.u16(static_cast<std::uint16_t>(s.C));
  w.u32(static_cast<std::uint32_t>(s.T));
  w.f32(s.fs);
  w.u8(static_cast<std::uint8_t>(s.n_classes));
  for (auto l : s.labels) w.u8(l);
  for (float v : s.data) w.f32(v);
  return std::move(w).take();
}

inline TrialSet load_trials(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "ETRL");
  if (r.remaining() < 4 || r.str(4, "magic") != detail::kTrialMagic) {
    throw FormatError(FormatErrc::bad_magic, "not an ETRL trial container");
  }
  const std::uint32_t version = r.u32();
  if (version != detail::kTrialVersion) {
    throw FormatError(FormatErrc::version_mismatch,
                      "ETRL version " + std::to_string(version) + ", expected " + std::to_string(detail::kTrialVersion));
  }
  TrialSet s;
  s.n_trials = r.u32();
  s.C = r.u16();
  s.T = r.u32();
  s.fs = r.f32();
  s.n_classes = r.u8();
  r.need(s.n_trials, "labels");
  s.labels.resize(s.n_trials);
  for (auto& l : s.labels) l = r.u8();
  const std::size_t n = s.n_trials * s.C * s.T;
  r.need(n * 4, "trial data");
  s.data.resize(n);
  r.f32s(s.data, "trial data");
  r.expect_end();
  s.validate();
  return s;
}

// Per-channel statistics fitted on training data only.
struct StandardizationStats {
  std::vector<double> mean;
  std::vector<double> std;

  friend bool operator==(const StandardizationStats&, const StandardizationStats&) = default;
};

inline constexpr double kStdFloor = 1e-8;

// Population mean and standard deviation per channel over all trials and samples.
inline StandardizationStats fit_standardization(const TrialSet& train) {
  if (train.n_trials == 0 || train.T == 0) throw std::invalid_argument("cannot fit standardization on an empty trial set");
  StandardizationStats st;
  st.mean.assign(train.C, 0.0);
  st.std.assign(train.C, 0.0);
  const double count = static_cast<double>(train.n_trials * train.T);
  for (std::size_t c = 0; c < train.C; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < train.n_trials; ++i) {
      const float* row = train.data.data() + (i * train.C + c) * train.T;
      for (std::size_t t = 0; t < train.T; ++t) sum += row[t];
    }
    const double mu = sum / count;
    double ss = 0.0;
    for (std::size_t i = 0; i < train.n_trials; ++i) {
      const float* row = train.data.data() + (i * train.C + c) * train.T;
      for (std::size_t t = 0; t < train.T; ++t) ss += (row[t] - mu) * (row[t] - mu);
    }
    st.mean[c] = mu;
    st.std[c] = std::max(std::sqrt(ss / count), kStdFloor);
  }
  return st;
}

// (C,T) trial -> (x - mean) / std per channel.
inline Tensor apply_standardization(const Tensor& x, const StandardizationStats& st) {
  if (x.rank() != 2 || x.dim(0) != st.mean.size() || st.std.size() != st.mean.size()) {
    throw ShapeError("standardization stats for " + std::to_string(st.mean.size()) + " channels do not fit trial " +
                     dims_to_string(x.dims()));
  }
  const std::size_t C = x.dim(0), T = x.dim(1);
  Tensor y(x.dims());
  for (std::size_t c = 0; c < C; ++c) {
    const double sd = std::max(st.std[c], kStdFloor);
    for (std::size_t t = 0; t < T; ++t) y.at(c, t) = static_cast<float>((x.at(c, t) - st.mean[c]) / sd);
  }
  return y;
}

inline TrialSet apply_standardization(const TrialSet& s, const StandardizationStats& st) {
  TrialSet out = s;
  out.data.clear();
  for (std::size_t i = 0; i < s.n_trials; ++i) {
    const Tensor y = apply_standardization(s.trial(i), st);
    out.data.insert(out.data.end(), y.values().begin(), y.values().end());
  }
  return out;
}

inline nlohmann::json to_json(const StandardizationStats& st) { return {{"mean", st.mean}, {"std", st.std}}; }

inline StandardizationStats stats_from_json(const nlohmann::json& j) {
  StandardizationStats st;
  st.mean = j.at("mean").get<std::vector<double>>();
  st.std = j.at("std").get<std::vector<double>>();
  if (st.mean.size() != st.std.size() || st.mean.empty()) {
    throw std::invalid_argument("standardization stats need equal, non-empty mean and std arrays");
  }
  for (double s : st.std) {
    if (!(s > 0.0)) throw std::invalid_argument("standardization std must be > 0");
  }
  return st;
}

struct WindowError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

inline constexpr float kTrialRate = 250.0f;
inline constexpr std::size_t kWindowSamples = 1125;

// Cue-locked window from 0.5 s before the cue to 4.0 s after it: 1125 samples at 250 Hz.
inline Tensor extract_window(const Tensor& raw, std::size_t cue_sample, float fs) {
  if (fs != kTrialRate) {
    throw std::invalid_argument("sampling rate " + std::to_string(fs) + " Hz; recordings must already be at 250 Hz");
  }
  if (raw.rank() != 2) throw ShapeError("recording must be (channels, samples), got " + dims_to_string(raw.dims()));
  const std::size_t pre = 125;   // 0.5 s
  const std::size_t post = 1000; // 4.0 s
  const std::size_t C = raw.dim(0), n = raw.dim(1);
  if (cue_sample < pre || cue_sample + post > n) {
    throw WindowError("window around cue " + std::to_string(cue_sample) + " leaves the recording of " +
                      std::to_string(n) + " samples");
  }
  const std::size_t start = cue_sample - pre;
  Tensor out({C, kWindowSamples});
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t t = 0; t < kWindowSamples; ++t) out.at(c, t) = raw.at(c, start + t);
  }
  return out;
}

}  // namespace eegtcnet
