#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "support.hpp"

using namespace eegtcnet;
using namespace testing_support;
namespace naive = eegtcnet::kernels::naive;

namespace {

const LayerGraph& fixed_graph() {
  static const LayerGraph g = build_eeg_tcnet(fixed_hyperparams());
  return g;
}

Tensor seq(const Tensor& t) { return t.rank() == 3 ? t.reshaped({t.dim(0), t.dim(2)}) : t; }

// Executes a graph with the naive kernels only.
std::vector<Tensor> naive_trace(const LayerGraph& g, const WeightStore& w, const Tensor& trial) {
  std::vector<Tensor> buf{trial.reshaped(g.input_shape)};
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const LayerSpec& l = g.layers[i];
    const Tensor& x = buf[static_cast<std::size_t>(l.inputs[0] + 1)];
    auto p = [&](const char* role) { return w.tensor(param_name(i, role)); };
    Tensor y;
    switch (l.kind) {
      case LayerKind::Conv2DSame: y = naive::conv2d_same(x, p("weight")); break;
      case LayerKind::DepthwiseConv2D: y = naive::depthwise_conv2d(x, p("weight")); break;
      case LayerKind::SeparableConv2D: y = naive::separable_conv2d(x, p("depthwise"), p("pointwise")); break;
      case LayerKind::BatchNorm: y = naive::batchnorm_infer(x, p("gamma"), p("beta"), p("mean"), p("var")); break;
      case LayerKind::EluAct: y = naive::elu(x); break;
      case LayerKind::AvgPool2D: y = naive::avg_pool(x, static_cast<std::size_t>(l.pool)); break;
      case LayerKind::Dropout: y = x; break;
      case LayerKind::CausalConv1D:
        y = naive::causal_conv1d(seq(x), p("weight"), p("bias"), static_cast<std::size_t>(l.dilation));
        break;
      case LayerKind::PointwiseConv1D: y = naive::causal_conv1d(seq(x), p("weight"), p("bias"), 1); break;
      case LayerKind::Add: {
        y = seq(x);
        const Tensor other = seq(buf[static_cast<std::size_t>(l.inputs[1] + 1)]);
        for (std::size_t k = 0; k < y.size(); ++k) y[k] += other[k];
        break;
      }
      case LayerKind::SliceLastTimestep: {
        const Tensor s = seq(x);
        y = Tensor({s.dim(0)});
        for (std::size_t c = 0; c < s.dim(0); ++c) y[c] = s.at(c, s.dim(1) - 1);
        break;
      }
      case LayerKind::Flatten: y = x.reshaped({x.size()}); break;
      case LayerKind::Dense: y = naive::dense(x, p("weight"), p("bias")); break;
      case LayerKind::SoftmaxAct: y = naive::softmax(x); break;
      case LayerKind::Input: break;
    }
    buf.push_back(std::move(y));
  }
  return buf;
}

void expect_probabilities(const Tensor& p, std::size_t n) {
  ASSERT_EQ(p.dims(), (Dims{n}));
  double s = 0.0;
  for (float v : p.data()) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
    s += v;
  }
  EXPECT_NEAR(s, 1.0, 1e-6);
}

}  // namespace

TEST(Forward, ConstantNetworkGivesSoftmaxOfBias) {
  WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, 1);
  for (auto& [name, e] : w.entries) {
    Tensor& t = std::get<Tensor>(e);
    const bool keep = name.ends_with(".var") || name.ends_with(".gamma");
    for (auto& v : t.data()) v = keep ? 1.0f : 0.0f;
  }
  std::get<Tensor>(w.entries["L32.bias"])[0] = 1.0f;
  std::mt19937_64 rng(1);
  const Tensor p = forward(fixed_graph(), w, random_tensor(rng, {22, 1125}));
  const double z = std::exp(1.0) + 3.0;
  EXPECT_NEAR(p[0], std::exp(1.0) / z, 1e-6);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_NEAR(p[i], 1.0 / z, 1e-6);
}

TEST(Forward, EqualsComposedNaiveKernels) {
  std::mt19937_64 rng(2);
  for (Family f : {Family::eeg_tcnet, Family::eegnet}) {
    HyperParams hp;
    hp.K_E = f == Family::eegnet ? 64 : 32;
    const LayerGraph g = build_graph(hp, f);
    const WeightStore w = random_weights(hp, f, 5);
    const Tensor x = random_tensor(rng, {22, 1125}, -2.0f, 2.0f);
    const auto fast = Network(g, w).trace(x);
    const auto slow = naive_trace(g, w, x);
    ASSERT_EQ(fast.size(), slow.size());
    for (std::size_t b = 0; b < fast.size(); ++b) {
      EXPECT_LE(max_rel_error(fast[b], slow[b]), 1e-5) << "buffer " << b;
    }
  }
}

TEST(Forward, ProbabilityContract) {
  std::mt19937_64 rng(3);
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, seed);
    const Network net(fixed_graph(), w);
    for (int rep = 0; rep < 3; ++rep) expect_probabilities(net.forward(random_tensor(rng, {22, 1125}, -3, 3)), 4);
  }
}

TEST(Forward, TcnActivationsAreCausal) {
  const WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, 9);
  const Network net(fixed_graph(), w);
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(rng, {22, 1125});
  Tensor cut = x;
  // Zero the raw samples that only feed the last pooled step (64 samples, plus
  // the spread of the temporal and separable kernels).
  const std::size_t from = 1125 - 64 - 8 * 8 - 32;
  for (std::size_t c = 0; c < 22; ++c)
    for (std::size_t t = from; t < 1125; ++t) cut.at(c, t) = 0.0f;
  const auto a = net.trace(x), b = net.trace(cut);
  const std::size_t safe = from / 64 - 2;  // pooled steps untouched by the edit
  for (std::size_t i = 12; i < fixed_graph().layers.size(); ++i) {
    if (fixed_graph().layers[i].kind != LayerKind::CausalConv1D && fixed_graph().layers[i].kind != LayerKind::Add)
      continue;
    const Tensor sa = seq(a[i + 1]), sb = seq(b[i + 1]);
    for (std::size_t c = 0; c < sa.dim(0); ++c)
      for (std::size_t t = 0; t < safe; ++t) EXPECT_EQ(sa.at(c, t), sb.at(c, t)) << layer_name(i) << " t=" << t;
  }
}

TEST(Forward, GeometryMismatchNamesBothShapes) {
  const Network net(fixed_graph(), random_weights(fixed_hyperparams(), Family::eeg_tcnet, 1));
  try {
    net.forward(Tensor({21, 1125}));
    FAIL();
  } catch (const GeometryError& e) {
    EXPECT_EQ(e.expected_c, 22u);
    EXPECT_EQ(e.found_c, 21u);
    EXPECT_NE(std::string(e.what()).find("C=21"), std::string::npos);
  }
}

TEST(Forward, NonFiniteIntermediateNamesLayer) {
  WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, 1);
  std::get<Tensor>(w.entries["L01.var"])[0] = -5.0f;
  const Network net(fixed_graph(), w);
  std::mt19937_64 rng(5);
  try {
    net.forward(random_tensor(rng, {22, 1125}));
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_NE(std::string(e.what()).find("L01"), std::string::npos) << e.what();
  }
}

TEST(Forward, RejectsIncompleteWeights) {
  WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, 1);
  w.entries.erase("L02.weight");
  EXPECT_THROW(Network(fixed_graph(), w), FormatError);
}

TEST(PredictBatch, SingleTrialMatchesForward) {
  const WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, 2);
  const TrialSet s = random_trials(1, 22, 1125, 10);
  const auto p = predict_batch(fixed_graph(), w, s);
  const Tensor direct = forward(fixed_graph(), w, s.trial(0));
  EXPECT_EQ(p[0].probabilities, direct.values());
  EXPECT_EQ(p[0].predicted, argmax(direct));
}

TEST(PredictBatch, DeterministicAcrossRunsThreadsAndOrder) {
  const WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, 3);
  const Network net(fixed_graph(), w);
  const TrialSet s = random_trials(12, 22, 1125, 11);
  const auto serial = predict_batch(net, s, std::nullopt, 1);
  const auto again = predict_batch(net, s, std::nullopt, 1);
  const auto parallel = predict_batch(net, s, std::nullopt, 4);
  const auto wide = predict_batch(net, s, std::nullopt, 16);
  for (std::size_t i = 0; i < s.n_trials; ++i) {
    EXPECT_EQ(serial[i].probabilities, again[i].probabilities);
    EXPECT_EQ(serial[i].probabilities, parallel[i].probabilities);
    EXPECT_EQ(serial[i].probabilities, wide[i].probabilities);
  }
  TrialSet reversed;
  reversed.C = 22;
  reversed.T = 1125;
  for (std::size_t i = s.n_trials; i-- > 0;) reversed.push_back(s.trial(i), s.labels[i]);
  const auto rev = predict_batch(net, reversed, std::nullopt, 3);
  for (std::size_t i = 0; i < s.n_trials; ++i) EXPECT_EQ(rev[s.n_trials - 1 - i].probabilities, serial[i].probabilities);
}

TEST(PredictBatch, AppliesStandardization) {
  const WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, 4);
  TrialSet s = random_trials(3, 22, 1125, 12);
  for (auto& v : s.data) v = 5.0f + 3.0f * v;
  const auto st = fit_standardization(s);
  const auto p = predict_batch(fixed_graph(), w, s, st, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(p[i].probabilities, forward(fixed_graph(), w, apply_standardization(s.trial(i), st)).values());
  }
}

TEST(PredictBatch, GeometryMismatch) {
  const WeightStore w = random_weights(fixed_hyperparams(), Family::eeg_tcnet, 4);
  EXPECT_THROW(predict_batch(fixed_graph(), w, random_trials(2, 22, 1000, 1)), GeometryError);
}

TEST(Standardization, FitThenApplyNormalizesTrainingData) {
  TrialSet s = random_trials(6, 4, 200, 20);
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data[i] = 2.0f * s.data[i] + static_cast<float>(i % 3);
  const auto st = fit_standardization(s);
  const TrialSet z = apply_standardization(s, st);
  const auto refit = fit_standardization(z);
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_NEAR(refit.mean[c], 0.0, 1e-6);
    EXPECT_NEAR(refit.std[c], 1.0, 1e-4);
  }
}

TEST(Standardization, ConstantChannelBecomesZero) {
  TrialSet s = random_trials(3, 2, 50, 21);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t t = 0; t < 50; ++t) s.data[i * 100 + t] = 4.0f;
  const auto st = fit_standardization(s);
  EXPECT_GE(st.std[0], kStdFloor);
  const TrialSet z = apply_standardization(s, st);
  for (std::size_t t = 0; t < 50; ++t) EXPECT_EQ(z.data[t], 0.0f);
}

TEST(Standardization, TestSetKeepsTrainingStatistics) {
  const TrialSet train = random_trials(4, 3, 100, 22);
  TrialSet test = random_trials(4, 3, 100, 23);
  for (auto& v : test.data) v += 1.5f;
  const auto st = fit_standardization(train);
  const auto after = fit_standardization(apply_standardization(test, st));
  for (std::size_t c = 0; c < 3; ++c) EXPECT_GT(std::fabs(after.mean[c]), 0.5);
}

TEST(Standardization, JsonRoundTripAndErrors) {
  const auto st = fit_standardization(random_trials(2, 3, 10, 24));
  EXPECT_EQ(stats_from_json(to_json(st)).mean, st.mean);
  EXPECT_THROW(fit_standardization(TrialSet{}), std::invalid_argument);
  EXPECT_THROW(stats_from_json(nlohmann::json{{"mean", {1.0}}, {"std", {1.0, 2.0}}}), std::exception);
}

TEST(ExtractWindow, CueAt500) {
  Tensor raw({2, 3000});
  for (std::size_t c = 0; c < 2; ++c)
    for (std::size_t t = 0; t < 3000; ++t) raw.at(c, t) = static_cast<float>(c * 10000 + t);
  const Tensor w = extract_window(raw, 500, 250.0f);
  EXPECT_EQ(w.dims(), (Dims{2, 1125}));
  EXPECT_EQ(w.at(0, 0), 375.0f);
  EXPECT_EQ(w.at(0, 1124), 1499.0f);
  EXPECT_EQ(w.at(1, 0), 10375.0f);
}

TEST(ExtractWindow, Errors) {
  EXPECT_THROW(extract_window(Tensor({2, 3000}), 100, 250.0f), WindowError);
  EXPECT_THROW(extract_window(Tensor({2, 1400}), 500, 250.0f), WindowError);
  EXPECT_THROW(extract_window(Tensor({2, 3000}), 500, 500.0f), std::invalid_argument);
}
