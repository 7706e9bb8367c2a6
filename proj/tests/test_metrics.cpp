#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include <eegtcnet/eegtcnet.hpp>

using namespace eegtcnet;

TEST(Accuracy, Definition) {
  const std::vector<std::size_t> t{0, 1, 2, 3};
  EXPECT_EQ(accuracy(t, t), 1.0);
  EXPECT_EQ(accuracy(std::vector<std::size_t>{1, 2, 3, 0}, t), 0.0);
  std::vector<std::size_t> truth(288, 0), pred(288, 0);
  for (std::size_t i = 223; i < 288; ++i) pred[i] = 1;
  EXPECT_NEAR(accuracy(pred, truth), 0.7743, 5e-5);
}

TEST(Accuracy, Errors) {
  EXPECT_THROW(accuracy({}, {}), std::invalid_argument);
  EXPECT_THROW(accuracy(std::vector<std::size_t>{1}, std::vector<std::size_t>{1, 2}), std::invalid_argument);
}

TEST(Kappa, PrintedPairs) {
  EXPECT_NEAR(kappa(0.7735, 4), 0.698, 0.005);
  EXPECT_NEAR(kappa(0.9451, 4), 0.927, 0.005);
  // (acc - 1/n) / (1 - 1/n), computed by hand
  EXPECT_NEAR(kappa(0.7735, 4), (0.7735 - 0.25) / 0.75, 1e-12);
}

TEST(Kappa, ChanceAndPerfect) {
  for (std::size_t n = 2; n <= 10; ++n) {
    EXPECT_NEAR(kappa(1.0 / double(n), n), 0.0, 1e-12);
    EXPECT_DOUBLE_EQ(kappa(1.0, n), 1.0);
  }
  EXPECT_THROW(kappa(0.5, 1), std::invalid_argument);
}

TEST(Kappa, StrictlyIncreasing) {
  for (std::size_t n : {2u, 3u, 4u, 7u}) {
    double prev = kappa(0.0, n);
    for (int i = 1; i <= 100; ++i) {
      const double k = kappa(i / 100.0, n);
      EXPECT_GT(k, prev);
      prev = k;
    }
    EXPECT_NEAR(kappa(0.0, n), -(1.0 / n) / (1.0 - 1.0 / n), 1e-12);
  }
}

TEST(Evaluate, OneSubject) {
  const std::vector<SubjectPredictions> s{{"A01", {0, 1, 1, 3}, {0, 1, 2, 3}}};
  const EvalReport r = evaluate(s, 4);
  EXPECT_DOUBLE_EQ(r.mean_accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.std_accuracy_sample, 0.0);
  EXPECT_DOUBLE_EQ(r.std_accuracy_population, 0.0);
  EXPECT_EQ(r.subjects[0].confusion[2][1], 1u);
  EXPECT_EQ(r.subjects[0].confusion[2][2], 0u);
}

TEST(Evaluate, TwoSubjectsMeanAndStd) {
  std::vector<std::size_t> truth(10, 0), p1(10, 0), p2(10, 0);
  for (std::size_t i = 0; i < 4; ++i) p1[i] = 1;  // 0.6
  for (std::size_t i = 0; i < 2; ++i) p2[i] = 1;  // 0.8
  const std::vector<SubjectPredictions> s{{"a", p1, truth}, {"b", p2, truth}};
  const EvalReport r = evaluate(s, 4);
  EXPECT_NEAR(r.mean_accuracy, 0.7, 1e-12);
  EXPECT_NEAR(r.std_accuracy_population, 0.1, 1e-12);
  EXPECT_NEAR(r.std_accuracy_sample, 0.1 * std::sqrt(2.0), 1e-12);
}

TEST(Evaluate, PerfectPredictionsAndConfusionRows) {
  std::vector<SubjectPredictions> subjects;
  for (int s = 0; s < 9; ++s) {
    std::vector<std::size_t> t;
    for (std::size_t i = 0; i < 288; ++i) t.push_back(i % 4);
    subjects.push_back({"S" + std::to_string(s + 1), t, t});
  }
  const EvalReport r = evaluate(subjects, 4);
  for (const auto& s : r.subjects) {
    EXPECT_DOUBLE_EQ(s.kappa, 1.0);
    for (std::size_t c = 0; c < 4; ++c) {
      std::size_t row = 0;
      for (auto v : s.confusion[c]) row += v;
      EXPECT_EQ(row, 72u);
    }
  }
  EXPECT_DOUBLE_EQ(r.mean_kappa, 1.0);
}

TEST(Evaluate, PermutationInvariant) {
  std::mt19937_64 rng(4);
  std::vector<std::size_t> t(100), p(100);
  for (auto& v : t) v = rng() % 4;
  for (auto& v : p) v = rng() % 4;
  const EvalReport a = evaluate(std::vector<SubjectPredictions>{{"x", p, t}}, 4);
  std::vector<std::size_t> idx(100);
  for (std::size_t i = 0; i < 100; ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<std::size_t> t2, p2;
  for (auto i : idx) {
    t2.push_back(t[i]);
    p2.push_back(p[i]);
  }
  const EvalReport b = evaluate(std::vector<SubjectPredictions>{{"x", p2, t2}}, 4);
  EXPECT_EQ(a.subjects[0].accuracy, b.subjects[0].accuracy);
  EXPECT_EQ(a.subjects[0].confusion, b.subjects[0].confusion);
}

TEST(Evaluate, UniformRandomPredictionsHaveNearZeroKappa) {
  // Simulated null distribution at 288 trials: kappa sd is about 0.034, so
  // |kappa| >= 0.1 is a ~3 sigma event.
  std::mt19937_64 rng(5);
  std::vector<std::size_t> truth;
  for (std::size_t i = 0; i < 288; ++i) truth.push_back(i % 4);
  const int reps = 2000;
  int outside = 0;
  double sum = 0.0;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<std::size_t> p(288);
    for (auto& v : p) v = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
    const double k = kappa(accuracy(p, truth), 4);
    sum += k;
    if (std::fabs(k) >= 0.1) ++outside;
  }
  EXPECT_LT(double(outside) / reps, 0.01);
  EXPECT_LT(std::fabs(sum / reps), 0.005);
}

TEST(Evaluate, RejectsBadInput) {
  EXPECT_THROW(evaluate(std::vector<SubjectPredictions>{}, 4), std::invalid_argument);
  EXPECT_THROW(evaluate(std::vector<SubjectPredictions>{{"x", {5}, {0}}}, 4), std::invalid_argument);
}

TEST(Render, TableLayout) {
  std::vector<std::size_t> t{0, 1, 2, 3}, p{0, 1, 2, 0};
  const std::string text = render_text(evaluate(std::vector<SubjectPredictions>{{"A01", p, t}, {"A02", t, t}}, 4));
  EXPECT_NE(text.find("A01              75.00    0.67"), std::string::npos) << text;
  EXPECT_NE(text.find("Mean"), std::string::npos);
  EXPECT_NE(text.find("Std. Dev."), std::string::npos);
  EXPECT_NE(text.find("confusion A01"), std::string::npos);
}
