#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace eegtcnet {

inline double accuracy(std::span<const std::size_t> pred, std::span<const std::size_t> truth) {
  if (pred.empty()) throw std::invalid_argument("accuracy of an empty prediction list");
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("prediction count " + std::to_string(pred.size()) + " != label count " +
                                std::to_string(truth.size()));
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

// Cohen's kappa with chance agreement taken as the random classification rate 1/n.
inline double kappa(double acc, std::size_t n_classes) {
  if (n_classes < 2) throw std::invalid_argument("kappa needs at least two classes");
  const double pe = 1.0 / static_cast<double>(n_classes);
  return (acc - pe) / (1.0 - pe);
}

struct SubjectResult {
  std::string name;
  std::size_t n_trials = 0;
  double accuracy = 0.0;
  double kappa = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted]
};

struct EvalReport {
  std::size_t n_classes = 0;
  std::vector<SubjectResult> subjects;
  double mean_accuracy = 0.0;
  double mean_kappa = 0.0;
  // Across subjects: sample (n-1) and population (n) conventions.
  double std_accuracy_sample = 0.0;
  double std_accuracy_population = 0.0;
  double std_kappa_sample = 0.0;
  double std_kappa_population = 0.0;
};

struct SubjectPredictions {
  std::string name;
  std::vector<std::size_t> predicted;
  std::vector<std::size_t> truth;
};

namespace detail {

inline void mean_std(const std::vector<double>& v, double& mean, double& sample, double& population) {
  const double n = static_cast<double>(v.size());
  mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  population = std::sqrt(ss / n);
  sample = v.size() > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
}

}  // namespace detail

inline EvalReport evaluate(std::span<const SubjectPredictions> subjects, std::size_t n_classes) {
  if (subjects.empty()) throw std::invalid_argument("evaluation needs at least one subject");
  if (n_classes < 2) throw std::invalid_argument("evaluation needs at least two classes");
  EvalReport r;
  r.n_classes = n_classes;
  std::vector<double> accs, kappas;
  for (const auto& s : subjects) {
    SubjectResult res;
    res.name = s.name;
    res.n_trials = s.predicted.size();
    res.accuracy = accuracy(s.predicted, s.truth);
    res.kappa = kappa(res.accuracy, n_classes);
    res.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    for (std::size_t i = 0; i < s.predicted.size(); ++i) {
      if (s.truth[i] >= n_classes || s.predicted[i] >= n_classes) {
        throw std::invalid_argument(s.name + ": class index out of range at trial " + std::to_string(i));
      }
      ++res.confusion[s.truth[i]][s.predicted[i]];
    }
    accs.push_back(res.accuracy);
    kappas.push_back(res.kappa);
    r.subjects.push_back(std::move(res));
  }
  detail::mean_std(accs, r.mean_accuracy, r.std_accuracy_sample, r.std_accuracy_population);
  detail::mean_std(kappas, r.mean_kappa, r.std_kappa_sample, r.std_kappa_population);
  return r;
}

}  // namespace eegtcnet
