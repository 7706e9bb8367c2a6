#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

namespace eegtcnet {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Family { eeg_tcnet, eegnet };

inline std::string_view to_string(Family f) {
  return f == Family::eeg_tcnet ? "eeg_tcnet" : "eegnet";
}

inline Family parse_family(std::string_view s) {
  if (s == "eeg_tcnet") return Family::eeg_tcnet;
  if (s == "eegnet") return Family::eegnet;
  throw ConfigError("unknown network family '" + std::string(s) + "' (expected eeg_tcnet or eegnet)");
}

// Full hyperparameter vector. Defaults are the fixed EEG-TCNet configuration
// on 22-channel, 1125-sample, 4-class trials.
struct HyperParams {
  int F1 = 8;
  int F2 = 16;
  int K_E = 32;
  int K_T = 4;
  int L = 2;
  int F_T = 12;
  double p_e = 0.2;
  double p_t = 0.3;
  bool standardize = true;
  int C = 22;
  int T = 1125;
  int n_classes = 4;

  friend bool operator==(const HyperParams&, const HyperParams&) = default;

  // Throws ConfigError naming the first violated invariant.
  void validate() const {
    auto positive = [](int v, const char* name) {
      if (v < 1) throw ConfigError(std::string(name) + " must be >= 1, got " + std::to_string(v));
    };
    positive(F1, "F1");
    positive(F2, "F2");
    positive(K_E, "K_E");
    positive(K_T, "K_T");
    positive(L, "L");
    positive(F_T, "F_T");
    positive(C, "C");
    positive(T, "T");
    positive(n_classes, "n_classes");
    auto rate = [](double v, const char* name) {
      if (!(v >= 0.0 && v < 1.0)) {
        throw ConfigError(std::string(name) + " must be in [0,1), got " + std::to_string(v));
      }
    };
    rate(p_e, "p_e");
    rate(p_t, "p_t");
    if (n_classes > 255) throw ConfigError("n_classes must fit in one byte");
  }
};

inline HyperParams fixed_hyperparams() { return {}; }

inline nlohmann::json to_json(const HyperParams& hp) {
  return nlohmann::json{{"F1", hp.F1},         {"F2", hp.F2},   {"K_E", hp.K_E},
                        {"K_T", hp.K_T},       {"L", hp.L},     {"F_T", hp.F_T},
                        {"p_e", hp.p_e},       {"p_t", hp.p_t}, {"standardize", hp.standardize},
                        {"C", hp.C},           {"T", hp.T},     {"n_classes", hp.n_classes}};
}

// Any subset of fields may be given; missing fields take the fixed-network
// defaults, except F2 which defaults to 2*F1. Unknown keys are rejected.
inline HyperParams hyperparams_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"F1", "F2", "K_E", "K_T", "L", "F_T", "p_e",
                                           "p_t", "standardize", "C", "T", "n_classes"};
  if (!j.is_object()) throw ConfigError("hyperparameter document must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown hyperparameter key '" + key + "'");
  }
  HyperParams hp;
  auto get_int = [&](const char* key, int& dst) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    dst = v.get<int>();
  };
  auto get_real = [&](const char* key, double& dst) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
    dst = v.get<double>();
  };
  get_int("F1", hp.F1);
  hp.F2 = 2 * hp.F1;
  get_int("F2", hp.F2);
  get_int("K_E", hp.K_E);
  get_int("K_T", hp.K_T);
  get_int("L", hp.L);
  get_int("F_T", hp.F_T);
  get_real("p_e", hp.p_e);
  get_real("p_t", hp.p_t);
  if (j.contains("standardize")) {
    if (!j.at("standardize").is_boolean()) throw ConfigError("standardize must be a boolean");
    hp.standardize = j.at("standardize").get<bool>();
  }
  get_int("C", hp.C);
  get_int("T", hp.T);
  get_int("n_classes", hp.n_classes);
  hp.validate();
  return hp;
}

inline HyperParams parse_hyperparams(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("malformed hyperparameter JSON: ") + e.what());
  }
  return hyperparams_from_json(j);
}

}  // namespace eegtcnet
