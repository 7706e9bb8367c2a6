#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <eegtcnet/eegtcnet.hpp>

namespace fs = std::filesystem;
using namespace eegtcnet;

namespace {

enum Exit : int { kOk = 0, kInternal = 1, kBadInput = 2, kGeometry = 3, kMissingCompanion = 4 };

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MissingCompanion : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Bytes read_file(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw InputError(path + ": no such file");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(path + ": cannot open for reading");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text(const std::string& path) {
  const Bytes b = read_file(path);
  return std::string(b.begin(), b.end());
}

void write_file(const std::string& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError(path + ": write failed");
}

// Format and config errors are reported against the file they came from.
template <typename F>
auto with_path(const std::string& path, F&& load) {
  try {
    return load();
  } catch (const FormatError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const ConfigError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

WeightStore load_weights_file(const std::string& path) {
  const Bytes b = read_file(path);
  return with_path(path, [&] { return load_weights(b); });
}

TrialSet load_trials_file(const std::string& path) {
  const Bytes b = read_file(path);
  return with_path(path, [&] { return load_trials(b); });
}

StandardizationStats load_stats_file(const std::string& path) {
  const std::string text = read_text(path);
  return with_path(path, [&] { return stats_from_json(nlohmann::json::parse(text)); });
}

HyperParams load_config_file(const std::string& path) {
  const std::string text = read_text(path);
  return with_path(path, [&] { return parse_hyperparams(text); });
}

std::string stem(const std::string& path) { return fs::path(path).stem().string(); }

void check_stats(const StandardizationStats& st, std::size_t C, const std::string& path) {
  if (st.mean.size() != C) {
    throw InputError(path + ": statistics cover " + std::to_string(st.mean.size()) + " channels, trials have " +
                     std::to_string(C));
  }
}

// --- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
  std::string config;
  std::string family = "eeg_tcnet";
  std::string format = "text";
  std::uint64_t bytes_per_element = 1;
  bool published = false;
};

int run_analyze(const AnalyzeArgs& a) {
  const bool machine = a.format == "machine";
  if (a.published) {
    const auto rows = check_published();
    if (machine) std::cout << to_json(rows).dump(2) << '\n';
    else std::cout << render_text(rows);
    return kOk;
  }
  if (a.config.empty()) throw InputError("analyze: --config is required (or pass --published)");
  const HyperParams hp = load_config_file(a.config);
  const Family family = parse_family(a.family);
  const CostReport r = report(hp, family, a.bytes_per_element);
  if (machine) std::cout << to_json(r).dump(2) << '\n';
  else std::cout << render_text(r);
  return kOk;
}

// --- rfs -------------------------------------------------------------------

struct RfsArgs {
  std::uint64_t kt = 0;
  unsigned layers = 0;
  std::optional<std::uint64_t> min;
};

int run_rfs(const RfsArgs& a) {
  const std::uint64_t rfs = receptive_field_size(a.kt, a.layers);
  std::cout << rfs;
  if (a.min) std::cout << (rfs >= *a.min ? " (ok)" : " (below " + std::to_string(*a.min) + ")");
  std::cout << '\n';
  return kOk;
}

// --- infer -----------------------------------------------------------------

struct InferArgs {
  std::string weights;
  std::string trials;
  std::string stats;
  std::string calibration;
  bool quantized = false;
  unsigned threads = 0;
};

std::vector<Prediction> infer_predictions(const WeightStore& store, const TrialSet& trials,
                                          const std::optional<StandardizationStats>& stats,
                                          const std::optional<TrialSet>& calibration, bool quantized,
                                          unsigned threads) {
  const WeightStore real = store.dequantized();
  if (quantized && calibration) {
    const QuantizedModel model = quantize_weights(real, *calibration, stats);
    return predict_batch_quantized(model, trials, stats, threads);
  }
  return predict_batch(real.graph(), real, trials, stats, threads);
}

int run_infer(const InferArgs& a) {
  const WeightStore store = load_weights_file(a.weights);
  const TrialSet trials = load_trials_file(a.trials);
  std::optional<StandardizationStats> stats;
  if (!a.stats.empty()) {
    stats = load_stats_file(a.stats);
    check_stats(*stats, trials.C, a.stats);
  }
  std::optional<TrialSet> calibration;
  if (!a.calibration.empty()) calibration = load_trials_file(a.calibration);
  if (a.quantized && !calibration && !store.is_quantized()) {
    throw MissingCompanion("--quantized on a real-valued weight container needs --calibration trials");
  }
  const Network probe(store.graph(), store.dequantized());
  check_geometry(probe, trials);
  if (calibration) check_geometry(probe, *calibration);
  if (store.hp.standardize && !stats) {
    std::cerr << "warning: network expects standardized input but no --standardize-stats was given\n";
  }

  const auto preds =
      infer_predictions(store, trials, stats, calibration, a.quantized, a.threads ? a.threads : default_threads());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::cout << i << ' ' << preds[i].predicted;
    for (float p : preds[i].probabilities) std::cout << detail::printf_string(" %.6f", static_cast<double>(p));
    std::cout << '\n';
  }
  return kOk;
}

// --- eval ------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> pred;
  std::vector<std::string> truth;
  std::vector<std::string> weights;
  std::vector<std::string> trials;
  std::vector<std::string> stats;
  std::string format = "text";
  unsigned threads = 0;
};

// Prediction files hold one trial per line; the predicted class is the second
// column of `infer` output, or the only column of a bare class list.
std::vector<std::size_t> parse_predictions(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<std::size_t> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<std::string> tok{std::istream_iterator<std::string>(ls), std::istream_iterator<std::string>()};
    if (tok.empty()) continue;
    const std::string& cls = tok.size() == 1 ? tok[0] : tok[1];
    try {
      std::size_t used = 0;
      const long v = std::stol(cls, &used);
      if (used != cls.size() || v < 0) throw std::invalid_argument(cls);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw InputError(path + ":" + std::to_string(lineno) + ": cannot read a class index from '" + line + "'");
    }
  }
  return out;
}

int run_eval(const EvalArgs& a) {
  std::vector<SubjectPredictions> subjects;
  int n_classes = 0;
  auto set_classes = [&](const TrialSet& t, const std::string& path) {
    if (n_classes != 0 && t.n_classes != n_classes) {
      throw InputError(path + ": n_classes " + std::to_string(t.n_classes) + " differs from " +
                       std::to_string(n_classes));
    }
    n_classes = t.n_classes;
  };
  auto labels_of = [](const TrialSet& t) { return std::vector<std::size_t>(t.labels.begin(), t.labels.end()); };

  if (!a.pred.empty()) {
    if (!a.weights.empty() || !a.trials.empty()) throw InputError("eval: use either --pred/--truth or --weights/--trials");
    if (a.truth.size() != a.pred.size()) {
      throw MissingCompanion("eval: every --pred needs a matching --truth (" + std::to_string(a.pred.size()) +
                             " vs " + std::to_string(a.truth.size()) + ")");
    }
    for (std::size_t i = 0; i < a.pred.size(); ++i) {
      const TrialSet truth = load_trials_file(a.truth[i]);
      set_classes(truth, a.truth[i]);
      auto predicted = parse_predictions(a.pred[i]);
      if (predicted.size() != truth.n_trials) {
        throw InputError(a.pred[i] + ": " + std::to_string(predicted.size()) + " predictions but " + a.truth[i] +
                         " holds " + std::to_string(truth.n_trials) + " trials");
      }
      subjects.push_back({stem(a.pred[i]), std::move(predicted), labels_of(truth)});
    }
  } else {
    if (a.trials.empty()) throw MissingCompanion("eval: give --pred with --truth, or --weights with --trials");
    if (a.weights.empty()) throw MissingCompanion("eval: --trials needs --weights");
    if (a.weights.size() != 1 && a.weights.size() != a.trials.size()) {
      throw InputError("eval: give one --weights for all subjects or one per --trials");
    }
    if (!a.stats.empty() && a.stats.size() != 1 && a.stats.size() != a.trials.size()) {
      throw InputError("eval: give one --standardize-stats for all subjects or one per --trials");
    }
    std::vector<WeightStore> stores;
    for (const auto& w : a.weights) stores.push_back(load_weights_file(w));
    std::vector<TrialSet> sets;
    for (const auto& t : a.trials) sets.push_back(load_trials_file(t));
    std::vector<StandardizationStats> stats;
    for (const auto& s : a.stats) stats.push_back(load_stats_file(s));
    for (std::size_t i = 0; i < sets.size(); ++i) {
      set_classes(sets[i], a.trials[i]);
      const WeightStore& w = stores[stores.size() == 1 ? 0 : i];
      check_geometry(Network(w.graph(), w.dequantized()), sets[i]);
      if (!stats.empty()) {
        const std::size_t k = stats.size() == 1 ? 0 : i;
        check_stats(stats[k], sets[i].C, a.stats[k]);
      }
    }
    const unsigned threads = a.threads ? a.threads : default_threads();
    for (std::size_t i = 0; i < sets.size(); ++i) {
      const WeightStore w = stores[stores.size() == 1 ? 0 : i].dequantized();
      std::optional<StandardizationStats> st;
      if (!stats.empty()) st = stats[stats.size() == 1 ? 0 : i];
      const auto preds = predict_batch(w.graph(), w, sets[i], st, threads);
      std::vector<std::size_t> predicted;
      for (const auto& p : preds) predicted.push_back(p.predicted);
      subjects.push_back({stem(a.trials[i]), std::move(predicted), labels_of(sets[i])});
    }
  }

  const EvalReport r = evaluate(subjects, static_cast<std::size_t>(n_classes));
  if (a.format == "machine") std::cout << to_json(r).dump(2) << '\n';
  else std::cout << render_text(r);
  return kOk;
}

// --- quantize --------------------------------------------------------------

struct QuantizeArgs {
  std::string weights;
  std::string calibration;
  std::string stats;
  std::string out;
};

int run_quantize(const QuantizeArgs& a) {
  const WeightStore store = load_weights_file(a.weights);
  const TrialSet calibration = load_trials_file(a.calibration);
  std::optional<StandardizationStats> stats;
  if (!a.stats.empty()) {
    stats = load_stats_file(a.stats);
    check_stats(*stats, calibration.C, a.stats);
  }
  if (calibration.n_trials == 0) throw InputError(a.calibration + ": calibration set is empty");
  check_geometry(Network(store.graph(), store.dequantized()), calibration);

  const QuantizedModel model = quantize_weights(store.dequantized(), calibration, stats);
  write_file(a.out, save_weights(model.weights));
  std::cout << "wrote " << a.out << " (" << model.weights.entries.size() << " int8 tensors, "
            << model.params.activations.size() << " calibrated activation buffers)\n";
  return kOk;
}

// --- inspect ---------------------------------------------------------------

int run_inspect(const std::string& path) {
  const Bytes b = read_file(path);
  const std::string magic(b.begin(), b.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(4, b.size())));
  if (magic == "ETRL") {
    const TrialSet t = with_path(path, [&] { return load_trials(b); });
    std::vector<std::size_t> hist(static_cast<std::size_t>(t.n_classes), 0);
    for (auto l : t.labels) ++hist[l];
    std::cout << "format=ETRL\nversion=1\n"
              << "n_trials=" << t.n_trials << "\nC=" << t.C << "\nT=" << t.T << '\n'
              << detail::printf_string("fs=%g\n", static_cast<double>(t.fs)) << "n_classes=" << t.n_classes
              << "\nlabel_counts=";
    for (std::size_t c = 0; c < hist.size(); ++c) std::cout << (c ? "," : "") << hist[c];
    std::cout << '\n';
    return kOk;
  }
  if (magic == "ETCW") {
    const WeightStore w = with_path(path, [&] { return load_weights(b); });
    std::cout << "format=ETCW\nversion=1\nfamily=" << to_string(w.family) << "\nhyperparams=" << to_json(w.hp).dump()
              << "\ntensor_count=" << w.entries.size() << "\nparameters=" << w.element_count() << '\n';
    for (const auto& name : canonical_order(w.graph())) {
      const WeightEntry& e = w.entries.at(name);
      std::cout << name << " dtype=" << (std::holds_alternative<QuantizedTensor>(e) ? 1 : 0)
                << " dims=" << dims_to_string(WeightStore::dims_of(e));
      if (const auto* q = std::get_if<QuantizedTensor>(&e)) {
        std::cout << detail::printf_string(" scale=%.9g zero_point=%d", static_cast<double>(q->scale), q->zero_point);
      }
      std::cout << '\n';
    }
    return kOk;
  }
  throw InputError(path + ": not an ETCW or ETRL container");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG-TCNet inference engine and cost analyzer"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand("analyze", "parameter, MAC, memory and receptive-field report");
  analyze->add_option("--config", analyze_args.config, "hyperparameter JSON");
  analyze->add_option("--family", analyze_args.family, "network family")
      ->check(CLI::IsMember({"eeg_tcnet", "eegnet"}));
  analyze->add_option("--format", analyze_args.format, "output format")->check(CLI::IsMember({"text", "machine"}));
  analyze->add_option("--bytes-per-element", analyze_args.bytes_per_element, "feature-map element size")
      ->check(CLI::PositiveNumber);
  analyze->add_flag("--published", analyze_args.published, "cross-check the published per-subject parameter counts");

  RfsArgs rfs_args;
  auto* rfs = app.add_subcommand("rfs", "receptive field of the temporal convolution stack");
  rfs->add_option("--kt", rfs_args.kt, "temporal kernel size")->required()->check(CLI::PositiveNumber);
  rfs->add_option("--layers", rfs_args.layers, "number of residual blocks")->required()->check(CLI::PositiveNumber);
  rfs->add_option("--min", rfs_args.min, "required minimum");

  InferArgs infer_args;
  auto* infer = app.add_subcommand("infer", "classify trials");
  infer->add_option("--weights", infer_args.weights, "ETCW weight container")->required();
  infer->add_option("--trials", infer_args.trials, "ETRL trial container")->required();
  infer->add_option("--standardize-stats", infer_args.stats, "per-channel mean/std JSON");
  infer->add_flag("--quantized", infer_args.quantized, "simulate 8-bit weights and feature maps");
  infer->add_option("--calibration", infer_args.calibration, "ETRL trials for activation ranges");
  infer->add_option("--threads", infer_args.threads, "worker threads (0 = all cores)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "accuracy, kappa and confusion matrices");
  eval->add_option("--pred", eval_args.pred, "prediction file (repeatable)");
  eval->add_option("--truth", eval_args.truth, "ETRL labels matching each --pred (repeatable)");
  eval->add_option("--weights", eval_args.weights, "ETCW weights (one, or one per --trials)");
  eval->add_option("--trials", eval_args.trials, "ETRL trials (repeatable)");
  eval->add_option("--standardize-stats", eval_args.stats, "statistics JSON (one, or one per --trials)");
  eval->add_option("--format", eval_args.format, "output format")->check(CLI::IsMember({"text", "machine"}));
  eval->add_option("--threads", eval_args.threads, "worker threads (0 = all cores)");

  QuantizeArgs quantize_args;
  auto* quantize = app.add_subcommand("quantize", "write an int8 weight container");
  quantize->add_option("--weights", quantize_args.weights, "ETCW weight container")->required();
  quantize->add_option("--calibration", quantize_args.calibration, "ETRL calibration trials")->required();
  quantize->add_option("--standardize-stats", quantize_args.stats, "per-channel mean/std JSON");
  quantize->add_option("--out", quantize_args.out, "output path")->required();

  std::string inspect_path;
  auto* inspect = app.add_subcommand("inspect", "dump an ETCW or ETRL header and manifest");
  inspect->add_option("--file", inspect_path, "container path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*analyze) return run_analyze(analyze_args);
    if (*rfs) return run_rfs(rfs_args);
    if (*infer) return run_infer(infer_args);
    if (*eval) return run_eval(eval_args);
    if (*quantize) return run_quantize(quantize_args);
    if (*inspect) return run_inspect(inspect_path);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const GeometryError& e) {
    std::cerr << "error: trial geometry mismatch: " << e.what() << '\n';
    return kGeometry;
  } catch (const MissingCompanion& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingCompanion;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const GraphError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}
