#pragma once

#include <cstdio>
#include <sstream>
#include <string>

#include <json.hpp>

#include "analyzer.hpp"
#include "metrics.hpp"

// Text and machine-readable renderings shared by the command-line tool.
// JSON key names are a stable interface.

namespace eegtcnet {

namespace detail {

template <typename... Args>
std::string printf_string(const char* fmt, Args... args) {
  const int n = std::snprintf(nullptr, 0, fmt, args...);
  std::string s(static_cast<std::size_t>(n), '\0');
  std::snprintf(s.data(), s.size() + 1, fmt, args...);
  return s;
}

}  // namespace detail

inline std::string render_text(const CostReport& r) {
  std::ostringstream out;
  out << "family=" << to_string(r.family) << '\n'
      << "params=" << r.params << '\n'
      << "macs=" << r.macs << '\n'
      << "peak_memory_bytes=" << r.peak_memory_bytes << '\n'
      << "rfs=" << r.rfs << '\n'
      << "bytes_per_element=" << r.bytes_per_element << "\n\n";
  out << detail::printf_string("%-6s %-18s %-14s %8s %10s %10s\n", "layer", "kind", "output", "params", "macs",
                               "out_bytes");
  for (const auto& l : r.per_layer) {
    out << detail::printf_string("%-6s %-18s %-14s %8llu %10llu %10llu\n", l.name.c_str(),
                                 std::string(to_string(l.kind)).c_str(), dims_to_string(l.output_shape).c_str(),
                                 static_cast<unsigned long long>(l.params), static_cast<unsigned long long>(l.macs),
                                 static_cast<unsigned long long>(l.output_bytes));
  }
  return out.str();
}

inline nlohmann::json to_json(const CostReport& r) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : r.per_layer) {
    layers.push_back({{"name", l.name},
                      {"kind", std::string(to_string(l.kind))},
                      {"output_shape", l.output_shape},
                      {"params", l.params},
                      {"macs", l.macs},
                      {"output_bytes", l.output_bytes}});
  }
  return {{"family", std::string(to_string(r.family))},
          {"params", r.params},
          {"macs", r.macs},
          {"peak_memory_bytes", r.peak_memory_bytes},
          {"rfs", r.rfs},
          {"bytes_per_element", r.bytes_per_element},
          {"layers", std::move(layers)}};
}

inline std::string render_text(const std::vector<PublishedCheck>& rows) {
  std::ostringstream out;
  out << detail::printf_string("%-10s %7s %4s %4s %4s %4s %4s %10s %10s %7s  %s\n", "family", "subject", "K_T", "L",
                               "F_T", "F1", "K_E", "published", "computed", "delta", "note");
  for (const auto& c : rows) {
    const auto& hp = c.config.hp;
    const bool tcn = c.config.family == Family::eeg_tcnet;
    std::string note = c.delta == 0 ? "ok" : "MISMATCH";
    if (c.matches_with_ke32) {
      note = "printed K_E=" + std::to_string(hp.K_E) + " is inconsistent; K_E=32 gives " +
             std::to_string(c.computed_ke32) + " (match)";
    }
    auto opt = [&](int v) { return tcn ? std::to_string(v) : std::string("-"); };
    out << detail::printf_string("%-10s %7d %4s %4s %4s %4d %4d %10llu %10llu %+7lld  %s\n",
                                 std::string(to_string(c.config.family)).c_str(), c.config.subject,
                                 opt(hp.K_T).c_str(), opt(hp.L).c_str(), opt(hp.F_T).c_str(), hp.F1, hp.K_E,
                                 static_cast<unsigned long long>(c.config.params),
                                 static_cast<unsigned long long>(c.computed), static_cast<long long>(c.delta),
                                 note.c_str());
  }
  return out.str();
}

inline nlohmann::json to_json(const std::vector<PublishedCheck>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : rows) {
    nlohmann::json row{{"family", std::string(to_string(c.config.family))},
                       {"subject", c.config.subject},
                       {"hyperparams", to_json(c.config.hp)},
                       {"published", c.config.params},
                       {"computed", c.computed},
                       {"delta", c.delta},
                       {"matches_with_ke32", c.matches_with_ke32}};
    if (c.matches_with_ke32) row["computed_ke32"] = c.computed_ke32;
    out.push_back(std::move(row));
  }
  return out;
}

// Accuracy as a percentage and kappa, two decimals each.
inline std::string render_text(const EvalReport& r) {
  std::ostringstream out;
  out << detail::printf_string("%-12s %9s %7s %7s\n", "Subject", "Accuracy", "Kappa", "Trials");
  for (const auto& s : r.subjects) {
    out << detail::printf_string("%-12s %9.2f %7.2f %7zu\n", s.name.c_str(), 100.0 * s.accuracy, s.kappa, s.n_trials);
  }
  out << detail::printf_string("%-12s %9.2f %7.2f\n", "Mean", 100.0 * r.mean_accuracy, r.mean_kappa);
  out << detail::printf_string("%-12s %9.2f %7.2f   (sample, n-1)\n", "Std. Dev.", 100.0 * r.std_accuracy_sample,
                               r.std_kappa_sample);
  out << detail::printf_string("%-12s %9.2f %7.2f   (population, n)\n", "Std. Dev.",
                               100.0 * r.std_accuracy_population, r.std_kappa_population);
  for (const auto& s : r.subjects) {
    out << "\nconfusion " << s.name << " (rows: true class, columns: predicted)\n";
    for (const auto& row : s.confusion) {
      for (std::size_t j = 0; j < row.size(); ++j) out << detail::printf_string(j ? " %6zu" : "%6zu", row[j]);
      out << '\n';
    }
  }
  return out.str();
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json subjects = nlohmann::json::array();
  for (const auto& s : r.subjects) {
    subjects.push_back({{"name", s.name},
                        {"n_trials", s.n_trials},
                        {"accuracy", s.accuracy},
                        {"kappa", s.kappa},
                        {"confusion", s.confusion}});
  }
  return {{"n_classes", r.n_classes},
          {"subjects", std::move(subjects)},
          {"mean_accuracy", r.mean_accuracy},
          {"mean_kappa", r.mean_kappa},
          {"std_accuracy_sample", r.std_accuracy_sample},
          {"std_accuracy_population", r.std_accuracy_population},
          {"std_kappa_sample", r.std_kappa_sample},
          {"std_kappa_population", r.std_kappa_population}};
}

}  // namespace eegtcnet
