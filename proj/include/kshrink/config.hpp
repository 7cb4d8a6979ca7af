#ifndef KSHRINK_CONFIG_HPP_
#define KSHRINK_CONFIG_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kshrink/risk_sim.hpp"

namespace kshrink {

/// Field-level problems found while reading a run configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> messages);
  const std::vector<std::string>& messages() const { return messages_; }

 private:
  std::vector<std::string> messages_;
};

/// A parsed run configuration: one plan per mean configuration, all sharing
/// V_i, Q, n, sigma2, estimators, replications and seed.
struct RunConfig {
  std::vector<NamedPlan> plans;
  std::string output_path;
  std::string output_format = "csv";
};

/// Reads the JSON run document.  Layout:
///
///   {
///     "model": {"p": 5, "k": 5, "n": 20, "sigma2": 2,
///               "V": [0.1, "0.2*I", [[...], ...], ...],   // c, "c*I" or full
///               "Q": 10 | "c*I" | [[...]] | "inverse_V1", // default inverse_V1
///               "mu": [[...], ...] | [m_1, ..., m_k]},    // vectors or m_i j_p
///     "mean_configs": [{"name": "...", "mu": ...}, ...],  // optional
///     "estimators": [{"kind": "EB", "a0": 0.136}, {"kind": "HB"}, ...],
///     "replications": 5000, "seed": 42, "common_random_numbers": true,
///     "output": {"path": "out.csv", "format": "csv"}
///   }
///
/// Unset estimator constants are resolved to their minimax defaults.  All
/// problems are collected and thrown together as a ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::string& path);

/// Canonical JSON for a run: matrices that are exact multiples of I are
/// written as scalars, estimator constants are written explicitly.
nlohmann::json to_json(const RunConfig& config);

nlohmann::json model_to_json(const ModelSpec& spec);
nlohmann::json estimator_to_json(const EstimatorConfig& config);

/// Parses "c", "c*I" or a nested array into a p x p matrix.
Matrix parse_matrix(const nlohmann::json& value, int p, const std::string& field,
                    std::vector<std::string>& errors);

}  // namespace kshrink

#endif  // KSHRINK_CONFIG_HPP_
