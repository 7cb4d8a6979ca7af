#ifndef KSHRINK_CLI_HPP_
#define KSHRINK_CLI_HPP_

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kshrink/minimax.hpp"
#include "kshrink/risk_sim.hpp"

namespace kshrink::cli {

enum ExitCode : int {
  kOk = 0,
  kConditionFailed = 1,  // check: some requested minimax condition fails
  kConfigError = 2,      // bad flags, config or data file
  kRuntimeError = 3,     // failure while computing
};

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

using NamedReport = std::pair<std::string, RiskReport>;

/// mean_config,estimator,risk,risk_se,prial,prial_se,replications,seed with
/// floats at 6 significant digits.
std::string report_csv(const std::vector<NamedReport>& reports);
nlohmann::json report_json(const std::vector<NamedReport>& reports);

nlohmann::json minimax_json(const MinimaxReport& report);

/// Contents of an estimate data file.
///
/// Numeric rows are X_1..X_k (p comma-separated values each).  Keyed rows:
///   S,<value>            residual sum of squares (required)
///   n,<value>            its degrees of freedom (required)
///   V,<c_1>,...,<c_k>    V_i = c_i I
///   V<i>,<p*p values>    full V_i, row-major
///   Q,<c> | Q,<p*p>      loss matrix, default V_1^{-1}
/// A first line that is neither numeric nor keyed is a header and skipped;
/// '#' starts a comment.
struct EstimateData {
  Sample sample;
  int n = 0;
  std::vector<Matrix> V;
  Matrix Q;
};

/// Throws ConfigError listing every problem found.
EstimateData parse_estimate_data(std::istream& in);

}  // namespace kshrink::cli

#endif  // KSHRINK_CLI_HPP_
