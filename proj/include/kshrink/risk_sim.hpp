#ifndef KSHRINK_RISK_SIM_HPP_
#define KSHRINK_RISK_SIM_HPP_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kshrink/estimators.hpp"
#include "kshrink/model.hpp"

namespace kshrink {

struct SimPlan {
  ModelSpec spec;
  std::vector<EstimatorConfig> estimators;
  std::int64_t replications = 1;
  std::uint64_t seed = 0;
  bool common_random_numbers = true;
};

struct EstimatorRisk {
  std::string label;
  double risk = 0.0;
  double std_error = 0.0;
  double prial = 0.0;
  double prial_std_error = 0.0;
};

struct RiskReport {
  std::vector<EstimatorRisk> estimators;
  double baseline_risk = 0.0;  // Monte Carlo risk of X_1
  double baseline_std_error = 0.0;
  double trace_v1q = 0.0;      // exact risk of X_1
  std::int64_t replications = 0;
  std::uint64_t seed = 0;
};

class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, std::int64_t replication, std::uint64_t seed)
      : std::runtime_error(what), replication_(replication), seed_(seed) {}
  std::int64_t replication() const { return replication_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::int64_t replication_;
  std::uint64_t seed_;
};

/// The generator for replication r, stream j.  A pure function of
/// (seed, r, j), so results do not depend on how replications are spread
/// over workers, nor (for a fixed seed) on the mean configuration.
Rng replication_stream(std::uint64_t seed, std::int64_t replication, std::uint32_t stream = 0);

/// Fills unset estimator constants with the minimax-optimal defaults, then
/// checks every config against the spec.  Throws std::invalid_argument.
std::vector<EstimatorConfig> resolve_estimators(const SimPlan& plan);

/// Monte Carlo risk and PRIAL of every estimator in the plan, relative to the
/// unshrunk X_1.  With common random numbers each replication draws one
/// sample shared by all estimators and the PRIAL standard error is the
/// delta-method error of the paired ratio; otherwise each estimator draws its
/// own sample.  Deterministic for any number of workers.
RiskReport simulate_risk(const SimPlan& plan, unsigned workers = 1);

struct NamedPlan {
  std::string name;
  SimPlan plan;
};

/// The eleven mean configurations of the reference k = 5, p = 5 experiment
/// (n = 20, sigma2 = 2, V_i = 0.1 i I, Q = V_1^{-1}) with estimators PT, JS,
/// EB, HB and HEB at their minimax-optimal constants.
std::vector<NamedPlan> table1_preset(std::int64_t replications = 5000, std::uint64_t seed = 42,
                                     double alpha = 0.05);

/// Reported values of the reference experiment (5,000 replications), in the
/// order of table1_preset(); columns PT, JS, EB, HB, HEB.
struct Table1Row {
  const char* name;
  double prial[5];
};
const std::vector<Table1Row>& table1_reference();

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double std_error = 0.0;  // of the paired difference lhs - rhs
  std::int64_t replications = 0;

  bool agrees(double n_se = 4.0) const;
};

/// h : R^p -> R^p with its Jacobian J(y)_{ij} = dh_i / dy_j.
struct VectorField {
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
};

/// Monte Carlo check of E[(Y - mu)' h(Y)] = E[tr(Sigma grad h(Y)')] for
/// Y ~ N_p(mu, Sigma).
IdentityCheck stein_identity_check(const VectorField& h, const Vector& mu, const Matrix& sigma,
                                   std::int64_t replications, std::uint64_t seed);

struct ScalarField {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// Monte Carlo check of E[S g(S)] = sigma2 E[n g(S) + 2 S g'(S)] for
/// S / sigma2 ~ chi^2_n.
IdentityCheck chisq_identity_check(const ScalarField& g, int n, double sigma2,
                                   std::int64_t replications, std::uint64_t seed);

}  // namespace kshrink

#endif  // KSHRINK_RISK_SIM_HPP_
