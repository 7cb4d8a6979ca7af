#ifndef KSHRINK_ESTIMATORS_HPP_
#define KSHRINK_ESTIMATORS_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kshrink/model.hpp"
#include "kshrink/statistics.hpp"

namespace kshrink {

enum class EstimatorKind { PT, JS, EB, HB, HEB, LINCOMB, CLASS1, CLASS2 };

std::string_view kind_name(EstimatorKind kind);
std::optional<EstimatorKind> parse_kind(std::string_view name);

/// phi(F, S) or psi(G, S).  Must be reentrant: the simulator calls it from
/// several threads.
using ShrinkFunction = std::function<double(double, double)>;

/// Constants of the hierarchical prior: pi(tau^2 | sigma^2) ~ (sigma^2 /
/// (tau^2 + sigma^2))^{a+1}, pi(sigma^2) ~ (sigma^2)^{c-2} on sigma^2 <= 1/L.
struct HbParams {
  double a = 0.0;
  double c = 1.0;
  double L = 0.0;
};

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::EB;
  std::string label;  // defaults to the kind name
  double alpha = 0.05;             // PT
  std::optional<double> a0;        // EB, HEB
  std::optional<double> b0;        // HEB
  std::optional<HbParams> hb;      // HB
  std::vector<double> d;           // LINCOMB
  ShrinkFunction phi;              // CLASS1, CLASS2, LINCOMB
  ShrinkFunction psi;              // CLASS2

  std::string display_name() const;
};

// --- the individual rules -------------------------------------------------

/// (p(k-1)/n) F_{p(k-1), n, alpha}; PT keeps X_1 when F exceeds it.
double pt_threshold(const Design& design, double alpha);

Vector pt_estimate(const Sample& sample, const Design& design, double alpha);

/// X_1 - ((p-2)/(n+2)) (S / ||X_1||^2_{V_1^{-1}}) X_1; returns 0 at X_1 = 0.
Vector js_estimate(const Sample& sample, const Design& design);

/// X_1 - (phi(F,S)/F)(X_1 - nu_hat).  At F = 0 all X_i agree and the result
/// is nu_hat.
Vector class1_estimate(const Sample& sample, const Design& design, const ShrinkFunction& phi);

/// Class-1 step followed by shrinking nu_hat toward zero by psi(G,S)/G.
Vector class2_estimate(const Sample& sample, const Design& design, const ShrinkFunction& phi,
                       const ShrinkFunction& psi);

/// X_1 - min(a0/F, 1)(X_1 - nu_hat), with min(a0/0, 1) = 1.
Vector eb_estimate(const Sample& sample, const Design& design, double a0);

/// Hierarchical-Bayes shrink function phi^HB(F, S).
///
/// With s = p(k-1)/2 + a and N = (n + p(k-1))/2 - c, and after the inner
/// integral over the precision scale has been done in closed form,
///
///   phi^HB = int_0^F x^s w(x) dx / int_0^F x^{s-1} w(x) dx,
///   w(x) = (1+x)^{-(N+1)} Q(N+1, L S (1+x)/2),
///
/// Q being the regularized upper incomplete gamma.  For L = 0 the weight is
/// a pure power and both integrals are incomplete beta functions; for L > 0
/// the outer integral is done by adaptive_quad.  F = +inf is accepted for
/// L = 0 and gives the supremum (p(k-1)+2a)/(n-2(a+c)).
///
/// Requires a > -p(k-1)/2, a + c < n/2, L >= 0.
double phi_hb(double F, double S, int p, int k, int n, const HbParams& hb);

/// phi^HB by adaptive quadrature for every L, including L = 0.
double phi_hb_quadrature(double F, double S, int p, int k, int n, const HbParams& hb,
                         double rel_tol = kDefaultQuadRelTol);

/// phi^HB(F,S)/F, continuous at F = 0 where it equals s/(s+1).
double hb_shrink_factor(double F, double S, int p, int k, int n, const HbParams& hb);

Vector hb_estimate(const Sample& sample, const Design& design, const HbParams& hb);

/// X_1 - min(a0/F,1)(X_1 - nu_hat) - min(b0/G,1) nu_hat; b0 must be > 0.
Vector heb_estimate(const Sample& sample, const Design& design, double a0, double b0);

/// Bayes rule under the uniform second-stage prior with tau^2, sigma^2 known.
Vector bayes_oracle_uniform(const Sample& sample, const Design& design, double tau2,
                            double sigma2);

/// Bayes rule under nu ~ N(0, gamma^2 A) with all variances known.
Vector bayes_oracle_normal(const Sample& sample, const Design& design, double tau2,
                           double gamma2, double sigma2);

/// sum_i d_i [X_i - (phi(F,S)/F)(X_i - nu_hat)]
Vector lincomb_estimate(const Sample& sample, const Design& design, std::span<const double> d,
                        const ShrinkFunction& phi);

// --- configured estimator -------------------------------------------------

/// An EstimatorConfig bound to a Design, with per-design constants (the PT
/// threshold, HB exponents) computed once.  Immutable and thread-safe.
class Estimator {
 public:
  Estimator(EstimatorConfig config, const Design& design);

  Vector estimate(const Sample& sample, const PooledStats& stats) const;
  Vector estimate(const Sample& sample) const;

  const EstimatorConfig& config() const { return config_; }
  std::string label() const { return config_.display_name(); }

 private:
  EstimatorConfig config_;
  Design design_;
  double pt_threshold_ = 0.0;
};

/// Throws std::invalid_argument naming the first missing or out-of-range
/// field for the chosen kind.
void validate_config(const EstimatorConfig& config, const Design& design);

}  // namespace kshrink

#endif  // KSHRINK_ESTIMATORS_HPP_
