#ifndef KSHRINK_MINIMAX_HPP_
#define KSHRINK_MINIMAX_HPP_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kshrink/estimators.hpp"
#include "kshrink/statistics.hpp"

namespace kshrink {

/// tr(MQ), Ch_max(MQ) and their ratio for one of the matrices the minimaxity
/// conditions are stated in.  holds = (Ch_max != 0 and ratio > 2).
struct RootCondition {
  double trace = 0.0;
  double chmax = 0.0;
  double ratio = 0.0;
  bool holds = false;
};

/// Ratios within this distance of 2 count as failing, so an exact boundary
/// case is not decided by roundoff.
inline constexpr double kRatioSlack = 1e-10;

/// tr(MQ) and Ch_max(MQ).  A root below 1e-12 of max(|M|, input_scale) |Q| is
/// treated as zero, which fails the condition.
RootCondition root_condition(const Matrix& m, const SpdMatrix& q, double input_scale = 0.0);

struct MinimaxReport {
  RootCondition shrink;         // V_1 - A (or M_d for linear combinations)
  double phi_upper_theorem1 = 0.0;  // 2 (ratio - 2) / (n + 2)
  double phi_upper_theorem2 = 0.0;  // (ratio - 2) / (n + 2)
  std::optional<RootCondition> pooled;     // A, double shrinkage only
  std::optional<double> psi_upper_theorem2;  // (ratio_AQ - 2) / (n + 2)

  double trace() const { return shrink.trace; }
  double chmax() const { return shrink.chmax; }
  double ratio() const { return shrink.ratio; }
  /// Every condition this report covers.
  bool condition_holds() const { return shrink.holds && (!pooled || pooled->holds); }
};

/// Single-shrinkage conditions: M = V_1 - A.
MinimaxReport theorem1_report(const Design& design, const SpdMatrix& q);

/// Adds the A Q condition and the psi bound used by double shrinkage.
MinimaxReport theorem2_report(const Design& design, const SpdMatrix& q);

/// Linear combination sum d_i mu_i: M_d = sum d_i^2 V_i - (sum d_i)^2 A.
/// A zero M_d yields a report with chmax = 0 and the condition failing.
MinimaxReport theorem3_report(const Design& design, const SpdMatrix& q,
                              std::span<const double> d);

/// The HB constant a (with c = 1) that makes the HB supremum
/// (p(k-1) + 2a) / (n - 2(a + 1)) equal to (ratio - 2) / (n + 2).  The
/// equation is linear in a:
///   a = [(n - 2) R - p(k-1)(n + 2)] / [2(n + 2) + 2R],  R = ratio - 2.
/// Throws std::domain_error if the theorem-1 condition fails or the root
/// violates a > -p(k-1)/2 or a + 1 < n/2.
double solve_hb_a(const Design& design, const SpdMatrix& q);

struct ShrinkViolation {
  enum class Kind { NotPositive, AboveBound, DecreasingInFirst, IncreasingInS };
  Kind kind;
  double first;  // F or G
  double s;
  double value;
};

struct ShrinkCheck {
  bool passed = true;
  std::vector<ShrinkViolation> violations;
};

/// Grid check of 0 < phi <= bound, nondecreasing in the first argument and
/// nonincreasing in S.  Monotonicity is tested with a relative slack of tol
/// to absorb roundoff.  Grids must be strictly increasing.
ShrinkCheck check_shrink_function(const ShrinkFunction& phi, double bound,
                                  std::span<const double> first_grid,
                                  std::span<const double> s_grid, double tol = 1e-12);

/// Fills in any constants left unset in an EB/HEB/HB/PT config with the
/// choices that are optimal for the upper bound of the risk difference:
/// EB a0 = (ratio - 2)/(n + 2); HEB a0, b0 = half the theorem-2 bounds;
/// HB c = 1, L = 0 and a from solve_hb_a.
EstimatorConfig with_minimax_defaults(EstimatorConfig config, const Design& design,
                                      const SpdMatrix& q);

std::string violation_name(ShrinkViolation::Kind kind);

}  // namespace kshrink

#endif  // KSHRINK_MINIMAX_HPP_
