#ifndef KSHRINK_STATISTICS_HPP_
#define KSHRINK_STATISTICS_HPP_

#include <optional>
#include <span>
#include <vector>

#include "kshrink/model.hpp"
#include "kshrink/numerics.hpp"

namespace kshrink {

/// A = (sum_i V_i^{-1})^{-1}, via SPD solves and symmetrized.
SpdMatrix pooled_matrix(std::span<const SpdMatrix> v);

/// nu_hat = A sum_i V_i^{-1} X_i, the precision-weighted mean.
Vector pooled_mean(std::span<const SpdMatrix> v, std::span<const Vector> x);

/// The known part of the problem that every estimator may use: the V_i, the
/// pooled covariance A and the chi-square degrees of freedom n.  Immutable.
class Design {
 public:
  Design(std::vector<SpdMatrix> v, int n);
  static Design from_spec(const ModelSpec& spec);

  int p() const { return static_cast<int>(a_.dim()); }
  int k() const { return static_cast<int>(v_.size()); }
  int n() const { return n_; }
  const std::vector<SpdMatrix>& V() const { return v_; }
  const SpdMatrix& V(int i) const { return v_[static_cast<std::size_t>(i)]; }
  const SpdMatrix& A() const { return a_; }

  Vector pooled_mean(std::span<const Vector> x) const;

 private:
  std::vector<SpdMatrix> v_;
  int n_;
  Eigen::LLT<Matrix> precision_;  // sum_i V_i^{-1}
  SpdMatrix a_;
};

/// Per-sample pooled quantities.  B is absent when every X_i coincides with
/// nu_hat (its denominator vanishes).
struct PooledStats {
  Vector nu_hat;
  double F = 0.0;
  double G = 0.0;
  std::optional<double> B;
};

/// nu_hat, F, G in one pass.  B is filled only when q is given.
PooledStats pooled_stats(const Sample& sample, const Design& design,
                         const SpdMatrix* q = nullptr);

/// sum_i ||X_i - nu_hat||^2_{V_i^{-1}} / S
double stat_F(const Sample& sample, std::span<const SpdMatrix> v);

/// ||nu_hat||^2_{A^{-1}} / S
double stat_G(const Vector& nu_hat, double s, const SpdMatrix& a);
double stat_G(const Sample& sample, std::span<const SpdMatrix> v);

/// (X_1 - nu_hat)' Q (X_1 - nu_hat) / sum_j ||X_j - nu_hat||^2_{V_j^{-1}}.
/// Throws DegenerateError when all X_j coincide.
double stat_B(const Sample& sample, std::span<const SpdMatrix> v, const SpdMatrix& q);

/// LHS - RHS of
///   sum_j ||x_j - nu_hat||^2_{V_j^{-1}} >= ||x_1 - nu_hat||^2_{(V_1 - A)^{-1}},
/// which is never negative and vanishes identically for k = 2.
/// Throws std::invalid_argument if V_1 - A is not positive definite.
double lemma_in_gap(std::span<const Vector> x, std::span<const SpdMatrix> v);

struct LinearBound {
  double B_value = 0.0;
  double bound = 0.0;
};

/// B(x) for the contrast sum_i d_i (x_i - nu_hat), against its upper bound
/// Ch_max((sum d_i^2 V_i - (sum d_i)^2 A) Q).
LinearBound linear_bound_check(std::span<const Vector> x, std::span<const SpdMatrix> v,
                               const SpdMatrix& q, std::span<const double> d);

/// sum d_i^2 V_i - (sum d_i)^2 A, symmetrized.
Matrix contrast_covariance(std::span<const SpdMatrix> v, const SpdMatrix& a,
                           std::span<const double> d);

}  // namespace kshrink

#endif  // KSHRINK_STATISTICS_HPP_
