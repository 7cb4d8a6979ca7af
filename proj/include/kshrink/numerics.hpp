#ifndef KSHRINK_NUMERICS_HPP_
#define KSHRINK_NUMERICS_HPP_

#include <functional>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace kshrink {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a quantity the theory needs is degenerate on the given input,
/// e.g. a zero maximum characteristic root or an all-equal sample.
class DegenerateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Symmetric positive definite matrix with its Cholesky factor.
///
/// Construction symmetrizes the input after checking that it is symmetric to
/// within 1e-12 relative to its largest entry; a failed LLT factorization is
/// what "not positive definite" means here.  Both failures throw
/// std::invalid_argument.
class SpdMatrix {
 public:
  explicit SpdMatrix(const Matrix& m);

  static SpdMatrix scalar(Eigen::Index dim, double c);

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  const Eigen::LLT<Matrix>& llt() const { return llt_; }

  /// M^{-1} v
  Vector solve(const Vector& v) const { return llt_.solve(v); }
  /// M^{-1}, via the factorization.
  Matrix inverse() const;
  /// v' M v
  double quad(const Vector& v) const { return v.dot(m_ * v); }
  /// v' M^{-1} v
  double inv_quad(const Vector& v) const;

 private:
  Matrix m_;
  Eigen::LLT<Matrix> llt_;
};

/// True when m is square and symmetric to within rel_tol of its largest entry.
bool is_symmetric(const Matrix& m, double rel_tol = 1e-12);

/// Largest eigenvalue of M Q for symmetric PSD M and SPD Q.
///
/// With Q = L L', the product M Q is similar to the symmetric L' M L, so the
/// spectrum is real and the symmetric eigensolver applies.  Tiny negative
/// roundoff is clamped to zero.
double chmax_product(const Matrix& m, const SpdMatrix& q);

/// tr(M Q) / Ch_max(M Q).  Throws DegenerateError when Ch_max is zero.
double trace_ratio(const Matrix& m, const SpdMatrix& q);

/// tr(M Q) without forming the product.
double trace_product(const Matrix& m, const SpdMatrix& q);

/// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double a, double b, double x);

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
double reg_upper_inc_gamma(double a, double x);

/// P(F <= x) for F ~ F(d1, d2).
double f_cdf(int d1, int d2, double x);

/// Upper alpha point of F(d1, d2): the q with P(F > q) = alpha.
double f_quantile(int d1, int d2, double alpha);

struct QuadratureResult {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  int evaluations = 0;
};

/// Thrown when adaptive_quad exhausts its subdivision budget; carries the
/// best estimate obtained.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, QuadratureResult best)
      : std::runtime_error(what), best_(best) {}
  const QuadratureResult& best() const { return best_; }

 private:
  QuadratureResult best_;
};

inline constexpr double kDefaultQuadRelTol = 1e-10;
inline constexpr unsigned kDefaultQuadMaxLevels = 60;

/// Adaptive Gauss-Kronrod (7/15) integration of f over [lo, hi].
QuadratureResult adaptive_quad(const std::function<double(double)>& f, double lo,
                               double hi, double rel_tol = kDefaultQuadRelTol,
                               unsigned max_levels = kDefaultQuadMaxLevels);

}  // namespace kshrink

#endif  // KSHRINK_NUMERICS_HPP_
