#include "kshrink/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace kshrink {

bool is_symmetric(const Matrix& m, double rel_tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1e-300, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

SpdMatrix::SpdMatrix(const Matrix& m) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw std::invalid_argument("SpdMatrix: matrix must be square and non-empty");
  if (!m.allFinite()) throw std::invalid_argument("SpdMatrix: non-finite entry");
  if (!is_symmetric(m)) throw std::invalid_argument("SpdMatrix: matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
  llt_.compute(m_);
  if (llt_.info() != Eigen::Success)
    throw std::invalid_argument("SpdMatrix: matrix is not positive definite");
}

SpdMatrix SpdMatrix::scalar(Eigen::Index dim, double c) {
  return SpdMatrix(c * Matrix::Identity(dim, dim));
}

Matrix SpdMatrix::inverse() const {
  Matrix inv = llt_.solve(Matrix::Identity(dim(), dim()));
  return 0.5 * (inv + inv.transpose());
}

double SpdMatrix::inv_quad(const Vector& v) const {
  // ||L^{-1} v||^2
  const Vector w = llt_.matrixL().solve(v);
  return w.squaredNorm();
}

namespace {

void require_same_dim(const Matrix& m, const SpdMatrix& q, const char* who) {
  if (m.rows() != m.cols() || m.rows() != q.dim()) {
    std::ostringstream os;
    os << who << ": dimension mismatch (" << m.rows() << "x" << m.cols() << " vs "
       << q.dim() << "x" << q.dim() << ")";
    throw std::invalid_argument(os.str());
  }
}

}  // namespace

double chmax_product(const Matrix& m, const SpdMatrix& q) {
  require_same_dim(m, q, "chmax_product");
  const Matrix sym = 0.5 * (m + m.transpose());
  const Matrix lower = q.llt().matrixL();
  const Matrix similar = lower.transpose() * sym * lower;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (similar + similar.transpose()),
                                            Eigen::EigenvaluesOnly);
  return std::max(0.0, eig.eigenvalues().maxCoeff());
}

double trace_product(const Matrix& m, const SpdMatrix& q) {
  require_same_dim(m, q, "trace_product");
  // tr(MQ) = sum_ij M_ij Q_ji
  return m.cwiseProduct(q.matrix().transpose()).sum();
}

double trace_ratio(const Matrix& m, const SpdMatrix& q) {
  const double top = chmax_product(m, q);
  const double scale = m.norm() * q.matrix().norm();
  if (!(top > 1e-14 * scale))
    throw DegenerateError("trace_ratio: maximum characteristic root is zero");
  return trace_product(m, q) / top;
}

double reg_inc_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0))
    throw std::domain_error("reg_inc_beta: requires a > 0, b > 0, 0 <= x <= 1");
  return boost::math::ibeta(a, b, x);
}

double reg_upper_inc_gamma(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0))
    throw std::domain_error("reg_upper_inc_gamma: requires a > 0, x >= 0");
  return boost::math::gamma_q(a, x);
}

double f_cdf(int d1, int d2, double x) {
  if (d1 < 1 || d2 < 1) throw std::domain_error("f_cdf: degrees of freedom must be >= 1");
  if (!(x >= 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  return boost::math::cdf(boost::math::fisher_f_distribution<double>(d1, d2), x);
}

double f_quantile(int d1, int d2, double alpha) {
  if (d1 < 1 || d2 < 1)
    throw std::domain_error("f_quantile: degrees of freedom must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::domain_error("f_quantile: alpha must lie in (0, 1)");
  const boost::math::fisher_f_distribution<double> dist(d1, d2);
  return boost::math::quantile(boost::math::complement(dist, alpha));
}

QuadratureResult adaptive_quad(const std::function<double(double)>& f, double lo,
                               double hi, double rel_tol, unsigned max_levels) {
  if (!(lo < hi)) throw std::invalid_argument("adaptive_quad: requires lo < hi");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("adaptive_quad: rel_tol must be > 0");

  QuadratureResult out;
  auto counted = [&](double x) {
    ++out.evaluations;
    const double y = f(x);
    if (!std::isfinite(y)) {
      std::ostringstream os;
      os << "adaptive_quad: integrand not finite at x = " << x;
      throw std::domain_error(os.str());
    }
    return y;
  };
  double err = 0.0;
  double l1 = 0.0;
  out.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      counted, lo, hi, max_levels, rel_tol, &err, &l1);
  out.abs_error_estimate = err;

  // Error estimates below roundoff on the L1 norm are as good as it gets.
  const double target = std::max(rel_tol * std::abs(out.value),
                                  4.0 * std::numeric_limits<double>::epsilon() * l1);
  if (err > target && err > 0.0) {
    std::ostringstream os;
    os << "adaptive_quad: no convergence after " << max_levels
       << " subdivision levels (estimate " << out.value << ", error " << err << ")";
    throw QuadratureError(os.str(), out);
  }
  return out;
}

}  // namespace kshrink
