#include "kshrink/statistics.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace kshrink {

namespace {

void require_nonempty_consistent(std::span<const SpdMatrix> v, std::span<const Vector> x,
                                 const char* who) {
  if (v.empty()) throw std::invalid_argument(std::string(who) + ": no populations");
  if (v.size() != x.size())
    throw std::invalid_argument(std::string(who) + ": number of V_i and X_i differ");
  const auto p = v.front().dim();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].dim() != p || x[i].size() != p)
      throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  }
}

Matrix precision_sum(std::span<const SpdMatrix> v) {
  if (v.empty()) throw std::invalid_argument("pooled_matrix: no populations");
  const auto p = v.front().dim();
  Matrix sum = Matrix::Zero(p, p);
  for (const auto& vi : v) {
    if (vi.dim() != p) throw std::invalid_argument("pooled_matrix: dimension mismatch");
    sum += vi.inverse();
  }
  return 0.5 * (sum + sum.transpose());
}

Vector weighted_sum(std::span<const SpdMatrix> v, std::span<const Vector> x) {
  Vector acc = Vector::Zero(v.front().dim());
  for (std::size_t i = 0; i < v.size(); ++i) acc += v[i].solve(x[i]);
  return acc;
}

// Sum of squared Mahalanobis deviations, together with a scale for deciding
// when that sum is zero up to roundoff.
struct Dispersion {
  double value = 0.0;
  double scale = 0.0;
};

Dispersion dispersion(std::span<const SpdMatrix> v, std::span<const Vector> x,
                      const Vector& nu_hat) {
  Dispersion d;
  for (std::size_t i = 0; i < v.size(); ++i) {
    d.value += v[i].inv_quad(x[i] - nu_hat);
    d.scale += v[i].inv_quad(x[i]);
  }
  return d;
}

bool vanishes(const Dispersion& d) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  return d.value <= 64.0 * eps * eps * d.scale;
}

void require_positive_s(double s, const char* who) {
  if (!(s > 0.0)) throw std::domain_error(std::string(who) + ": S must be > 0");
}

}  // namespace

SpdMatrix pooled_matrix(std::span<const SpdMatrix> v) {
  const Matrix precision = precision_sum(v);
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success)
    throw std::domain_error("pooled_matrix: singular precision sum");
  const auto p = precision.rows();
  const Matrix a = llt.solve(Matrix::Identity(p, p));
  return SpdMatrix(0.5 * (a + a.transpose()));
}

Vector pooled_mean(std::span<const SpdMatrix> v, std::span<const Vector> x) {
  require_nonempty_consistent(v, x, "pooled_mean");
  return pooled_matrix(v).matrix() * weighted_sum(v, x);
}

Design::Design(std::vector<SpdMatrix> v, int n)
    : v_(std::move(v)), n_(n), precision_(precision_sum(v_)), a_(pooled_matrix(v_)) {
  if (n_ < 1) throw std::invalid_argument("Design: n must be >= 1");
}

Design Design::from_spec(const ModelSpec& spec) {
  require_valid(spec);
  std::vector<SpdMatrix> v;
  v.reserve(spec.V.size());
  for (const auto& m : spec.V) v.emplace_back(m);
  return Design(std::move(v), spec.n);
}

Vector Design::pooled_mean(std::span<const Vector> x) const {
  require_nonempty_consistent(v_, x, "Design::pooled_mean");
  return precision_.solve(weighted_sum(v_, x));
}

PooledStats pooled_stats(const Sample& sample, const Design& design, const SpdMatrix* q) {
  require_positive_s(sample.S, "pooled_stats");
  PooledStats out;
  out.nu_hat = design.pooled_mean(sample.X);
  const Dispersion disp = dispersion(design.V(), sample.X, out.nu_hat);
  out.F = vanishes(disp) ? 0.0 : disp.value / sample.S;
  out.G = design.A().inv_quad(out.nu_hat) / sample.S;
  if (q != nullptr && !vanishes(disp)) {
    out.B = q->quad(sample.X.front() - out.nu_hat) / disp.value;
  }
  return out;
}

double stat_F(const Sample& sample, std::span<const SpdMatrix> v) {
  require_positive_s(sample.S, "stat_F");
  const Vector nu = pooled_mean(v, sample.X);
  const Dispersion disp = dispersion(v, sample.X, nu);
  return vanishes(disp) ? 0.0 : disp.value / sample.S;
}

double stat_G(const Vector& nu_hat, double s, const SpdMatrix& a) {
  require_positive_s(s, "stat_G");
  return a.inv_quad(nu_hat) / s;
}

double stat_G(const Sample& sample, std::span<const SpdMatrix> v) {
  return stat_G(pooled_mean(v, sample.X), sample.S, pooled_matrix(v));
}

double stat_B(const Sample& sample, std::span<const SpdMatrix> v, const SpdMatrix& q) {
  require_nonempty_consistent(v, sample.X, "stat_B");
  if (q.dim() != v.front().dim()) throw std::invalid_argument("stat_B: Q dimension mismatch");
  const Vector nu = pooled_mean(v, sample.X);
  const Dispersion disp = dispersion(v, sample.X, nu);
  if (vanishes(disp)) throw DegenerateError("stat_B: all X_i coincide, B undefined");
  return q.quad(sample.X.front() - nu) / disp.value;
}

double lemma_in_gap(std::span<const Vector> x, std::span<const SpdMatrix> v) {
  require_nonempty_consistent(v, x, "lemma_in_gap");
  if (v.size() < 2) throw std::invalid_argument("lemma_in_gap: requires k >= 2");
  const SpdMatrix a = pooled_matrix(v);
  const SpdMatrix complement(v.front().matrix() - a.matrix());
  const Vector nu = a.matrix() * weighted_sum(v, x);
  const double lhs = dispersion(v, x, nu).value;
  const double rhs = complement.inv_quad(x.front() - nu);
  return lhs - rhs;
}

Matrix contrast_covariance(std::span<const SpdMatrix> v, const SpdMatrix& a,
                           std::span<const double> d) {
  if (d.size() != v.size())
    throw std::invalid_argument("contrast_covariance: need one weight per population");
  const auto p = a.dim();
  Matrix m = Matrix::Zero(p, p);
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    m += d[i] * d[i] * v[i].matrix();
    total += d[i];
  }
  m -= total * total * a.matrix();
  return 0.5 * (m + m.transpose());
}

LinearBound linear_bound_check(std::span<const Vector> x, std::span<const SpdMatrix> v,
                               const SpdMatrix& q, std::span<const double> d) {
  require_nonempty_consistent(v, x, "linear_bound_check");
  if (d.size() != v.size())
    throw std::invalid_argument("linear_bound_check: need one weight per population");
  const SpdMatrix a = pooled_matrix(v);
  const Vector nu = a.matrix() * weighted_sum(v, x);
  const Dispersion disp = dispersion(v, x, nu);
  if (vanishes(disp)) throw DegenerateError("linear_bound_check: all x_i coincide");
  Vector contrast = Vector::Zero(a.dim());
  for (std::size_t i = 0; i < x.size(); ++i) contrast += d[i] * (x[i] - nu);
  LinearBound out;
  out.B_value = q.quad(contrast) / disp.value;
  out.bound = chmax_product(contrast_covariance(v, a, d), q);
  return out;
}

}  // namespace kshrink
