#include "kshrink/model.hpp"

#include <cmath>
#include <sstream>

namespace kshrink {

namespace {

std::string join_issues(const std::vector<SpecIssue>& issues) {
  std::ostringstream os;
  os << "invalid model spec";
  for (const auto& issue : issues) os << "; " << issue.field << ": " << issue.message;
  return os.str();
}

std::string indexed(const char* name, std::size_t i) {
  return std::string(name) + "[" + std::to_string(i + 1) + "]";
}

// Empty string when m is SPD, otherwise the reason.
std::string spd_problem(const Matrix& m, Eigen::Index p) {
  if (m.rows() != p || m.cols() != p) {
    std::ostringstream os;
    os << "expected " << p << "x" << p << ", got " << m.rows() << "x" << m.cols();
    return os.str();
  }
  if (!m.allFinite()) return "non-finite entry";
  if (!is_symmetric(m)) return "not symmetric";
  Eigen::LLT<Matrix> llt(0.5 * (m + m.transpose()));
  if (llt.info() != Eigen::Success) return "not positive definite";
  return {};
}

}  // namespace

SpecError::SpecError(std::vector<SpecIssue> issues)
    : std::invalid_argument(join_issues(issues)), issues_(std::move(issues)) {}

std::vector<SpecIssue> validate_spec(const ModelSpec& spec) {
  std::vector<SpecIssue> issues;
  if (spec.p < 1) issues.push_back({"p", "dimension must be >= 1"});
  if (spec.k < 2)
    issues.push_back({"k", "need at least two populations for pooling (k >= 2)"});
  if (spec.n < 1) issues.push_back({"n", "degrees of freedom must be >= 1"});
  if (!(spec.sigma2 > 0.0) || !std::isfinite(spec.sigma2))
    issues.push_back({"sigma2", "must be finite and > 0"});
  if (spec.V.size() != static_cast<std::size_t>(std::max(spec.k, 0))) {
    issues.push_back({"V", "expected " + std::to_string(spec.k) + " matrices, got " +
                               std::to_string(spec.V.size())});
  }
  if (spec.mu.size() != static_cast<std::size_t>(std::max(spec.k, 0))) {
    issues.push_back({"mu", "expected " + std::to_string(spec.k) + " vectors, got " +
                                std::to_string(spec.mu.size())});
  }
  if (spec.p < 1) return issues;

  bool all_v_ok = !spec.V.empty();
  for (std::size_t i = 0; i < spec.V.size(); ++i) {
    const auto why = spd_problem(spec.V[i], spec.p);
    if (!why.empty()) {
      issues.push_back({indexed("V", i), why});
      all_v_ok = false;
    }
  }
  if (const auto why = spd_problem(spec.Q, spec.p); !why.empty()) issues.push_back({"Q", why});
  for (std::size_t i = 0; i < spec.mu.size(); ++i) {
    if (spec.mu[i].size() != spec.p) {
      issues.push_back({indexed("mu", i), "expected length " + std::to_string(spec.p) +
                                              ", got " + std::to_string(spec.mu[i].size())});
    } else if (!spec.mu[i].allFinite()) {
      issues.push_back({indexed("mu", i), "non-finite entry"});
    }
  }

  // V_1 - A must be positive definite.
  if (all_v_ok && spec.V.size() >= 2) {
    Matrix precision = Matrix::Zero(spec.p, spec.p);
    for (const auto& v : spec.V) precision += SpdMatrix(v).inverse();
    const Matrix a = SpdMatrix(precision).inverse();
    if (const auto why = spd_problem(spec.V[0] - a, spec.p); !why.empty())
      issues.push_back({"V[1]-A", why});
  }
  return issues;
}

void require_valid(const ModelSpec& spec) {
  auto issues = validate_spec(spec);
  if (!issues.empty()) throw SpecError(std::move(issues));
}

SampleGenerator::SampleGenerator(const ModelSpec& spec)
    : p_(spec.p), n_(spec.n), sigma2_(spec.sigma2), mu_(spec.mu) {
  require_valid(spec);
  scaled_chol_.reserve(spec.V.size());
  for (const auto& v : spec.V) {
    const SpdMatrix cov(spec.sigma2 * v);
    scaled_chol_.emplace_back(cov.llt().matrixL());
  }
}

Sample SampleGenerator::draw(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  Sample s;
  s.X.reserve(mu_.size());
  Vector z(p_);
  for (std::size_t i = 0; i < mu_.size(); ++i) {
    for (int j = 0; j < p_; ++j) z[j] = normal(rng);
    s.X.push_back(mu_[i] + scaled_chol_[i].triangularView<Eigen::Lower>() * z);
  }
  std::gamma_distribution<double> chi2(0.5 * n_, 2.0);
  s.S = sigma2_ * chi2(rng);
  return s;
}

Sample sample_draw(const ModelSpec& spec, Rng& rng) {
  return SampleGenerator(spec).draw(rng);
}

double loss(const Vector& delta, const Vector& mu1, double sigma2, const SpdMatrix& q) {
  if (delta.size() != mu1.size() || delta.size() != q.dim())
    throw std::invalid_argument("loss: dimension mismatch");
  if (!(sigma2 > 0.0)) throw std::invalid_argument("loss: sigma2 must be > 0");
  return q.quad(delta - mu1) / sigma2;
}

}  // namespace kshrink
