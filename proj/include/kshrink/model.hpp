#ifndef KSHRINK_MODEL_HPP_
#define KSHRINK_MODEL_HPP_

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kshrink/numerics.hpp"

namespace kshrink {

using Rng = std::mt19937_64;

/// The k-sample model: X_i ~ N_p(mu_i, sigma2 V_i) independently for
/// i = 1..k, and S / sigma2 ~ chi^2_n independent of the X_i.  Index 0 is
/// population 1, whose mean is the estimation target.
struct ModelSpec {
  int p = 0;
  int k = 0;
  int n = 0;
  std::vector<Matrix> V;
  Matrix Q;
  double sigma2 = 1.0;
  std::vector<Vector> mu;
};

/// One draw of (X_1, ..., X_k, S).
struct Sample {
  std::vector<Vector> X;
  double S = 0.0;
};

struct SpecIssue {
  std::string field;
  std::string message;
};

class SpecError : public std::invalid_argument {
 public:
  explicit SpecError(std::vector<SpecIssue> issues);
  const std::vector<SpecIssue>& issues() const { return issues_; }

 private:
  std::vector<SpecIssue> issues_;
};

/// Every violated invariant, each tagged with its field.  Empty means valid.
std::vector<SpecIssue> validate_spec(const ModelSpec& spec);

/// Throws SpecError unless validate_spec is empty.
void require_valid(const ModelSpec& spec);

/// Draws samples from a validated spec.  Cholesky factors of sigma2 V_i are
/// computed once; draw() is const and may be shared between threads as long
/// as each thread owns its Rng.
class SampleGenerator {
 public:
  explicit SampleGenerator(const ModelSpec& spec);

  Sample draw(Rng& rng) const;

  int p() const { return p_; }
  int k() const { return static_cast<int>(mu_.size()); }

 private:
  int p_;
  int n_;
  double sigma2_;
  std::vector<Vector> mu_;
  std::vector<Matrix> scaled_chol_;
};

/// Convenience one-shot draw; factors the covariances on every call.
Sample sample_draw(const ModelSpec& spec, Rng& rng);

/// (delta - mu1)' Q (delta - mu1) / sigma2
double loss(const Vector& delta, const Vector& mu1, double sigma2, const SpdMatrix& q);

}  // namespace kshrink

#endif  // KSHRINK_MODEL_HPP_
