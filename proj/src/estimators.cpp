#include "kshrink/estimators.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

namespace kshrink {

namespace {

constexpr std::array<std::pair<EstimatorKind, std::string_view>, 8> kKindNames{{
    {EstimatorKind::PT, "PT"},
    {EstimatorKind::JS, "JS"},
    {EstimatorKind::EB, "EB"},
    {EstimatorKind::HB, "HB"},
    {EstimatorKind::HEB, "HEB"},
    {EstimatorKind::LINCOMB, "LINCOMB"},
    {EstimatorKind::CLASS1, "CLASS1"},
    {EstimatorKind::CLASS2, "CLASS2"},
}};

// min(c / t, 1) with min(c / 0, 1) = 1.
double clipped_ratio(double c, double t) { return t > 0.0 ? std::min(c / t, 1.0) : 1.0; }

Vector toward(const Vector& x1, const Vector& target, double factor) {
  return x1 - factor * (x1 - target);
}

struct HbExponents {
  double s;  // p(k-1)/2 + a
  double N;  // (n + p(k-1))/2 - c
};

HbExponents hb_exponents(int p, int k, int n, const HbParams& hb) {
  if (p < 1 || k < 2 || n < 1)
    throw std::invalid_argument("phi_hb: requires p >= 1, k >= 2, n >= 1");
  const double q = 0.5 * p * (k - 1);
  if (!(hb.a > -q)) {
    std::ostringstream os;
    os << "phi_hb: requires a > -p(k-1)/2 = " << -q << ", got a = " << hb.a;
    throw std::domain_error(os.str());
  }
  if (!(hb.a + hb.c < 0.5 * n)) {
    std::ostringstream os;
    os << "phi_hb: requires a + c < n/2 = " << 0.5 * n << ", got a + c = " << hb.a + hb.c;
    throw std::domain_error(os.str());
  }
  if (!(hb.L >= 0.0) || !std::isfinite(hb.L))
    throw std::domain_error("phi_hb: requires finite L >= 0");
  return {q + hb.a, 0.5 * (n + p * (k - 1)) - hb.c};
}

// Below this F the incomplete-beta ratio is replaced by its limit.
constexpr double kTinyF = 1e-200;

double phi_hb_closed(double F, const HbExponents& e) {
  const double b = e.N - e.s;  // n/2 - a - c > 0
  const double sup = e.s / b;
  if (std::isinf(F)) return sup;
  const double z = F / (1.0 + F);
  const double num = reg_inc_beta(e.s + 1.0, b, z);
  const double den = reg_inc_beta(e.s, b + 1.0, z);
  return sup * num / den;
}

}  // namespace

std::string_view kind_name(EstimatorKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "?";
}

std::optional<EstimatorKind> parse_kind(std::string_view name) {
  std::string upper(name);
  std::transform(upper.begin(), upper.end(), upper.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
  for (const auto& [k, n] : kKindNames)
    if (n == upper) return k;
  return std::nullopt;
}

std::string EstimatorConfig::display_name() const {
  return label.empty() ? std::string(kind_name(kind)) : label;
}

double pt_threshold(const Design& design, double alpha) {
  const int df1 = design.p() * (design.k() - 1);
  return static_cast<double>(df1) / design.n() * f_quantile(df1, design.n(), alpha);
}

Vector pt_estimate(const Sample& sample, const Design& design, double alpha) {
  const PooledStats st = pooled_stats(sample, design);
  return st.F > pt_threshold(design, alpha) ? sample.X.front() : st.nu_hat;
}

Vector js_estimate(const Sample& sample, const Design& design) {
  const Vector& x1 = sample.X.front();
  const double norm = design.V(0).inv_quad(x1);
  if (!(norm > 0.0)) return Vector::Zero(x1.size());
  const double coef = static_cast<double>(design.p() - 2) / (design.n() + 2);
  return x1 - coef * (sample.S / norm) * x1;
}

Vector class1_estimate(const Sample& sample, const Design& design, const ShrinkFunction& phi) {
  const PooledStats st = pooled_stats(sample, design);
  if (st.F == 0.0) return st.nu_hat;
  return toward(sample.X.front(), st.nu_hat, phi(st.F, sample.S) / st.F);
}

Vector class2_estimate(const Sample& sample, const Design& design, const ShrinkFunction& phi,
                       const ShrinkFunction& psi) {
  const PooledStats st = pooled_stats(sample, design);
  Vector out = st.F == 0.0 ? st.nu_hat
                           : toward(sample.X.front(), st.nu_hat, phi(st.F, sample.S) / st.F);
  if (st.G > 0.0) out -= (psi(st.G, sample.S) / st.G) * st.nu_hat;
  return out;
}

Vector eb_estimate(const Sample& sample, const Design& design, double a0) {
  const PooledStats st = pooled_stats(sample, design);
  return toward(sample.X.front(), st.nu_hat, clipped_ratio(a0, st.F));
}

double phi_hb(double F, double S, int p, int k, int n, const HbParams& hb) {
  const HbExponents e = hb_exponents(p, k, n, hb);
  if (!(F >= 0.0)) throw std::domain_error("phi_hb: F must be >= 0");
  if (F == 0.0) return 0.0;
  if (hb.L == 0.0) {
    if (F < kTinyF) return F * e.s / (e.s + 1.0);
    return phi_hb_closed(F, e);
  }
  return phi_hb_quadrature(F, S, p, k, n, hb);
}

double phi_hb_quadrature(double F, double S, int p, int k, int n, const HbParams& hb,
                         double rel_tol) {
  const HbExponents e = hb_exponents(p, k, n, hb);
  if (!(F > 0.0) || !std::isfinite(F))
    throw std::domain_error("phi_hb_quadrature: F must be finite and > 0");
  if (hb.L > 0.0 && !(S > 0.0)) throw std::domain_error("phi_hb_quadrature: S must be > 0");

  // x = e^y gives smooth integrands x^s w(x) and x^{s+1} w(x) in y.  Below
  // y_lo the remaining mass is at most e^{s y_lo}/s relative to the scale c^s.
  const double shape = e.N + 1.0;
  const double cut = 0.5 * hb.L * S;
  // log of w at x = 0 as the common scale, so the weight stays <= 1.
  const double log_w0 =
      hb.L > 0.0 ? std::log(reg_upper_inc_gamma(shape, cut)) : 0.0;
  if (!std::isfinite(log_w0))
    throw std::domain_error("phi_hb_quadrature: incomplete gamma underflows at L S / 2");
  const double log_c = std::min(std::log(F), 0.0);
  const double y_hi = std::log(F);
  const double y_lo = log_c - 45.0 / e.s;
  auto base = [&](double y) {
    const double x = std::exp(y);
    double log_w = -shape * std::log1p(x) + e.s * (y - log_c);
    if (hb.L > 0.0) {
      const double g = reg_upper_inc_gamma(shape, cut * (1.0 + x));
      if (g <= 0.0) return 0.0;
      log_w += std::log(g);
    }
    return std::exp(log_w - log_w0);
  };
  const auto den = adaptive_quad(base, y_lo, y_hi, rel_tol);
  const auto num = adaptive_quad([&](double y) { return std::exp(y) * base(y); }, y_lo, y_hi,
                                 rel_tol);
  if (!(den.value > 0.0))
    throw std::domain_error("phi_hb_quadrature: denominator integral underflows");
  return num.value / den.value;
}

double hb_shrink_factor(double F, double S, int p, int k, int n, const HbParams& hb) {
  const HbExponents e = hb_exponents(p, k, n, hb);
  if (!(F >= 0.0)) throw std::domain_error("hb_shrink_factor: F must be >= 0");
  if (F < kTinyF) return e.s / (e.s + 1.0);
  if (std::isinf(F)) return 0.0;
  return phi_hb(F, S, p, k, n, hb) / F;
}

Vector hb_estimate(const Sample& sample, const Design& design, const HbParams& hb) {
  const PooledStats st = pooled_stats(sample, design);
  const double factor =
      hb_shrink_factor(st.F, sample.S, design.p(), design.k(), design.n(), hb);
  return toward(sample.X.front(), st.nu_hat, factor);
}

Vector heb_estimate(const Sample& sample, const Design& design, double a0, double b0) {
  if (!(b0 > 0.0)) throw std::invalid_argument("heb_estimate: b0 must be > 0");
  const PooledStats st = pooled_stats(sample, design);
  return toward(sample.X.front(), st.nu_hat, clipped_ratio(a0, st.F)) -
         clipped_ratio(b0, st.G) * st.nu_hat;
}

Vector bayes_oracle_uniform(const Sample& sample, const Design& design, double tau2,
                            double sigma2) {
  if (!(tau2 > 0.0) || !(sigma2 > 0.0))
    throw std::invalid_argument("bayes_oracle_uniform: variances must be > 0");
  const Vector nu = design.pooled_mean(sample.X);
  return toward(sample.X.front(), nu, sigma2 / (tau2 + sigma2));
}

Vector bayes_oracle_normal(const Sample& sample, const Design& design, double tau2,
                           double gamma2, double sigma2) {
  if (!(tau2 > 0.0) || !(gamma2 > 0.0) || !(sigma2 > 0.0))
    throw std::invalid_argument("bayes_oracle_normal: variances must be > 0");
  const Vector nu = design.pooled_mean(sample.X);
  return toward(sample.X.front(), nu, sigma2 / (tau2 + sigma2)) -
         (sigma2 / (gamma2 + tau2 + sigma2)) * nu;
}

Vector lincomb_estimate(const Sample& sample, const Design& design, std::span<const double> d,
                        const ShrinkFunction& phi) {
  if (d.size() != sample.X.size())
    throw std::invalid_argument("lincomb_estimate: need one weight per population");
  const PooledStats st = pooled_stats(sample, design);
  const double factor = st.F > 0.0 ? phi(st.F, sample.S) / st.F : 0.0;
  Vector out = Vector::Zero(st.nu_hat.size());
  for (std::size_t i = 0; i < d.size(); ++i)
    out += d[i] * toward(sample.X[i], st.nu_hat, factor);
  return out;
}

void validate_config(const EstimatorConfig& config, const Design& design) {
  const std::string who = config.display_name();
  auto fail = [&](const std::string& msg) { throw std::invalid_argument(who + ": " + msg); };
  switch (config.kind) {
    case EstimatorKind::PT:
      if (!(config.alpha > 0.0 && config.alpha < 1.0)) fail("alpha must lie in (0, 1)");
      break;
    case EstimatorKind::JS:
      break;
    case EstimatorKind::EB:
      if (!config.a0 || !(*config.a0 > 0.0)) fail("a0 must be given and > 0");
      break;
    case EstimatorKind::HEB:
      if (!config.a0 || !(*config.a0 > 0.0)) fail("a0 must be given and > 0");
      if (!config.b0 || !(*config.b0 > 0.0)) fail("b0 must be given and > 0");
      break;
    case EstimatorKind::HB:
      if (!config.hb) fail("HB constants (a, c, L) must be given");
      try {
        hb_exponents(design.p(), design.k(), design.n(), *config.hb);
      } catch (const std::exception& e) {
        fail(e.what());
      }
      break;
    case EstimatorKind::LINCOMB:
      if (config.d.size() != static_cast<std::size_t>(design.k()))
        fail("d must have one weight per population");
      if (!config.phi && !config.a0) fail("needs phi or a0 (phi = min(a0, F))");
      break;
    case EstimatorKind::CLASS1:
      if (!config.phi) fail("phi must be given");
      break;
    case EstimatorKind::CLASS2:
      if (!config.phi || !config.psi) fail("phi and psi must be given");
      break;
  }
}

Estimator::Estimator(EstimatorConfig config, const Design& design)
    : config_(std::move(config)), design_(design) {
  validate_config(config_, design_);
  if (config_.kind == EstimatorKind::PT) pt_threshold_ = pt_threshold(design_, config_.alpha);
  if (config_.kind == EstimatorKind::LINCOMB && !config_.phi) {
    const double a0 = *config_.a0;
    config_.phi = [a0](double f, double) { return std::min(a0, f); };
  }
}

Vector Estimator::estimate(const Sample& sample) const {
  return estimate(sample, pooled_stats(sample, design_));
}

Vector Estimator::estimate(const Sample& sample, const PooledStats& st) const {
  const Vector& x1 = sample.X.front();
  switch (config_.kind) {
    case EstimatorKind::PT:
      return st.F > pt_threshold_ ? x1 : st.nu_hat;
    case EstimatorKind::JS:
      return js_estimate(sample, design_);
    case EstimatorKind::EB:
      return toward(x1, st.nu_hat, clipped_ratio(*config_.a0, st.F));
    case EstimatorKind::HB:
      return toward(x1, st.nu_hat,
                    hb_shrink_factor(st.F, sample.S, design_.p(), design_.k(), design_.n(),
                                     *config_.hb));
    case EstimatorKind::HEB:
      return toward(x1, st.nu_hat, clipped_ratio(*config_.a0, st.F)) -
             clipped_ratio(*config_.b0, st.G) * st.nu_hat;
    case EstimatorKind::CLASS1:
      if (st.F == 0.0) return st.nu_hat;
      return toward(x1, st.nu_hat, config_.phi(st.F, sample.S) / st.F);
    case EstimatorKind::CLASS2: {
      Vector out = st.F == 0.0 ? st.nu_hat
                               : toward(x1, st.nu_hat, config_.phi(st.F, sample.S) / st.F);
      if (st.G > 0.0) out -= (config_.psi(st.G, sample.S) / st.G) * st.nu_hat;
      return out;
    }
    case EstimatorKind::LINCOMB: {
      const double factor = st.F > 0.0 ? config_.phi(st.F, sample.S) / st.F : 0.0;
      Vector out = Vector::Zero(x1.size());
      for (std::size_t i = 0; i < config_.d.size(); ++i)
        out += config_.d[i] * toward(sample.X[i], st.nu_hat, factor);
      return out;
    }
  }
  throw std::logic_error("Estimator: unknown kind");
}

}  // namespace kshrink
