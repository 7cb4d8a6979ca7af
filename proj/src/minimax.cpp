#include "kshrink/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace kshrink {

RootCondition root_condition(const Matrix& m, const SpdMatrix& q, double input_scale) {
  RootCondition rc;
  const Matrix sym = 0.5 * (m + m.transpose());
  rc.trace = trace_product(sym, q);
  rc.chmax = chmax_product(sym, q);
  const double scale = std::max(sym.norm(), input_scale) * q.matrix().norm();
  if (rc.chmax > 1e-12 * scale) {
    rc.ratio = rc.trace / rc.chmax;
    rc.holds = rc.ratio > 2.0 + kRatioSlack;
  } else {
    rc.chmax = 0.0;
  }
  return rc;
}

namespace {

MinimaxReport report_for(const Matrix& m, const Design& design, const SpdMatrix& q,
                         double input_scale) {
  MinimaxReport r;
  r.shrink = root_condition(m, q, input_scale);
  const double n2 = design.n() + 2.0;
  if (r.shrink.chmax > 0.0) {
    r.phi_upper_theorem2 = (r.shrink.ratio - 2.0) / n2;
    r.phi_upper_theorem1 = 2.0 * r.phi_upper_theorem2;
  }
  return r;
}

void require_q_dim(const Design& design, const SpdMatrix& q) {
  if (q.dim() != design.p()) throw std::invalid_argument("minimax: Q dimension mismatch");
}

}  // namespace

MinimaxReport theorem1_report(const Design& design, const SpdMatrix& q) {
  require_q_dim(design, q);
  if (design.k() < 2) throw std::invalid_argument("theorem1_report: requires k >= 2");
  return report_for(design.V(0).matrix() - design.A().matrix(), design, q,
                    design.V(0).matrix().norm() + design.A().matrix().norm());
}

MinimaxReport theorem2_report(const Design& design, const SpdMatrix& q) {
  MinimaxReport r = theorem1_report(design, q);
  r.pooled = root_condition(design.A().matrix(), q);
  r.psi_upper_theorem2 = r.pooled->chmax > 0.0 ? (r.pooled->ratio - 2.0) / (design.n() + 2.0) : 0.0;
  return r;
}

MinimaxReport theorem3_report(const Design& design, const SpdMatrix& q,
                              std::span<const double> d) {
  require_q_dim(design, q);
  double input_scale = 0.0, total = 0.0;
  for (std::size_t i = 0; i < d.size() && i < design.V().size(); ++i) {
    input_scale += d[i] * d[i] * design.V()[i].matrix().norm();
    total += d[i];
  }
  input_scale += total * total * design.A().matrix().norm();
  return report_for(contrast_covariance(design.V(), design.A(), d), design, q, input_scale);
}

double solve_hb_a(const Design& design, const SpdMatrix& q) {
  const MinimaxReport r = theorem1_report(design, q);
  if (!r.shrink.holds)
    throw std::domain_error("solve_hb_a: tr/Ch_max > 2 fails for V_1 - A, no minimax HB constant");
  const double n = design.n();
  const double df = static_cast<double>(design.p()) * (design.k() - 1);
  const double R = r.shrink.ratio - 2.0;
  const double a = ((n - 2.0) * R - df * (n + 2.0)) / (2.0 * (n + 2.0) + 2.0 * R);
  if (!(a > -0.5 * df)) {
    std::ostringstream os;
    os << "solve_hb_a: root a = " << a << " violates a > -p(k-1)/2 = " << -0.5 * df;
    throw std::domain_error(os.str());
  }
  if (!(a + 1.0 < 0.5 * n)) {
    std::ostringstream os;
    os << "solve_hb_a: root a = " << a << " violates a + c < n/2 with c = 1";
    throw std::domain_error(os.str());
  }
  return a;
}

std::string violation_name(ShrinkViolation::Kind kind) {
  switch (kind) {
    case ShrinkViolation::Kind::NotPositive: return "not_positive";
    case ShrinkViolation::Kind::AboveBound: return "above_bound";
    case ShrinkViolation::Kind::DecreasingInFirst: return "decreasing_in_first_argument";
    case ShrinkViolation::Kind::IncreasingInS: return "increasing_in_S";
  }
  return "unknown";
}

ShrinkCheck check_shrink_function(const ShrinkFunction& phi, double bound,
                                  std::span<const double> first_grid,
                                  std::span<const double> s_grid, double tol) {
  auto strictly_increasing = [](std::span<const double> g) {
    for (std::size_t i = 1; i < g.size(); ++i)
      if (!(g[i] > g[i - 1])) return false;
    return !g.empty();
  };
  if (!strictly_increasing(first_grid) || !strictly_increasing(s_grid))
    throw std::invalid_argument("check_shrink_function: grids must be strictly increasing");

  const std::size_t nf = first_grid.size();
  const std::size_t ns = s_grid.size();
  std::vector<double> values(nf * ns);
  for (std::size_t i = 0; i < nf; ++i)
    for (std::size_t j = 0; j < ns; ++j) values[i * ns + j] = phi(first_grid[i], s_grid[j]);

  ShrinkCheck out;
  auto flag = [&](ShrinkViolation::Kind kind, std::size_t i, std::size_t j) {
    out.passed = false;
    out.violations.push_back({kind, first_grid[i], s_grid[j], values[i * ns + j]});
  };
  for (std::size_t i = 0; i < nf; ++i) {
    for (std::size_t j = 0; j < ns; ++j) {
      const double v = values[i * ns + j];
      if (!(v > 0.0)) flag(ShrinkViolation::Kind::NotPositive, i, j);
      if (!(v <= bound * (1.0 + tol))) flag(ShrinkViolation::Kind::AboveBound, i, j);
      const double slack = tol * std::max(1.0, std::abs(v));
      if (i > 0 && v < values[(i - 1) * ns + j] - slack)
        flag(ShrinkViolation::Kind::DecreasingInFirst, i, j);
      if (j > 0 && v > values[i * ns + j - 1] + slack)
        flag(ShrinkViolation::Kind::IncreasingInS, i, j);
    }
  }
  return out;
}

EstimatorConfig with_minimax_defaults(EstimatorConfig config, const Design& design,
                                      const SpdMatrix& q) {
  switch (config.kind) {
    case EstimatorKind::EB:
      if (!config.a0) config.a0 = theorem1_report(design, q).phi_upper_theorem2;
      break;
    case EstimatorKind::HEB: {
      const MinimaxReport r = theorem2_report(design, q);
      if (!config.a0) config.a0 = 0.5 * r.phi_upper_theorem2;
      if (!config.b0) config.b0 = 0.5 * *r.psi_upper_theorem2;
      break;
    }
    case EstimatorKind::HB:
      if (!config.hb) config.hb = HbParams{solve_hb_a(design, q), 1.0, 0.0};
      break;
    case EstimatorKind::LINCOMB:
      if (!config.phi && !config.a0 && config.d.size() == static_cast<std::size_t>(design.k()))
        config.a0 = 0.5 * theorem3_report(design, q, config.d).phi_upper_theorem1;
      break;
    default:
      break;
  }
  return config;
}

}  // namespace kshrink
