#include "kshrink/risk_sim.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <optional>
#include <sstream>
#include <thread>

#include "kshrink/minimax.hpp"

namespace kshrink {

namespace {

// Replications per work unit.  Fixed so that the reduction tree, and hence
// every floating-point sum, is independent of the worker count.
constexpr std::int64_t kBlock = 1024;

// Running means and co-moments of a pair (Welford, merged with Chan et al.).
struct PairMoments {
  double n = 0.0;
  double mx = 0.0;
  double my = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;

  void add(double x, double y) {
    n += 1.0;
    const double dx = x - mx;
    mx += dx / n;
    const double dy = y - my;
    my += dy / n;
    sxx += dx * (x - mx);
    syy += dy * (y - my);
    sxy += dx * (y - my);
  }

  void merge(const PairMoments& o) {
    if (o.n == 0.0) return;
    if (n == 0.0) {
      *this = o;
      return;
    }
    const double total = n + o.n;
    const double dx = o.mx - mx;
    const double dy = o.my - my;
    const double w = n * o.n / total;
    mx += dx * o.n / total;
    my += dy * o.n / total;
    sxx += o.sxx + dx * dx * w;
    syy += o.syy + dy * dy * w;
    sxy += o.sxy + dx * dy * w;
    n = total;
  }

  double var_x() const { return n > 1.0 ? sxx / (n - 1.0) : 0.0; }
  double var_y() const { return n > 1.0 ? syy / (n - 1.0) : 0.0; }
  double cov() const { return n > 1.0 ? sxy / (n - 1.0) : 0.0; }
};

struct BlockResult {
  std::vector<PairMoments> pairs;  // (loss of X_1, loss of estimator j)
  std::optional<std::int64_t> failed_at;
  std::string failure;
};

struct Evaluator {
  const SimPlan& plan;
  SampleGenerator generator;
  Design design;
  SpdMatrix q;
  std::vector<Estimator> estimators;

  double loss_of(const Vector& delta) const {
    return loss(delta, plan.spec.mu.front(), plan.spec.sigma2, q);
  }

  void run_block(std::int64_t begin, std::int64_t end, BlockResult& out) const {
    out.pairs.assign(estimators.size(), PairMoments{});
    std::vector<double> losses(estimators.size());
    for (std::int64_t r = begin; r < end; ++r) {
      try {
        Rng rng = replication_stream(plan.seed, r, 0);
        const Sample sample = generator.draw(rng);
        const double base = loss_of(sample.X.front());
        if (plan.common_random_numbers) {
          const PooledStats stats = pooled_stats(sample, design);
          for (std::size_t j = 0; j < estimators.size(); ++j)
            losses[j] = loss_of(estimators[j].estimate(sample, stats));
        } else {
          for (std::size_t j = 0; j < estimators.size(); ++j) {
            Rng own = replication_stream(plan.seed, r, static_cast<std::uint32_t>(j + 1));
            const Sample s = generator.draw(own);
            losses[j] = loss_of(estimators[j].estimate(s, pooled_stats(s, design)));
          }
        }
        for (std::size_t j = 0; j < estimators.size(); ++j) {
          if (!std::isfinite(losses[j]))
            throw std::runtime_error(estimators[j].label() + " produced a non-finite loss");
          out.pairs[j].add(base, losses[j]);
        }
      } catch (const std::exception& e) {
        out.failed_at = r;
        out.failure = e.what();
        return;
      }
    }
  }
};

// Baseline moments are carried in the x slot of every pair; with no
// estimators a single dedicated pair keeps them.
PairMoments baseline_only(const Evaluator& ev, std::int64_t begin, std::int64_t end) {
  PairMoments m;
  for (std::int64_t r = begin; r < end; ++r) {
    Rng rng = replication_stream(ev.plan.seed, r, 0);
    const double base = ev.loss_of(ev.generator.draw(rng).X.front());
    m.add(base, base);
  }
  return m;
}

}  // namespace

Rng replication_stream(std::uint64_t seed, std::int64_t replication, std::uint32_t stream) {
  const auto r = static_cast<std::uint64_t>(replication);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32), stream};
  return Rng(seq);
}

std::vector<EstimatorConfig> resolve_estimators(const SimPlan& plan) {
  const Design design = Design::from_spec(plan.spec);
  const SpdMatrix q(plan.spec.Q);
  std::vector<EstimatorConfig> out;
  out.reserve(plan.estimators.size());
  for (const auto& cfg : plan.estimators) {
    out.push_back(with_minimax_defaults(cfg, design, q));
    validate_config(out.back(), design);
  }
  return out;
}

RiskReport simulate_risk(const SimPlan& plan, unsigned workers) {
  if (plan.replications < 1) throw std::invalid_argument("simulate_risk: replications must be >= 1");
  require_valid(plan.spec);
  const auto configs = resolve_estimators(plan);

  Evaluator ev{plan, SampleGenerator(plan.spec), Design::from_spec(plan.spec),
               SpdMatrix(plan.spec.Q), {}};
  ev.estimators.reserve(configs.size());
  for (const auto& cfg : configs) ev.estimators.emplace_back(cfg, ev.design);

  const std::int64_t n_blocks = (plan.replications + kBlock - 1) / kBlock;
  std::vector<BlockResult> blocks(static_cast<std::size_t>(n_blocks));
  std::vector<PairMoments> base_blocks;
  if (configs.empty()) base_blocks.resize(blocks.size());

  std::atomic<std::int64_t> next{0};
  auto work = [&] {
    for (std::int64_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
      const std::int64_t begin = b * kBlock;
      const std::int64_t end = std::min(plan.replications, begin + kBlock);
      if (configs.empty()) {
        base_blocks[static_cast<std::size_t>(b)] = baseline_only(ev, begin, end);
      } else {
        ev.run_block(begin, end, blocks[static_cast<std::size_t>(b)]);
      }
    }
  };
  const unsigned n_workers =
      std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_blocks)));
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (const auto& b : blocks) {
    if (b.failed_at) {
      std::ostringstream os;
      os << "simulate_risk: replication " << *b.failed_at << " (seed " << plan.seed
         << ") failed: " << b.failure;
      throw SimulationError(os.str(), *b.failed_at, plan.seed);
    }
  }

  std::vector<PairMoments> total(configs.size());
  PairMoments base_total;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (std::size_t j = 0; j < configs.size(); ++j) total[j].merge(blocks[b].pairs[j]);
    if (configs.empty()) base_total.merge(base_blocks[b]);
  }
  if (!configs.empty()) base_total = total.front();

  RiskReport report;
  report.replications = plan.replications;
  report.seed = plan.seed;
  const double reps = static_cast<double>(plan.replications);
  report.baseline_risk = base_total.mx;
  report.baseline_std_error = std::sqrt(base_total.var_x() / reps);
  report.trace_v1q = trace_product(plan.spec.V.front(), SpdMatrix(plan.spec.Q));

  for (std::size_t j = 0; j < configs.size(); ++j) {
    const PairMoments& m = total[j];
    EstimatorRisk er;
    er.label = configs[j].display_name();
    er.risk = m.my;
    er.std_error = std::sqrt(m.var_y() / reps);
    er.prial = 100.0 * (m.mx - m.my) / m.mx;
    if (plan.common_random_numbers) {
      // PRIAL/100 = mean(d)/mean(x) with d = x - y; delta method on the ratio.
      const double rho = (m.mx - m.my) / m.mx;
      const double var_d = m.var_x() + m.var_y() - 2.0 * m.cov();
      const double cov_dx = m.var_x() - m.cov();
      const double v = std::max(0.0, var_d - 2.0 * rho * cov_dx + rho * rho * m.var_x());
      er.prial_std_error = 100.0 * std::sqrt(v / reps) / m.mx;
    } else {
      const double ratio = m.my / m.mx;
      const double rel = m.var_y() / (reps * m.my * m.my) + m.var_x() / (reps * m.mx * m.mx);
      er.prial_std_error = 100.0 * ratio * std::sqrt(rel);
    }
    report.estimators.push_back(std::move(er));
  }
  return report;
}

namespace {

ModelSpec table1_spec(const std::array<double, 5>& pattern) {
  ModelSpec spec;
  spec.p = 5;
  spec.k = 5;
  spec.n = 20;
  spec.sigma2 = 2.0;
  for (int i = 1; i <= spec.k; ++i) spec.V.push_back((0.1 * i) * Matrix::Identity(5, 5));
  spec.Q = SpdMatrix(spec.V.front()).inverse();
  for (double m : pattern) spec.mu.push_back(Vector::Constant(5, m));
  return spec;
}

}  // namespace

const std::vector<Table1Row>& table1_reference() {
  static const std::vector<Table1Row> rows = {
      {"(0,0,0,0,0)", {52.15317, 53.97469, 14.66425, 14.57437, 26.38606}},
      {"(1,1,1,1,1)", {52.15317, 12.89115, 14.66425, 14.57437, 9.891098}},
      {"(2,2,2,2,2)", {52.15317, 4.066823, 14.66425, 14.57437, 8.516356}},
      {"(3,3,3,3,3)", {52.15317, 2.268442, 14.66425, 14.57437, 8.249028}},
      {"(-0.4,-0.2,0,0.2,0.4)", {37.34717, 37.20396, 13.01833, 12.97352, 22.64692}},
      {"(2,-0.5,-0.5,-0.5,-0.5)", {-56.8291, 4.066823, 3.213333, 3.213459, 6.031053}},
      {"(4,-1,-1,-1,-1)", {0.7375904, 1.620614, 1.358956, 1.358821, 2.098222}},
      {"(1.2,1.4,1.6,1.8,2)", {37.34717, 9.463467, 13.01833, 12.97352, 8.397694}},
      {"(0.2,2,2,2,2)", {-98.94453, 49.73141, 4.947591, 4.949466, 5.183324}},
      {"(0.4,4,4,4,4)", {-2.492994, 37.56052, 1.805795, 1.80584, 2.071347}},
      {"(2,0,0,0,0)", {-94.45962, 4.066823, 4.439434, 4.440511, 4.479298}},
  };
  return rows;
}

std::vector<NamedPlan> table1_preset(std::int64_t replications, std::uint64_t seed,
                                     double alpha) {
  static const std::array<std::array<double, 5>, 11> patterns = {{
      {0, 0, 0, 0, 0},
      {1, 1, 1, 1, 1},
      {2, 2, 2, 2, 2},
      {3, 3, 3, 3, 3},
      {-0.4, -0.2, 0, 0.2, 0.4},
      {2, -0.5, -0.5, -0.5, -0.5},
      {4, -1, -1, -1, -1},
      {1.2, 1.4, 1.6, 1.8, 2},
      {0.2, 2, 2, 2, 2},
      {0.4, 4, 4, 4, 4},
      {2, 0, 0, 0, 0},
  }};
  std::vector<NamedPlan> out;
  out.reserve(patterns.size());
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    SimPlan plan;
    plan.spec = table1_spec(patterns[i]);
    plan.replications = replications;
    plan.seed = seed;
    plan.common_random_numbers = true;

    EstimatorConfig pt;
    pt.kind = EstimatorKind::PT;
    pt.alpha = alpha;
    EstimatorConfig js;
    js.kind = EstimatorKind::JS;
    EstimatorConfig eb;
    eb.kind = EstimatorKind::EB;
    EstimatorConfig hb;
    hb.kind = EstimatorKind::HB;
    EstimatorConfig heb;
    heb.kind = EstimatorKind::HEB;
    plan.estimators = {pt, js, eb, hb, heb};
    plan.estimators = resolve_estimators(plan);

    out.push_back({table1_reference()[i].name, std::move(plan)});
  }
  return out;
}

bool IdentityCheck::agrees(double n_se) const {
  return std::abs(lhs - rhs) <= n_se * std_error;
}

namespace {

IdentityCheck summarize(const PairMoments& m) {
  IdentityCheck out;
  out.lhs = m.mx;
  out.rhs = m.my;
  out.replications = static_cast<std::int64_t>(m.n);
  const double var_d = std::max(0.0, m.var_x() + m.var_y() - 2.0 * m.cov());
  out.std_error = std::sqrt(var_d / m.n);
  return out;
}

}  // namespace

IdentityCheck stein_identity_check(const VectorField& h, const Vector& mu, const Matrix& sigma,
                                   std::int64_t replications, std::uint64_t seed) {
  if (replications < 2) throw std::invalid_argument("stein_identity_check: need >= 2 replications");
  const SpdMatrix cov(sigma);
  if (cov.dim() != mu.size()) throw std::invalid_argument("stein_identity_check: dimension mismatch");
  const Matrix chol = cov.llt().matrixL();
  Rng rng = replication_stream(seed, 0, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  PairMoments m;
  Vector z(mu.size());
  for (std::int64_t r = 0; r < replications; ++r) {
    for (Eigen::Index j = 0; j < z.size(); ++j) z[j] = normal(rng);
    const Vector y = mu + chol * z;
    const double lhs = (y - mu).dot(h.value(y));
    const double rhs = cov.matrix().cwiseProduct(h.jacobian(y)).sum();
    m.add(lhs, rhs);
  }
  return summarize(m);
}

IdentityCheck chisq_identity_check(const ScalarField& g, int n, double sigma2,
                                   std::int64_t replications, std::uint64_t seed) {
  if (replications < 2) throw std::invalid_argument("chisq_identity_check: need >= 2 replications");
  if (n < 1 || !(sigma2 > 0.0)) throw std::invalid_argument("chisq_identity_check: bad n or sigma2");
  Rng rng = replication_stream(seed, 0, 0);
  std::gamma_distribution<double> chi2(0.5 * n, 2.0);
  PairMoments m;
  for (std::int64_t r = 0; r < replications; ++r) {
    const double s = sigma2 * chi2(rng);
    m.add(s * g.value(s), sigma2 * (n * g.value(s) + 2.0 * s * g.derivative(s)));
  }
  return summarize(m);
}

}  // namespace kshrink
