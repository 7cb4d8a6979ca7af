// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance [--reps N] [--expect-fail LIST]
// Criteria named in LIST are still evaluated and printed; a failure there does
// not change the exit status.  Any other failure exits 1.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fixtures.hpp"
#include "kshrink/cli.hpp"
#include "kshrink/estimators.hpp"
#include "kshrink/minimax.hpp"
#include "kshrink/risk_sim.hpp"
#include "kshrink/statistics.hpp"
#include "oracles.hpp"

using namespace kshrink;

namespace {

struct Outcome {
  int id;
  std::string title;
  bool pass;
};

std::vector<Outcome> outcomes;

void detail(const char* fmt, auto... args) {
  std::printf("    ");
  std::printf(fmt, args...);
  std::printf("\n");
}

void record(int id, const std::string& title, bool pass) {
  outcomes.push_back({id, title, pass});
  std::printf("%s  %d  %s\n", pass ? "PASS" : "FAIL", id, title.c_str());
  std::fflush(stdout);
}

const std::vector<std::string> kColumns = {"PT", "JS", "EB", "HB", "HEB"};

const EstimatorRisk& find(const RiskReport& r, const std::string& label) {
  for (const auto& e : r.estimators)
    if (e.label == label) return e;
  throw std::runtime_error("missing estimator " + label);
}

std::vector<RiskReport> run_table(std::int64_t reps) {
  std::vector<RiskReport> out;
  for (const auto& np : table1_preset(reps, 42)) out.push_back(simulate_risk(np.plan));
  return out;
}

void table_reproduction(const std::vector<RiskReport>& table, std::int64_t reps) {
  const auto& ref = table1_reference();
  bool ok = true;
  double worst = 0.0;
  for (std::size_t row = 0; row < ref.size(); ++row) {
    for (std::size_t c = 1; c < kColumns.size(); ++c) {
      const EstimatorRisk& e = find(table[row], kColumns[c]);
      const double diff = e.prial - ref[row].prial[c];
      worst = std::max(worst, std::abs(diff));
      if (std::abs(diff) > 1.5) {
        ok = false;
        detail("row %2zu %-24s %-3s  got %8.3f  table %8.3f  diff %+7.3f  (se %.3f)", row + 1,
               ref[row].name, kColumns[c].c_str(), e.prial, ref[row].prial[c], diff,
               e.prial_std_error);
      }
    }
  }
  detail("largest absolute difference %.3f over %zu rows, %lld replications", worst, ref.size(),
         static_cast<long long>(reps));
  record(1, "reference table PRIAL for JS, EB, HB, HEB within 1.5 points", ok);
}

void pt_pattern(const std::vector<RiskReport>& table) {
  const auto& ref = table1_reference();
  bool ok = true;
  const double common = find(table[0], "PT").prial;
  for (int row = 1; row < 4; ++row) {
    const double v = find(table[row], "PT").prial;
    if (std::abs(v - common) > 1e-10 * std::max(1.0, std::abs(common))) {
      ok = false;
      detail("row %d PT PRIAL %.12g differs from row 1 %.12g", row + 1, v, common);
    }
  }
  for (std::size_t row = 0; row < ref.size(); ++row) {
    const EstimatorRisk& e = find(table[row], "PT");
    const bool negative_expected = ref[row].prial[0] < 0.0;
    const bool sign_ok = !negative_expected || e.prial < 0.0;
    if (!sign_ok) ok = false;
    detail("row %2zu %-24s PT got %9.3f  table %9.3f%s", row + 1, ref[row].name, e.prial,
           ref[row].prial[0], sign_ok ? "" : "  sign mismatch");
  }
  record(2, "PT: equal-mean rows share one PRIAL and negative rows are negative", ok);
}

bool risk_within(const RiskReport& r, double trace, const std::string& label, const char* what) {
  const EstimatorRisk& e = find(r, label);
  const bool ok = e.risk <= trace + 3.0 * e.std_error;
  if (!ok)
    detail("%s %s risk %.5f exceeds %.5f + 3 x %.5f", what, label.c_str(), e.risk, trace,
           e.std_error);
  return ok;
}

void minimaxity(const std::vector<RiskReport>& table, std::int64_t reps) {
  bool ok = true;
  const auto& ref = table1_reference();
  for (std::size_t row = 0; row < table.size(); ++row)
    for (const char* label : {"EB", "HB", "HEB"})
      ok &= risk_within(table[row], table[row].trace_v1q, label, ref[row].name);

  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_p(3, 8), pick_k(2, 6);
  std::uniform_real_distribution<double> scale(0.1, 2.0), mean(-2.0, 2.0);
  int accepted = 0, attempts = 0;
  while (accepted < 20) {
    ++attempts;
    ModelSpec spec;
    spec.p = pick_p(rng);
    spec.k = pick_k(rng);
    spec.n = 5 + static_cast<int>(rng() % 30);
    spec.sigma2 = scale(rng) * 2.0;
    for (int i = 0; i < spec.k; ++i) {
      spec.V.push_back(scale(rng) * Matrix::Identity(spec.p, spec.p));
      Vector mu(spec.p);
      for (int j = 0; j < spec.p; ++j) mu[j] = mean(rng);
      spec.mu.push_back(mu);
    }
    spec.Q = scale(rng) * Matrix::Identity(spec.p, spec.p);
    const Design design = Design::from_spec(spec);
    const SpdMatrix q(spec.Q);
    if (!theorem2_report(design, q).condition_holds()) continue;
    try {
      solve_hb_a(design, q);
    } catch (const std::domain_error&) {
      continue;
    }
    SimPlan plan;
    plan.spec = spec;
    plan.replications = reps;
    plan.seed = 500 + static_cast<std::uint64_t>(accepted);
    for (auto k : {EstimatorKind::EB, EstimatorKind::HB, EstimatorKind::HEB})
      plan.estimators.push_back(EstimatorConfig{k});
    const RiskReport r = simulate_risk(plan);
    const std::string name = "random spec " + std::to_string(accepted + 1);
    for (const char* label : {"EB", "HB", "HEB"})
      ok &= risk_within(r, r.trace_v1q, label, name.c_str());
    ++accepted;
  }
  detail("%d random specs accepted out of %d drawn", accepted, attempts);
  record(3, "EB, HB, HEB risk at most tr(V1 Q) + 3 se", ok);
}

void phi_hb_properties() {
  const HbParams hb{-7.72, 1.0, 0.0};
  const int p = 5, k = 5, n = 20;
  const double sup = 3.0 / 22.0;
  bool ok = true;

  std::vector<double> grid;
  for (int i = 0; i <= 400; ++i) grid.push_back(std::pow(10.0, -6.0 + 14.0 * i / 400.0));
  double top = 0.0, prev = 0.0;
  bool monotone = true;
  for (double f : grid) {
    const double v = phi_hb(f, 1.0, p, k, n, hb);
    top = std::max(top, v);
    if (v < prev * (1 - 1e-12)) monotone = false;
    prev = v;
  }
  const bool sup_ok = std::abs(top - sup) <= 1e-6 && top <= sup + 1e-12;
  detail("grid sup %.12f, target %.12f", top, sup);

  const double factor = phi_hb(1e-6, 1.0, p, k, n, hb) / 1e-6;
  const bool limit_ok = std::abs(factor - 2.28 / 3.28) <= 1e-4;
  detail("shrink factor at F = 1e-6: %.9f, limit %.9f", factor, 2.28 / 3.28);
  detail("monotone on %zu grid points: %s", grid.size(), monotone ? "yes" : "no");

  const double oracle_value = oracle::phi_hb_l0(1.0, p, k, n, hb.a, hb.c);
  const double value = phi_hb(1.0, 1.0, p, k, n, hb);
  const bool quad_ok = std::abs(value - oracle_value) <= 1e-8;
  detail("F = 1: %.15f, trapezoid %.15f", value, oracle_value);

  ok = sup_ok && limit_ok && monotone && quad_ok;
  record(4, "HB shrink function: supremum, small-F limit, monotonicity, quadrature", ok);
}

void inequality_lemmas() {
  std::mt19937_64 rng(77);
  bool ok = true;
  double lowest = INFINITY, worst_two = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 2 + trial % 5;
    const int p = 1 + trial % 4;
    std::vector<Matrix> vm;
    std::vector<Vector> x;
    for (int i = 0; i < k; ++i) {
      vm.push_back(oracle::random_spd(rng, p));
      x.push_back(oracle::random_vector(rng, p, 2.0));
    }
    const double gap = lemma_in_gap(x, fixture::spd_list(vm));
    lowest = std::min(lowest, gap);
    if (gap < -1e-10) ok = false;
    if (k == 2) {
      worst_two = std::max(worst_two, std::abs(gap));
      if (std::abs(gap) > 1e-10) ok = false;
    }
  }
  detail("lemma gap minimum %.3e, largest |gap| for k = 2 %.3e", lowest, worst_two);

  int violations = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int k = 2 + trial % 5;
    const int p = 2 + trial % 3;
    std::vector<Matrix> vm;
    std::vector<Vector> x;
    for (int i = 0; i < k; ++i) {
      vm.push_back(oracle::random_spd(rng, p));
      x.push_back(oracle::random_vector(rng, p, 2.0));
    }
    const SpdMatrix q(oracle::random_spd(rng, p));
    std::vector<double> d(k);
    for (auto& w : d) w = std::normal_distribution<double>()(rng);
    const LinearBound lb = linear_bound_check(x, fixture::spd_list(vm), q, d);
    if (lb.B_value > lb.bound * (1 + 1e-10) + 1e-10) ++violations;
  }
  detail("linear bound violations: %d of 10000", violations);
  record(5, "lemma gap nonnegative (zero for k = 2) and linear bound holds",
         ok && violations == 0);
}

void identity_validators() {
  const int p = 5;
  const Matrix id = Matrix::Identity(p, p);
  Matrix sigma = 0.5 * id;
  sigma(0, 1) = sigma(1, 0) = 0.2;
  const Vector mu = Vector::LinSpaced(p, -1.0, 1.0);
  const std::int64_t reps = 100000;

  const VectorField linear{[](const Vector& y) { return y; },
                           [](const Vector& y) { return Matrix::Identity(y.size(), y.size()); }};
  const VectorField ratio{
      [](const Vector& y) { return Vector(y / y.squaredNorm()); },
      [](const Vector& y) {
        const double r2 = y.squaredNorm();
        return Matrix(Matrix::Identity(y.size(), y.size()) / r2 -
                      2.0 * y * y.transpose() / (r2 * r2));
      }};
  const VectorField shrink{
      [](const Vector& y) { return Vector(y / (1.0 + y.squaredNorm())); },
      [](const Vector& y) {
        const double d = 1.0 + y.squaredNorm();
        return Matrix(Matrix::Identity(y.size(), y.size()) / d -
                      2.0 * y * y.transpose() / (d * d));
      }};

  bool ok = true;
  auto report = [&ok](const char* name, const IdentityCheck& c) {
    detail("%-28s lhs %12.6f  rhs %12.6f  se %.2e", name, c.lhs, c.rhs, c.std_error);
    ok &= c.agrees(4.0);
  };
  report("stein y", stein_identity_check(linear, mu, sigma, reps, 1));
  report("stein y / |y|^2", stein_identity_check(ratio, Vector::Zero(p), id, reps, 2));
  report("stein y / (1 + |y|^2)", stein_identity_check(shrink, mu, sigma, reps, 3));

  const ScalarField one{[](double) { return 1.0; }, [](double) { return 0.0; }};
  const ScalarField ident{[](double s) { return s; }, [](double) { return 1.0; }};
  const ScalarField recip{[](double s) { return 1.0 / (1.0 + s); },
                          [](double s) { return -1.0 / ((1.0 + s) * (1.0 + s)); }};
  report("chi-square g = 1", chisq_identity_check(one, 20, 2.0, reps, 4));
  report("chi-square g = s", chisq_identity_check(ident, 20, 2.0, reps, 5));
  report("chi-square g = 1 / (1 + s)", chisq_identity_check(recip, 20, 2.0, reps, 6));
  record(6, "Stein and chi-square identities agree within 4 se", ok);
}

void bound_arithmetic() {
  const ModelSpec spec = fixture::reference_spec();
  const Design design = Design::from_spec(spec);
  const SpdMatrix q(spec.Q);
  const MinimaxReport t1 = theorem1_report(design, q);
  const MinimaxReport t2 = theorem2_report(design, q);
  const std::vector<double> e1 = {1, 0, 0, 0, 0};
  const MinimaxReport t3 = theorem3_report(design, q, e1);
  auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
  bool ok = near(t1.ratio(), 5.0) && near(t1.phi_upper_theorem1, 6.0 / 22.0) &&
            near(t1.phi_upper_theorem2, 3.0 / 22.0) && t2.psi_upper_theorem2 &&
            near(*t2.psi_upper_theorem2, 3.0 / 22.0) && near(t3.ratio(), 5.0) &&
            near(t3.phi_upper_theorem1, 6.0 / 22.0);
  detail("ratio %.15g, bounds %.15g %.15g, psi bound %.15g", t1.ratio(), t1.phi_upper_theorem1,
         t1.phi_upper_theorem2, t2.psi_upper_theorem2.value_or(NAN));

  const double a = solve_hb_a(design, q);
  const double sup_hb = (5.0 * 4.0 + 2.0 * a) / (20.0 - 2.0 * (a + 1.0));
  const double residual = std::abs(sup_hb - t1.phi_upper_theorem2);
  detail("HB a %.15g, round-trip residual %.3e", a, residual);
  ok = ok && std::abs(a + 7.72) < 1e-12 && residual < 1e-12;
  record(7, "bound arithmetic on the reference design", ok);
}

std::string simulate_csv(const std::string& workers) {
  const std::vector<std::string> args = {"kshrink", "simulate", "--preset", "table1",
                                         "--reps",  "4000",     "--seed",   "9",
                                         "--workers", workers};
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  if (cli::run(static_cast<int>(argv.size()), argv.data(), out, err) != cli::kOk)
    throw std::runtime_error("simulate failed: " + err.str());
  return out.str();
}

void determinism() {
  const std::string one = simulate_csv("1");
  const std::string three = simulate_csv("3");
  const std::string eight = simulate_csv("8");
  detail("CSV sizes %zu, %zu, %zu bytes", one.size(), three.size(), eight.size());
  record(8, "simulate output is byte-identical across worker counts",
         !one.empty() && one == three && one == eight);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  std::int64_t reps = 100000;
  std::vector<int> expected;
  app.add_option("--reps", reps, "replications for the simulation criteria")
      ->check(CLI::PositiveNumber);
  app.add_option("--expect-fail", expected, "criteria known not to hold")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  try {
    const std::vector<RiskReport> table = run_table(reps);
    table_reproduction(table, reps);
    pt_pattern(table);
    minimaxity(table, reps);
    phi_hb_properties();
    inequality_lemmas();
    identity_validators();
    bound_arithmetic();
    determinism();
  } catch (const std::exception& e) {
    std::printf("FAIL  acceptance run aborted: %s\n", e.what());
    return 1;
  }

  const std::set<int> allowed(expected.begin(), expected.end());
  int failed = 0, unexpected = 0;
  for (const auto& o : outcomes) {
    if (o.pass) {
      if (allowed.count(o.id)) std::printf("note: criterion %d passed but was expected to fail\n", o.id);
      continue;
    }
    ++failed;
    if (!allowed.count(o.id)) ++unexpected;
  }
  std::printf("%zu criteria, %d failed (%d expected)\n", outcomes.size(), failed,
              failed - unexpected);
  return unexpected == 0 ? 0 : 1;
}
