#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "kshrink/numerics.hpp"
#include "kshrink/statistics.hpp"
#include "oracles.hpp"

using namespace kshrink;

namespace {

struct Instance {
  std::vector<Matrix> Vm;
  std::vector<SpdMatrix> V;
  std::vector<Vector> X;
  double S = 1.0;
};

Instance random_instance(std::mt19937_64& rng, int p, int k) {
  Instance in;
  for (int i = 0; i < k; ++i) {
    in.Vm.push_back(oracle::random_spd(rng, p));
    in.X.push_back(oracle::random_vector(rng, p, 2.0));
  }
  in.V = fixture::spd_list(in.Vm);
  in.S = 0.5 + std::uniform_real_distribution<double>(0.0, 5.0)(rng);
  return in;
}

Sample to_sample(const Instance& in) { return Sample{in.X, in.S}; }

}  // namespace

TEST_SUITE("statistics") {

TEST_CASE("pooled_matrix values") {
  const auto two = fixture::spd_list({Matrix::Identity(3, 3), Matrix::Identity(3, 3)});
  CHECK((pooled_matrix(two).matrix() - 0.5 * Matrix::Identity(3, 3)).norm() < 1e-15);
  const auto ref = fixture::spd_list(fixture::reference_spec().V);
  const Matrix a = pooled_matrix(ref).matrix();
  CHECK((a - (60.0 / 1370.0) * Matrix::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(a(0, 0) == doctest::Approx(0.0437956).epsilon(1e-6));
}

TEST_CASE("pooled_matrix of diagonal matrices is a per-coordinate harmonic combination") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  std::vector<Matrix> v(3, Matrix::Zero(4, 4));
  for (auto& m : v)
    for (int j = 0; j < 4; ++j) m(j, j) = u(rng);
  const Matrix a = pooled_matrix(fixture::spd_list(v)).matrix();
  for (int j = 0; j < 4; ++j) {
    double prec = 0.0;
    for (const auto& m : v) prec += 1.0 / m(j, j);
    CHECK(a(j, j) == doctest::Approx(1.0 / prec).epsilon(1e-14));
  }
  CHECK(std::abs(a(0, 1)) < 1e-15);
}

TEST_CASE("pooled_mean fixed points") {
  std::mt19937_64 rng(6);
  const Vector x = oracle::random_vector(rng, 4);
  const std::vector<Matrix> vm{oracle::random_spd(rng, 4), oracle::random_spd(rng, 4),
                               oracle::random_spd(rng, 4)};
  const auto v = fixture::spd_list(vm);
  const std::vector<Vector> same(3, x);
  CHECK((pooled_mean(v, same) - x).norm() < 1e-12);

  const auto eq = fixture::spd_list({vm[0], vm[0]});
  const std::vector<Vector> two{oracle::random_vector(rng, 4), oracle::random_vector(rng, 4)};
  CHECK((pooled_mean(eq, two) - 0.5 * (two[0] + two[1])).norm() < 1e-12);
}

TEST_CASE("pooled_mean minimizes the weighted dispersion") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, 2 + trial % 4, 2 + trial % 5);
    const Vector nu = pooled_mean(in.V, in.X);
    CHECK(oracle::pooled_objective_gradient(in.X, in.Vm, nu).norm() < 1e-6);
    const Design d(in.V, 5);
    CHECK((d.pooled_mean(in.X) - nu).norm() < 1e-10 * (1.0 + nu.norm()));
  }
}

TEST_CASE("stat_F values") {
  const auto v = fixture::spd_list({Matrix::Identity(4, 4), Matrix::Identity(4, 4)});
  const Vector x = Vector::Constant(4, 0.7);
  CHECK(stat_F(Sample{{x, x}, 1.0}, v) == 0.0);
  Vector x1 = Vector::Zero(4), x2 = Vector::Zero(4);
  x1[0] = 1.0;
  x1[1] = -1.0;
  // (X1 - X2)'(V1 + V2)^{-1}(X1 - X2) / S with ||X1 - X2||^2 = 2, S = 2
  CHECK(stat_F(Sample{{x1 + x2, x2}, 2.0}, v) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(stat_F(Sample{{x, x}, 0.0}, v), std::domain_error);
}

TEST_CASE("stat_F sum form equals the algebraic form") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Instance in = random_instance(rng, 3, 2 + trial % 5);
    const SpdMatrix a = pooled_matrix(in.V);
    const Vector nu = pooled_mean(in.V, in.X);
    double total = 0.0;
    for (std::size_t i = 0; i < in.X.size(); ++i) total += in.X[i].dot(in.Vm[i].inverse() * in.X[i]);
    const double alt = (total - nu.dot(a.matrix().inverse() * nu)) / in.S;
    CHECK(stat_F(to_sample(in), in.V) == doctest::Approx(alt).epsilon(1e-10));
  }
}

TEST_CASE("two-sample F identity") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Instance in = random_instance(rng, 4, 2);
    const Vector diff = in.X[0] - in.X[1];
    const double expected = diff.dot((in.Vm[0] + in.Vm[1]).inverse() * diff) / in.S;
    CHECK(stat_F(to_sample(in), in.V) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("stat_G values") {
  const auto v = fixture::spd_list({Matrix::Identity(4, 4), Matrix::Identity(4, 4)});
  CHECK(stat_G(Sample{{Vector::Zero(4), Vector::Zero(4)}, 3.0}, v) == 0.0);
  Vector x1 = Vector::Zero(4);
  x1[0] = 2.0;
  CHECK(stat_G(Sample{{x1, Vector::Zero(4)}, 2.0}, v) == doctest::Approx(1.0).epsilon(1e-15));

  std::mt19937_64 rng(14);
  const Instance in = random_instance(rng, 3, 4);
  const Vector nu = pooled_mean(in.V, in.X);
  const Matrix a = pooled_matrix(in.V).matrix();
  CHECK(stat_G(to_sample(in), in.V) ==
        doctest::Approx(nu.dot(a.inverse() * nu) / in.S).epsilon(1e-12));
}

TEST_CASE("stat_B values") {
  const Matrix id = Matrix::Identity(3, 3);
  const auto v = fixture::spd_list({id, id});
  std::mt19937_64 rng(15);
  for (int trial = 0; trial < 10; ++trial) {
    const Sample s{{oracle::random_vector(rng, 3), oracle::random_vector(rng, 3)}, 1.0};
    CHECK(stat_B(s, v, SpdMatrix(id)) == doctest::Approx(0.5).epsilon(1e-12));
  }
  const Vector x = Vector::Constant(3, 1.0);
  CHECK_THROWS_AS(stat_B(Sample{{x, x}, 1.0}, v, SpdMatrix(id)), DegenerateError);
}

TEST_CASE("stat_B is bounded by Ch_max((V_1 - A) Q) and homogeneous in Q") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    const int p = 2 + trial % 5;
    const Instance in = random_instance(rng, p, 2 + trial % 5);
    const Matrix qm = oracle::random_spd(rng, p);
    const SpdMatrix q(qm);
    const double b = stat_B(to_sample(in), in.V, q);
    const Matrix m = in.Vm[0] - pooled_matrix(in.V).matrix();
    CHECK(b >= 0.0);
    CHECK(b <= chmax_product(m, q) * (1 + 1e-10) + 1e-12);
    CHECK(stat_B(to_sample(in), in.V, SpdMatrix(3.5 * qm)) == doctest::Approx(3.5 * b).epsilon(1e-12));
  }
}

TEST_CASE("pooled_stats agrees with the individual statistics") {
  std::mt19937_64 rng(17);
  const Instance in = random_instance(rng, 4, 3);
  const Design d(in.V, 10);
  const SpdMatrix q(oracle::random_spd(rng, 4));
  const PooledStats st = pooled_stats(to_sample(in), d, &q);
  CHECK(st.F == doctest::Approx(stat_F(to_sample(in), in.V)).epsilon(1e-12));
  CHECK(st.G == doctest::Approx(stat_G(to_sample(in), in.V)).epsilon(1e-12));
  REQUIRE(st.B.has_value());
  CHECK(*st.B == doctest::Approx(stat_B(to_sample(in), in.V, q)).epsilon(1e-12));
  const Vector x = Vector::Constant(4, 2.0);
  const PooledStats flat = pooled_stats(Sample{{x, x, x}, 1.0}, d, &q);
  CHECK(flat.F == 0.0);
  CHECK_FALSE(flat.B.has_value());
}

TEST_CASE("translation and scale behaviour") {
  std::mt19937_64 rng(18);
  for (int trial = 0; trial < 20; ++trial) {
    const int p = 3;
    Instance in = random_instance(rng, p, 4);
    const SpdMatrix q(oracle::random_spd(rng, p));
    const Sample base = to_sample(in);
    const Vector shift = oracle::random_vector(rng, p, 3.0);
    Sample moved = base;
    for (auto& x : moved.X) x += shift;
    CHECK((pooled_mean(in.V, moved.X) - pooled_mean(in.V, base.X) - shift).norm() < 1e-10);
    CHECK(stat_F(moved, in.V) == doctest::Approx(stat_F(base, in.V)).epsilon(1e-9));
    CHECK(stat_B(moved, in.V, q) == doctest::Approx(stat_B(base, in.V, q)).epsilon(1e-9));
    CHECK(lemma_in_gap(moved.X, in.V) ==
          doctest::Approx(lemma_in_gap(base.X, in.V)).epsilon(1e-8).scale(1.0));

    const double c = 2.7;
    Sample scaled = base;
    for (auto& x : scaled.X) x *= c;
    scaled.S *= c * c;
    CHECK(stat_F(scaled, in.V) == doctest::Approx(stat_F(base, in.V)).epsilon(1e-12));
    CHECK(stat_G(scaled, in.V) == doctest::Approx(stat_G(base, in.V)).epsilon(1e-12));
    CHECK(stat_B(scaled, in.V, q) == doctest::Approx(stat_B(base, in.V, q)).epsilon(1e-12));
  }
}

TEST_CASE("lemma_in_gap is zero for two samples and for coincident points") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 50; ++trial) {
    const Instance in = random_instance(rng, 2 + trial % 5, 2);
    CHECK(std::abs(lemma_in_gap(in.X, in.V)) < 1e-10);
  }
  const Instance in = random_instance(rng, 3, 4);
  const std::vector<Vector> same(4, in.X[0]);
  CHECK(std::abs(lemma_in_gap(same, in.V)) < 1e-10);
  CHECK_THROWS(lemma_in_gap(std::vector<Vector>{in.X[0]}, std::vector<SpdMatrix>{in.V[0]}));
}

TEST_CASE("lemma_in_gap is nonnegative for k = 3") {
  std::mt19937_64 rng(20);
  for (int trial = 0; trial < 10000; ++trial) {
    const Instance in = random_instance(rng, 3, 3);
    CHECK(lemma_in_gap(in.X, in.V) >= -1e-10);
  }
}

TEST_CASE("linear_bound_check reduces to stat_B for d = e_1") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 4;
    const Instance in = random_instance(rng, 3, k);
    const SpdMatrix q(oracle::random_spd(rng, 3));
    std::vector<double> d(k, 0.0);
    d[0] = 1.0;
    const LinearBound lb = linear_bound_check(in.X, in.V, q, d);
    CHECK(lb.B_value == doctest::Approx(stat_B(to_sample(in), in.V, q)).epsilon(1e-12));
    const Matrix m = in.Vm[0] - pooled_matrix(in.V).matrix();
    CHECK(lb.bound == doctest::Approx(chmax_product(m, q)).epsilon(1e-10));
  }
}

TEST_CASE("linear_bound_check with identity matrices") {
  std::mt19937_64 rng(22);
  const int p = 4, k = 5;
  const std::vector<Matrix> vm(k, Matrix::Identity(p, p));
  const auto v = fixture::spd_list(vm);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> d(k);
    std::vector<Vector> x;
    for (auto& w : d) w = std::normal_distribution<double>()(rng);
    for (int i = 0; i < k; ++i) x.push_back(oracle::random_vector(rng, p));
    double mean = 0.0;
    for (double w : d) mean += w / k;
    double expected = 0.0;
    for (double w : d) expected += (w - mean) * (w - mean);
    const LinearBound lb = linear_bound_check(x, v, SpdMatrix(Matrix::Identity(p, p)), d);
    CHECK(lb.bound == doctest::Approx(expected).epsilon(1e-10));
    CHECK(lb.B_value <= lb.bound + 1e-10);
  }
}

TEST_CASE("linear_bound_check holds on random instances") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 2000; ++trial) {
    const int k = 2 + trial % 5;
    const int p = 2 + trial % 3;
    const Instance in = random_instance(rng, p, k);
    const SpdMatrix q(oracle::random_spd(rng, p));
    std::vector<double> d(k);
    for (auto& w : d) w = std::normal_distribution<double>()(rng);
    const LinearBound lb = linear_bound_check(in.X, in.V, q, d);
    CHECK(lb.B_value <= lb.bound * (1 + 1e-10) + 1e-10);
  }
}

}  // TEST_SUITE
