#ifndef KSHRINK_TESTS_FIXTURES_HPP_
#define KSHRINK_TESTS_FIXTURES_HPP_

#include <initializer_list>
#include <vector>

#include "kshrink/model.hpp"

namespace fixture {

// p = k = 5, n = 20, sigma2 = 2, V_i = 0.1 i I, Q = V_1^{-1}, mu_i = m_i j_5.
inline kshrink::ModelSpec reference_spec(std::initializer_list<double> means = {0, 0, 0, 0, 0}) {
  kshrink::ModelSpec s;
  s.p = 5;
  s.k = 5;
  s.n = 20;
  s.sigma2 = 2.0;
  for (int i = 1; i <= 5; ++i) s.V.push_back(0.1 * i * kshrink::Matrix::Identity(5, 5));
  s.Q = 10.0 * kshrink::Matrix::Identity(5, 5);
  for (double m : means) s.mu.push_back(kshrink::Vector::Constant(5, m));
  return s;
}

inline std::vector<kshrink::SpdMatrix> spd_list(const std::vector<kshrink::Matrix>& v) {
  std::vector<kshrink::SpdMatrix> out;
  for (const auto& m : v) out.emplace_back(m);
  return out;
}

}  // namespace fixture

#endif  // KSHRINK_TESTS_FIXTURES_HPP_
