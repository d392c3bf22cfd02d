// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <bit>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "cmag/error.hpp"
#include "cmag/walsh.hpp"
#include "support.hpp"

using namespace cmag;
using Catch::Approx;

namespace {

// sign of sin, the textbook square wave
int sine_sign(int k, double t) { return std::sin(std::ldexp(M_PI, k) * t) > 0 ? 1 : -1; }

// w_j(t) as a product of sine-sign square waves over the Gray-code bits of j
int walsh_by_sines(std::uint64_t j, double t) {
  const std::uint64_t g = j ^ (j >> 1);
  int s = 1;
  for (int k = 1; k <= 62; ++k)
    if ((g >> (k - 1)) & 1) s *= sine_sign(k, t);
  return s;
}

int sign_changes(const Eigen::RowVectorXd& row) {
  int c = 0;
  for (Eigen::Index i = 1; i < row.size(); ++i) c += (row(i) > 0) != (row(i - 1) > 0);
  return c;
}

}  // namespace

TEST_CASE("rademacher digits") {
  CHECK(rademacher(1, 0.25) == 1);
  CHECK(rademacher(2, 0.25) == -1);
  for (int i = 0; i < 8; ++i) {
    const double t = (2 * i + 1) / 16.0;
    CHECK(rademacher(3, t) == sine_sign(3, t));
  }
  CHECK_THROWS_AS(rademacher(0, 0.5), Error);
  CHECK_THROWS_AS(rademacher(1, 1.0), Error);
  CHECK_THROWS_AS(rademacher(1, -0.1), Error);
}

TEST_CASE("rademacher matches the sine square wave off the dyadic points") {
  const int cells = 1 << 13;
  for (int k = 1; k <= 12; ++k) {
    for (int i = 0; i < cells; ++i) {
      const double t = (2.0 * i + 1.0) / (2.0 * cells);
      REQUIRE(rademacher(k, t) == sine_sign(k, t));
    }
  }
}

TEST_CASE("gray code flips one bit per step") {
  CHECK(gray_code(0) == 0);
  for (std::uint64_t i = 0; i < 1024; ++i) CHECK(std::popcount(gray_code(i) ^ gray_code(i + 1)) == 1);
}

TEST_CASE("four-point walsh table") {
  const int table[4][4] = {{1, 1, 1, 1}, {1, 1, -1, -1}, {1, -1, -1, 1}, {1, -1, 1, -1}};
  for (std::uint64_t j = 0; j < 4; ++j)
    for (int q = 0; q < 4; ++q) CHECK(walsh_eval({WalshOrdering::sequency, j}, (2 * q + 1) / 8.0) == table[j][q]);

  const auto M = discrete_walsh_matrix(2);
  for (int j = 0; j < 4; ++j)
    for (int q = 0; q < 4; ++q) CHECK(M.rows()(j, q) == table[j][q] / 2.0);
  CHECK_THROWS_AS(walsh_eval({WalshOrdering::sequency, 1}, 1.0), Error);
}

TEST_CASE("walsh_eval agrees with products of sine square waves") {
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint64_t j = 0; j < 256; ++j) {
    for (int s = 0; s < 20; ++s) {
      // stay off dyadic points of level <= 9
      const double t = (std::floor(u(eng) * 512) + 0.5) / 512.0;
      REQUIRE(walsh_eval({WalshOrdering::sequency, j}, t) == walsh_by_sines(j, t));
    }
  }
}

TEST_CASE("walsh_eval sequency j changes sign j times") {
  for (std::uint64_t j = 0; j < 8; ++j) {
    int changes = 0, prev = walsh_eval({WalshOrdering::sequency, j}, 1.0 / 16);
    for (int q = 1; q < 8; ++q) {
      const int cur = walsh_eval({WalshOrdering::sequency, j}, (2 * q + 1) / 16.0);
      changes += cur != prev;
      prev = cur;
    }
    CHECK(changes == static_cast<int>(j));
  }
}

TEST_CASE("dense basis edge cases") {
  const auto M0 = discrete_walsh_matrix(0);
  REQUIRE(M0.size() == 1);
  CHECK(M0.rows()(0, 0) == 1.0);
  CHECK_THROWS_AS(discrete_walsh_matrix(DiscreteWalshBasis::kMaxDenseOrder + 1), Error);
  CHECK_THROWS_AS(discrete_walsh_matrix(-1), Error);
}

TEST_CASE("dense basis is orthonormal with entries +-1/sqrt(n)") {
  for (int N = 0; N <= 10; ++N) {
    for (auto ord : {WalshOrdering::sequency, WalshOrdering::paley}) {
      const auto M = discrete_walsh_matrix(N, ord);
      const auto n = static_cast<Eigen::Index>(M.size());
      const double e = 1.0 / std::sqrt(static_cast<double>(n));
      const Eigen::MatrixXd G = M.rows().transpose() * M.rows();
      REQUIRE((G - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
      REQUIRE(((M.rows().cwiseAbs().array() - e).abs() == 0.0).all());
      REQUIRE((M.rows().row(0).array() == e).all());
    }
  }
}

TEST_CASE("dense rows sample walsh_eval at cell midpoints") {
  const int N = 6;
  const auto M = discrete_walsh_matrix(N);
  const double n = 64.0;
  for (std::uint64_t j = 0; j < 64; ++j)
    for (int q = 0; q < 64; ++q)
      REQUIRE(M.rows()(static_cast<Eigen::Index>(j), q) ==
              walsh_eval({WalshOrdering::sequency, j}, (q + 0.5) / n) / std::sqrt(n));
}

TEST_CASE("sequency row j has exactly j sign changes") {
  for (int N = 0; N <= 8; ++N) {
    const auto M = discrete_walsh_matrix(N);
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(M.size()); ++j)
      REQUIRE(sign_changes(M.rows().row(j)) == j);
  }
}

TEST_CASE("sequency and paley agree as sets on dyadic blocks") {
  for (int N = 0; N <= 8; ++N) {
    const auto S = discrete_walsh_matrix(N, WalshOrdering::sequency);
    const auto P = discrete_walsh_matrix(N, WalshOrdering::paley);
    for (int k = 0; k <= N; ++k) {
      std::set<std::vector<double>> a, b;
      for (Eigen::Index j = 0; j < (Eigen::Index{1} << k); ++j) {
        const Eigen::RowVectorXd rs = S.rows().row(j), rp = P.rows().row(j);
        a.insert(std::vector<double>(rs.data(), rs.data() + rs.size()));
        b.insert(std::vector<double>(rp.data(), rp.data() + rp.size()));
      }
      REQUIRE(a == b);
    }
  }
}

TEST_CASE("fast transform matches the dense basis") {
  std::mt19937_64 eng(11);
  std::normal_distribution<double> g;
  for (int N = 0; N <= 10; ++N) {
    const std::size_t n = std::size_t{1} << N;
    for (auto ord : {WalshOrdering::sequency, WalshOrdering::paley}) {
      const auto M = discrete_walsh_matrix(N, ord);
      Eigen::VectorXd v(static_cast<Eigen::Index>(n));
      for (auto& x : v) x = g(eng);
      const Eigen::VectorXd dense = M.rows() * v;
      std::vector<double> fast(n), back(n);
      walsh_forward(std::span<const double>(v.data(), n), fast, ord);
      for (std::size_t j = 0; j < n; ++j) REQUIRE(std::abs(fast[j] - dense(static_cast<Eigen::Index>(j))) < 1e-10);
      walsh_inverse(fast, back, ord);
      for (std::size_t j = 0; j < n; ++j) REQUIRE(std::abs(back[j] - v(static_cast<Eigen::Index>(j))) < 1e-10);
      // Parseval
      const double nf = Eigen::Map<const Eigen::VectorXd>(fast.data(), static_cast<Eigen::Index>(n)).norm();
      REQUIRE(std::abs(nf - v.norm()) <= 1e-10 * v.norm());
    }
  }
}

TEST_CASE("fast transform rejects lengths that are not powers of two") {
  std::vector<double> v(6, 1.0), c(6);
  CHECK_THROWS_AS(walsh_forward(v, c), Error);
}

TEST_CASE("walsh coefficients of a constant field") {
  MultiToneField f{1e-3, {{2.5, 0.0, 0.0}}};
  CHECK(walsh_coefficient(f, {WalshOrdering::sequency, 0}, 1e-3, 1024) == Approx(2.5).epsilon(1e-14));
  for (std::uint64_t j : {1u, 2u, 7u, 100u, 1023u})
    CHECK(std::abs(walsh_coefficient(f, {WalshOrdering::sequency, j}, 1e-3, 1024)) < 1e-14);
}

TEST_CASE("walsh coefficients of the fixture match a fine midpoint sum") {
  const auto f = test::fixture_field();
  const std::size_t Q = std::size_t{1} << 20;
  const double T = f.T;
  for (std::uint64_t j : {0u, 1u, 5u, 100u, 511u, 1023u}) {
    double acc = 0.0;
    for (std::size_t i = 0; i < Q; ++i) {
      const double s = (i + 0.5) / static_cast<double>(Q);
      acc += walsh_by_sines(j, s) * test::sum_tones(f, s * T);
    }
    acc /= static_cast<double>(Q);
    const double got = walsh_coefficient(f, {WalshOrdering::sequency, j}, T, Q);
    INFO("j = " << j << " oracle " << acc);
    CHECK(std::abs(got - acc) <= 1e-8 * std::abs(acc));
  }
}

TEST_CASE("all-coefficient transform agrees with single coefficients") {
  const auto f = test::fixture_field(3);
  const auto all = walsh_coefficients(f, 8, 1 << 14);
  REQUIRE(all.coeffs.size() == 256);
  for (std::uint64_t j : {0u, 3u, 77u, 255u})
    CHECK(all.coeffs.at(j) ==
          Approx(walsh_coefficient(f, {WalshOrdering::sequency, j}, f.T, 1 << 14)).margin(1e-12));
}
