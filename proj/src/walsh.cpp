// SPDX-License-Identifier: Apache-2.0

#include "cmag/walsh.hpp"

#include <bit>
#include <cmath>
#include <vector>

#include "cmag/error.hpp"

namespace cmag {

namespace {

bool is_pow2(std::size_t x) { return x != 0 && (x & (x - 1)) == 0; }

int log2_exact(std::size_t x) { return std::countr_zero(x); }

std::uint64_t ordering_code(const WalshIndex& idx) {
  return idx.ordering == WalshOrdering::sequency ? gray_code(idx.j) : idx.j;
}

}  // namespace

int rademacher(int k, double t) {
  require(k >= 1, ErrorCode::domain, "Rademacher index must be >= 1");
  require(t >= 0.0 && t < 1.0, ErrorCode::domain, "Rademacher argument must lie in [0, 1)");
  // floor(t * 2^k) is exact in double; its parity is the k'th binary digit.
  const double scaled = std::floor(std::ldexp(t, k));
  return std::fmod(scaled, 2.0) == 0.0 ? 1 : -1;
}

int walsh_eval(const WalshIndex& idx, double t) {
  require(t >= 0.0 && t < 1.0, ErrorCode::domain, "Walsh argument must lie in [0, 1)");
  std::uint64_t code = ordering_code(idx);
  int sign = 1;
  for (int k = 1; code != 0; ++k, code >>= 1) {
    if (code & 1U) sign *= rademacher(k, t);
  }
  return sign;
}

std::uint64_t bit_reverse(std::uint64_t x, int N) {
  std::uint64_t r = 0;
  for (int b = 0; b < N; ++b) {
    r = (r << 1) | ((x >> b) & 1U);
  }
  return r;
}

std::uint64_t hadamard_row(const WalshIndex& idx, int N) {
  const std::uint64_t code = ordering_code(idx);
  require(N >= 0 && N < 64 && (code >> N) == 0, ErrorCode::domain, "Walsh index does not fit the grid order");
  return bit_reverse(code, N);
}

std::vector<std::uint64_t> walsh_permutation(int N, WalshOrdering ordering) {
  require(N >= 0 && N <= 30, ErrorCode::resource, "Walsh order too large");
  const std::size_t n = std::size_t{1} << N;
  std::vector<std::uint64_t> perm(n);
  for (std::size_t j = 0; j < n; ++j) perm[j] = hadamard_row({ordering, j}, N);
  return perm;
}

DiscreteWalshBasis::DiscreteWalshBasis(int N, WalshOrdering ordering) : N_(N), ordering_(ordering) {
  require(N >= 0, ErrorCode::domain, "Walsh order must be non-negative");
  require(N <= kMaxDenseOrder, ErrorCode::resource, "dense Walsh basis of order " + std::to_string(N) + " too large");
  const std::size_t n = std::size_t{1} << N;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  rows_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t c = 0; c < n; ++c) {
      const double t = (static_cast<double>(c) + 0.5) / static_cast<double>(n);
      rows_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(c)) = walsh_eval({ordering, j}, t) * scale;
    }
  }
}

void fwht_natural(std::span<double> v) {
  const std::size_t n = v.size();
  require(is_pow2(n), ErrorCode::domain, "transform length must be a power of two");
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t i = 0; i < n; i += 2 * h) {
      for (std::size_t k = i; k < i + h; ++k) {
        const double a = v[k], b = v[k + h];
        v[k] = a + b;
        v[k + h] = a - b;
      }
    }
  }
}

void walsh_forward(std::span<const double> v, std::span<double> coeffs, WalshOrdering ordering) {
  const std::size_t n = v.size();
  require(is_pow2(n) && coeffs.size() == n, ErrorCode::domain, "walsh_forward size mismatch");
  std::vector<double> tmp(v.begin(), v.end());
  fwht_natural(tmp);
  const int N = log2_exact(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) coeffs[j] = tmp[hadamard_row({ordering, j}, N)] * scale;
}

void walsh_inverse(std::span<const double> coeffs, std::span<double> v, WalshOrdering ordering) {
  const std::size_t n = coeffs.size();
  require(is_pow2(n) && v.size() == n, ErrorCode::domain, "walsh_inverse size mismatch");
  const int N = log2_exact(n);
  for (std::size_t j = 0; j < n; ++j) v[hadamard_row({ordering, j}, N)] = coeffs[j];
  fwht_natural(v);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (auto& x : v) x *= scale;
}

double walsh_coefficient(const FieldModel& field, const WalshIndex& idx, double T, std::size_t quadrature_points) {
  require(T > 0.0, ErrorCode::domain, "T must be positive");
  require(is_pow2(quadrature_points), ErrorCode::domain, "quadrature_points must be a power of two");
  const int Q = log2_exact(quadrature_points);
  // w_j is constant on each of the 2^Q sub-cells once its code fits in Q bits
  const std::uint64_t h = hadamard_row(idx, Q);
  double acc = 0.0;
  for (std::size_t i = 0; i < quadrature_points; ++i) {
    const double t = cell_midpoint(i, quadrature_points, T);
    const double w = (std::popcount(h & i) & 1) ? -1.0 : 1.0;
    acc += w * evaluate(field, t);
  }
  return acc / static_cast<double>(quadrature_points);
}

WalshCoefficients walsh_coefficients(const FieldModel& field, int N, std::size_t quadrature_points) {
  require(N >= 0 && N <= 30, ErrorCode::domain, "Walsh order out of range");
  const std::size_t n = std::size_t{1} << N;
  require(is_pow2(quadrature_points) && quadrature_points >= n, ErrorCode::domain,
          "quadrature_points must be a power of two >= 2^N");
  const double T = duration(field);
  const std::size_t per_cell = quadrature_points / n;
  std::vector<double> avg(n, 0.0);
  for (std::size_t i = 0; i < quadrature_points; ++i) {
    avg[i / per_cell] += evaluate(field, cell_midpoint(i, quadrature_points, T));
  }
  for (auto& a : avg) a /= static_cast<double>(per_cell);
  std::vector<double> c(n);
  walsh_forward(avg, c);
  WalshCoefficients out;
  out.T = T;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) out.coeffs[j] = c[j] * scale;
  return out;
}

}  // namespace cmag
