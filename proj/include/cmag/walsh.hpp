// SPDX-License-Identifier: Apache-2.0
//
// Walsh functions on [0,1) built from Rademacher functions, their discrete
// orthonormal bases on R^n (n = 2^N), and a fast O(n log n) transform.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cmag/signal_models.hpp"

namespace cmag {

enum class WalshOrdering { sequency, paley };

struct WalshIndex {
  WalshOrdering ordering = WalshOrdering::sequency;
  std::uint64_t j = 0;
};

/// Walsh coefficients f_j = (1/T) int_0^T f(t) w_j(t/T) dt.
struct WalshCoefficients {
  double T = 0.0;
  std::map<std::uint64_t, double> coeffs;
};

/// R_k(t) = (-1)^{t_k}, t_k the k'th binary digit of t (terminating
/// expansion at dyadic rationals).
int rademacher(int k, double t);

/// Gray code of i; bit k-1 of the result selects R_k in the sequency product.
inline std::uint64_t gray_code(std::uint64_t i) { return i ^ (i >> 1); }

int walsh_eval(const WalshIndex& idx, double t);

/// Reverses the low N bits of x.
std::uint64_t bit_reverse(std::uint64_t x, int N);

/// Row of the natural-order (Hadamard) matrix H[h][c] = (-1)^{popcount(h & c)}
/// that equals Walsh function j sampled on the 2^N cells.
std::uint64_t hadamard_row(const WalshIndex& idx, int N);

/// perm[j] = hadamard_row({ordering, j}, N) for all j < 2^N.
std::vector<std::uint64_t> walsh_permutation(int N, WalshOrdering ordering = WalshOrdering::sequency);

/// Dense n x n orthonormal Walsh basis; row j is w_j on the cell midpoints
/// divided by sqrt(n). Immutable after construction.
class DiscreteWalshBasis {
 public:
  static constexpr int kMaxDenseOrder = 13;

  explicit DiscreteWalshBasis(int N, WalshOrdering ordering = WalshOrdering::sequency);

  int order() const { return N_; }
  std::size_t size() const { return static_cast<std::size_t>(rows_.rows()); }
  WalshOrdering ordering() const { return ordering_; }
  const Eigen::MatrixXd& rows() const { return rows_; }

 private:
  int N_;
  WalshOrdering ordering_;
  Eigen::MatrixXd rows_;
};

inline DiscreteWalshBasis discrete_walsh_matrix(int N, WalshOrdering ordering = WalshOrdering::sequency) {
  return DiscreteWalshBasis(N, ordering);
}

/// In-place natural-order Hadamard butterfly (unnormalized).
void fwht_natural(std::span<double> v);

/// coeffs[j] = <W_j, v> for the orthonormal basis in the given ordering.
/// v.size() must be a power of two. Equals rows() * v of the dense basis.
void walsh_forward(std::span<const double> v, std::span<double> coeffs,
                   WalshOrdering ordering = WalshOrdering::sequency);

/// v = W^T coeffs (inverse of walsh_forward).
void walsh_inverse(std::span<const double> coeffs, std::span<double> v,
                   WalshOrdering ordering = WalshOrdering::sequency);

/// Midpoint-rule approximation of (1/T) int_0^T b(t) w_j(t/T) dt using
/// quadrature_points equally spaced midpoints. quadrature_points must be a
/// power of two no smaller than the number of constant pieces of w_j.
double walsh_coefficient(const FieldModel& field, const WalshIndex& idx, double T, std::size_t quadrature_points);

/// All coefficients j < 2^N from one fast transform of midpoint samples.
WalshCoefficients walsh_coefficients(const FieldModel& field, int N, std::size_t quadrature_points);

}  // namespace cmag
