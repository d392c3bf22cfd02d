// SPDX-License-Identifier: Apache-2.0
//
// Measurement operators: rows of Phi^T Psi picked by an index set, random
// ensembles G, and products G Psi; plus coherence and restricted-isometry
// diagnostics.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace cmag {

enum class BasisLabel { spike, walsh_sequency, walsh_paley, fourier_real, dct, custom };

std::string to_string(BasisLabel label);
BasisLabel basis_label_from_string(const std::string& s);

/// Orthonormal basis of R^n stored column-wise.
class OrthonormalBasis {
 public:
  /// Validates orthonormality to 1e-10 (configuration error otherwise).
  OrthonormalBasis(Eigen::MatrixXd columns, BasisLabel label);

  static OrthonormalBasis spike(std::size_t n);
  /// Columns are the discrete Walsh vectors W_j of order N.
  static OrthonormalBasis walsh(int N, bool sequency = true);
  /// Real Fourier basis on j = 0..n-1: DC, cos/sin pairs for q = 1..n/2-1,
  /// and the Nyquist vector (-1)^j / sqrt(n). n must be even (or 1).
  static OrthonormalBasis fourier_real(std::size_t n);
  /// Orthonormal DCT-II: column k is c_k cos(pi (2j+1) k / (2n)). Sampled at
  /// the cell midpoints this is the cosine series of the field itself.
  static OrthonormalBasis dct(std::size_t n);

  std::size_t n() const { return static_cast<std::size_t>(columns_.cols()); }
  const Eigen::MatrixXd& columns() const { return columns_; }
  BasisLabel label() const { return label_; }

 private:
  OrthonormalBasis(Eigen::MatrixXd columns, BasisLabel label, bool trusted);

  Eigen::MatrixXd columns_;
  BasisLabel label_;
};

OrthonormalBasis make_basis(BasisLabel label, int N);

enum class RandomEnsemble { bernoulli, gaussian, ternary, sphere_columns, projection };

std::string to_string(RandomEnsemble kind);
RandomEnsemble ensemble_from_string(const std::string& s);

struct SubsampledProvenance {
  BasisLabel phi = BasisLabel::custom;
  BasisLabel psi = BasisLabel::custom;
  std::vector<std::size_t> rows;
};

struct EnsembleProvenance {
  RandomEnsemble kind = RandomEnsemble::bernoulli;
  std::uint64_t seed = 0;
  bool from_control_sequences = false;
  bool composed = false;  // true once multiplied by a sparse basis
};

struct ExternalProvenance {
  std::string source;
};

using Provenance = std::variant<SubsampledProvenance, EnsembleProvenance, ExternalProvenance>;

struct SensingMatrix {
  Eigen::MatrixXd A;
  Provenance provenance = ExternalProvenance{};
  BasisLabel sparse_basis = BasisLabel::spike;

  std::size_t m() const { return static_cast<std::size_t>(A.rows()); }
  std::size_t n() const { return static_cast<std::size_t>(A.cols()); }

  /// True when A is rows of the sequency Walsh basis acting on the spike
  /// basis, so the fast transform can stand in for A.
  bool is_subsampled_walsh() const;
};

/// mu = sqrt(n) max |<phi_i, psi_j>|.
double coherence(const OrthonormalBasis& phi, const OrthonormalBasis& psi);

/// Rows (Phi^T Psi)_{j,.} for j in M, in M's order.
SensingMatrix subsample_rows(const OrthonormalBasis& phi, const OrthonormalBasis& psi,
                             const std::vector<std::size_t>& M);

/// m distinct indices drawn uniformly without replacement from {0..n-1}.
std::vector<std::size_t> sample_measurement_indices(std::uint64_t seed, std::size_t m, std::size_t n);

SensingMatrix random_matrix(RandomEnsemble kind, std::uint64_t seed, std::size_t m, std::size_t n);

/// Bernoulli matrix whose rows are kappa_u / sqrt(m) for m random control
/// sequences (pulse at each t_j with probability 1/2).
SensingMatrix random_control_matrix(std::uint64_t seed, std::size_t m, std::size_t n, double T);

/// A = G Psi.
SensingMatrix compose_with_basis(const SensingMatrix& G, const OrthonormalBasis& psi);

struct RipReport {
  int S = 0;
  double delta_S = 0.0;
  double min_sigma_sq = 1.0;  // smallest squared singular value over supports
  double max_sigma_sq = 1.0;  // largest squared singular value over supports
  std::uint64_t enumerated_supports = 0;
};

inline constexpr std::uint64_t kDefaultRipBudget = 2'000'000;

/// Exact restricted isometry constant by enumerating every S-column support.
/// Throws resource error when binomial(n, S) exceeds the budget.
RipReport restricted_isometry_constant(const SensingMatrix& A, int S,
                                       std::uint64_t budget = kDefaultRipBudget, unsigned threads = 0);

/// true iff delta_S < delta.
bool rip_check(const SensingMatrix& A, int S, double delta, std::uint64_t budget = kDefaultRipBudget);

/// Recovery gate for planted S-sparse vectors: order 2S with delta < 0.4652.
inline constexpr double kRipRecoveryThreshold = 0.4652;

/// binomial(n, k), saturating at UINT64_MAX.
std::uint64_t binomial_count(std::uint64_t n, std::uint64_t k);

}  // namespace cmag
