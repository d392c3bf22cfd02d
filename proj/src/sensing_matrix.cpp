// SPDX-License-Identifier: Apache-2.0

#include "cmag/sensing_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numbers>
#include <random>
#include <thread>

#include "cmag/error.hpp"
#include "cmag/random.hpp"
#include "cmag/sensor_sim.hpp"
#include "cmag/walsh.hpp"

namespace cmag {

namespace {

using Eigen::Index;

constexpr double kOrthoTol = 1e-10;

double max_abs_deviation_from_identity(const Eigen::MatrixXd& gram) {
  return (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

}  // namespace

std::string to_string(BasisLabel label) {
  switch (label) {
    case BasisLabel::spike: return "spike";
    case BasisLabel::walsh_sequency: return "walsh_sequency";
    case BasisLabel::walsh_paley: return "walsh_paley";
    case BasisLabel::fourier_real: return "fourier_real";
    case BasisLabel::dct: return "dct";
    case BasisLabel::custom: return "custom";
  }
  return "custom";
}

BasisLabel basis_label_from_string(const std::string& s) {
  if (s == "spike") return BasisLabel::spike;
  if (s == "walsh" || s == "walsh_sequency") return BasisLabel::walsh_sequency;
  if (s == "walsh_paley") return BasisLabel::walsh_paley;
  if (s == "fourier" || s == "fourier_real") return BasisLabel::fourier_real;
  if (s == "dct" || s == "dct2") return BasisLabel::dct;
  if (s == "custom") return BasisLabel::custom;
  fail(ErrorCode::configuration, "unknown basis '" + s + "'");
}

OrthonormalBasis::OrthonormalBasis(Eigen::MatrixXd columns, BasisLabel label)
    : OrthonormalBasis(std::move(columns), label, false) {}

OrthonormalBasis::OrthonormalBasis(Eigen::MatrixXd columns, BasisLabel label, bool trusted)
    : columns_(std::move(columns)), label_(label) {
  require(columns_.rows() == columns_.cols() && columns_.rows() > 0, ErrorCode::configuration,
          "basis matrix must be square and non-empty");
  if (!trusted) {
    require(columns_.allFinite(), ErrorCode::configuration, "basis has non-finite entries");
    require(max_abs_deviation_from_identity(columns_.transpose() * columns_) <= kOrthoTol, ErrorCode::configuration,
            "basis columns are not orthonormal within 1e-10");
    require(label_ != BasisLabel::spike || columns_.isIdentity(0.0), ErrorCode::configuration,
            "a basis labelled spike must be the identity");
  }
}

OrthonormalBasis OrthonormalBasis::spike(std::size_t n) {
  require(n >= 1, ErrorCode::configuration, "basis dimension must be >= 1");
  return {Eigen::MatrixXd::Identity(static_cast<Index>(n), static_cast<Index>(n)), BasisLabel::spike, true};
}

OrthonormalBasis OrthonormalBasis::walsh(int N, bool sequency) {
  DiscreteWalshBasis w(N, sequency ? WalshOrdering::sequency : WalshOrdering::paley);
  return {w.rows().transpose(), sequency ? BasisLabel::walsh_sequency : BasisLabel::walsh_paley, true};
}

OrthonormalBasis OrthonormalBasis::fourier_real(std::size_t n) {
  require(n == 1 || (n >= 2 && n % 2 == 0), ErrorCode::configuration, "real Fourier basis needs even n");
  const auto ni = static_cast<Index>(n);
  Eigen::MatrixXd cols(ni, ni);
  const double dn = static_cast<double>(n);
  cols.col(0).setConstant(1.0 / std::sqrt(dn));
  if (n > 1) {
    const double s = std::sqrt(2.0 / dn);
    Index c = 1;
    for (std::size_t q = 1; q < n / 2; ++q) {
      for (std::size_t j = 0; j < n; ++j) {
        const double arg = 2.0 * std::numbers::pi * static_cast<double>(q * j % n) / dn;
        cols(static_cast<Index>(j), c) = s * std::cos(arg);
        cols(static_cast<Index>(j), c + 1) = s * std::sin(arg);
      }
      c += 2;
    }
    for (std::size_t j = 0; j < n; ++j) cols(static_cast<Index>(j), c) = (j % 2 ? -1.0 : 1.0) / std::sqrt(dn);
  }
  return {std::move(cols), BasisLabel::fourier_real, true};
}

OrthonormalBasis OrthonormalBasis::dct(std::size_t n) {
  require(n >= 1, ErrorCode::configuration, "DCT basis needs n >= 1");
  const auto ni = static_cast<Index>(n);
  Eigen::MatrixXd cols(ni, ni);
  const double dn = static_cast<double>(n);
  for (Index k = 0; k < ni; ++k) {
    const double s = std::sqrt((k == 0 ? 1.0 : 2.0) / dn);
    for (Index j = 0; j < ni; ++j) {
      // reduce (2j+1)k mod 4n before scaling so large n keeps full accuracy
      const auto r = static_cast<double>((2 * j + 1) * k % (4 * ni));
      cols(j, k) = s * std::cos(std::numbers::pi * r / (2.0 * dn));
    }
  }
  return {std::move(cols), BasisLabel::dct, true};
}

OrthonormalBasis make_basis(BasisLabel label, int N) {
  require(N >= 0 && N <= DiscreteWalshBasis::kMaxDenseOrder, ErrorCode::resource, "basis order too large");
  const std::size_t n = std::size_t{1} << N;
  switch (label) {
    case BasisLabel::spike: return OrthonormalBasis::spike(n);
    case BasisLabel::walsh_sequency: return OrthonormalBasis::walsh(N, true);
    case BasisLabel::walsh_paley: return OrthonormalBasis::walsh(N, false);
    case BasisLabel::fourier_real: return OrthonormalBasis::fourier_real(n);
    case BasisLabel::dct: return OrthonormalBasis::dct(n);
    case BasisLabel::custom: break;
  }
  fail(ErrorCode::configuration, "custom bases must be constructed from a matrix");
}

std::string to_string(RandomEnsemble kind) {
  switch (kind) {
    case RandomEnsemble::bernoulli: return "bernoulli";
    case RandomEnsemble::gaussian: return "gaussian";
    case RandomEnsemble::ternary: return "ternary";
    case RandomEnsemble::sphere_columns: return "sphere_columns";
    case RandomEnsemble::projection: return "projection";
  }
  return "bernoulli";
}

RandomEnsemble ensemble_from_string(const std::string& s) {
  if (s == "bernoulli") return RandomEnsemble::bernoulli;
  if (s == "gaussian") return RandomEnsemble::gaussian;
  if (s == "ternary") return RandomEnsemble::ternary;
  if (s == "sphere_columns" || s == "sphere") return RandomEnsemble::sphere_columns;
  if (s == "projection") return RandomEnsemble::projection;
  fail(ErrorCode::configuration, "unknown random ensemble '" + s + "'");
}

bool SensingMatrix::is_subsampled_walsh() const {
  const auto* p = std::get_if<SubsampledProvenance>(&provenance);
  return p != nullptr && p->phi == BasisLabel::walsh_sequency && p->psi == BasisLabel::spike;
}

double coherence(const OrthonormalBasis& phi, const OrthonormalBasis& psi) {
  require(phi.n() == psi.n(), ErrorCode::domain, "coherence needs bases of equal dimension");
  const double max_ip = (phi.columns().transpose() * psi.columns()).cwiseAbs().maxCoeff();
  return std::sqrt(static_cast<double>(phi.n())) * max_ip;
}

SensingMatrix subsample_rows(const OrthonormalBasis& phi, const OrthonormalBasis& psi,
                             const std::vector<std::size_t>& M) {
  const std::size_t n = phi.n();
  require(psi.n() == n, ErrorCode::domain, "bases must share a dimension");
  require(M.size() <= n, ErrorCode::domain, "more rows requested than available");
  std::vector<char> seen(n, 0);
  for (std::size_t j : M) {
    require(j < n, ErrorCode::domain, "measurement index out of range");
    require(!seen[j], ErrorCode::domain, "duplicate measurement index");
    seen[j] = 1;
  }
  SensingMatrix out;
  out.A.resize(static_cast<Index>(M.size()), static_cast<Index>(n));
  const bool identity = psi.label() == BasisLabel::spike;
  for (std::size_t r = 0; r < M.size(); ++r) {
    const auto col = phi.columns().col(static_cast<Index>(M[r]));
    if (identity) out.A.row(static_cast<Index>(r)) = col.transpose();
    else out.A.row(static_cast<Index>(r)) = col.transpose() * psi.columns();
  }
  out.provenance = SubsampledProvenance{phi.label(), psi.label(), M};
  out.sparse_basis = psi.label();
  return out;
}

std::vector<std::size_t> sample_measurement_indices(std::uint64_t seed, std::size_t m, std::size_t n) {
  require(m <= n, ErrorCode::configuration, "cannot draw more indices than n");
  auto eng = make_engine(seed);
  // partial Fisher-Yates
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(uniform_int(eng, i, n - 1));
    std::swap(pool[i], pool[k]);
  }
  pool.resize(m);
  return pool;
}

SensingMatrix random_matrix(RandomEnsemble kind, std::uint64_t seed, std::size_t m, std::size_t n) {
  require(m >= 1 && m <= n, ErrorCode::configuration, "random matrix needs 1 <= m <= n");
  auto eng = make_engine(seed);
  const auto mi = static_cast<Index>(m), ni = static_cast<Index>(n);
  const double dm = static_cast<double>(m);
  SensingMatrix out;
  out.A.resize(mi, ni);
  std::normal_distribution<double> normal(0.0, 1.0);
  switch (kind) {
    case RandomEnsemble::bernoulli: {
      const double v = 1.0 / std::sqrt(dm);
      for (Index i = 0; i < mi; ++i)
        for (Index j = 0; j < ni; ++j) out.A(i, j) = (eng() >> 63) ? -v : v;
      break;
    }
    case RandomEnsemble::gaussian: {
      const double sd = 1.0 / std::sqrt(dm);
      for (Index i = 0; i < mi; ++i)
        for (Index j = 0; j < ni; ++j) out.A(i, j) = sd * normal(eng);
      break;
    }
    case RandomEnsemble::ternary: {
      const double v = std::sqrt(3.0 / dm);
      for (Index i = 0; i < mi; ++i) {
        for (Index j = 0; j < ni; ++j) {
          const auto r = uniform_int(eng, 0, 5);  // {0}: -v, {1..4}: 0, {5}: +v
          out.A(i, j) = r == 0 ? -v : (r == 5 ? v : 0.0);
        }
      }
      break;
    }
    case RandomEnsemble::sphere_columns: {
      for (Index j = 0; j < ni; ++j) {
        double norm = 0.0;
        do {
          for (Index i = 0; i < mi; ++i) out.A(i, j) = normal(eng);
          norm = out.A.col(j).norm();
        } while (norm == 0.0);
        out.A.col(j) /= norm;
      }
      break;
    }
    case RandomEnsemble::projection: {
      // Haar-distributed m-dimensional row space from the QR of an n x m Gaussian.
      Eigen::MatrixXd g(ni, mi);
      for (Index j = 0; j < mi; ++j)
        for (Index i = 0; i < ni; ++i) g(i, j) = normal(eng);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
      Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(ni, mi);
      // fix column signs so the distribution does not depend on QR conventions
      const Eigen::MatrixXd r = qr.matrixQR().topLeftCorner(mi, mi);
      for (Index j = 0; j < mi; ++j)
        if (r(j, j) < 0) q.col(j) = -q.col(j);
      out.A = std::sqrt(static_cast<double>(n) / dm) * q.transpose();
      break;
    }
  }
  out.provenance = EnsembleProvenance{kind, seed, false, false};
  out.sparse_basis = BasisLabel::spike;
  return out;
}

SensingMatrix random_control_matrix(std::uint64_t seed, std::size_t m, std::size_t n, double T) {
  require(m >= 1 && m <= n, ErrorCode::configuration, "random matrix needs 1 <= m <= n");
  SensingMatrix out;
  out.A.resize(static_cast<Index>(m), static_cast<Index>(n));
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (std::size_t i = 0; i < m; ++i) {
    const auto mod = modulation_from_bits(random_control_sequence(derive_seed({seed, i}), n, T));
    for (std::size_t j = 0; j < n; ++j) {
      out.A(static_cast<Index>(i), static_cast<Index>(j)) = scale * mod.kappa[j];
    }
  }
  out.provenance = EnsembleProvenance{RandomEnsemble::bernoulli, seed, true, false};
  out.sparse_basis = BasisLabel::spike;
  return out;
}

SensingMatrix compose_with_basis(const SensingMatrix& G, const OrthonormalBasis& psi) {
  require(G.n() == psi.n(), ErrorCode::domain, "matrix and basis dimensions disagree");
  SensingMatrix out;
  out.A.noalias() = G.A * psi.columns();
  out.provenance = G.provenance;
  if (auto* e = std::get_if<EnsembleProvenance>(&out.provenance)) e->composed = true;
  out.sparse_basis = psi.label();
  return out;
}

std::uint64_t binomial_count(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    acc = acc * (n - k + i) / i;
    if (acc > std::numeric_limits<std::uint64_t>::max()) return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(acc);
}

namespace {

struct RipPartial {
  double min_ev = std::numeric_limits<double>::infinity();
  double max_ev = -std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;
};

// Enumerates supports whose first index is in [first_lo, first_hi).
RipPartial rip_range(const Eigen::MatrixXd& gram, int S, Index first_lo, Index first_hi) {
  const Index n = gram.rows();
  RipPartial acc;
  std::vector<Index> idx(static_cast<std::size_t>(S));
  Eigen::MatrixXd sub(S, S);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  for (Index first = first_lo; first < first_hi; ++first) {
    if (n - first < S) break;
    for (int k = 0; k < S; ++k) idx[static_cast<std::size_t>(k)] = first + k;
    for (;;) {
      for (int a = 0; a < S; ++a)
        for (int b = 0; b < S; ++b) sub(a, b) = gram(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      double lo, hi;
      if (S == 1) {
        lo = hi = sub(0, 0);
      } else {
        es.compute(sub, Eigen::EigenvaluesOnly);
        lo = es.eigenvalues()(0);
        hi = es.eigenvalues()(S - 1);
      }
      acc.min_ev = std::min(acc.min_ev, lo);
      acc.max_ev = std::max(acc.max_ev, hi);
      ++acc.count;
      // next combination with idx[0] fixed
      int k = S - 1;
      while (k >= 1 && idx[static_cast<std::size_t>(k)] == n - S + k) --k;
      if (k < 1) break;
      ++idx[static_cast<std::size_t>(k)];
      for (int r = k + 1; r < S; ++r) idx[static_cast<std::size_t>(r)] = idx[static_cast<std::size_t>(r - 1)] + 1;
    }
  }
  return acc;
}

}  // namespace

RipReport restricted_isometry_constant(const SensingMatrix& A, int S, std::uint64_t budget, unsigned threads) {
  require(S >= 1, ErrorCode::domain, "sparsity must be >= 1");
  require(static_cast<std::size_t>(S) <= A.n(), ErrorCode::domain, "sparsity exceeds the number of columns");
  const std::uint64_t supports = binomial_count(A.n(), static_cast<std::uint64_t>(S));
  require(supports <= budget, ErrorCode::resource,
          "RIC enumeration needs binomial(" + std::to_string(A.n()) + ", " + std::to_string(S) +
              ") = " + std::to_string(supports) + " supports, over the budget of " + std::to_string(budget));
  const Eigen::MatrixXd gram = A.A.transpose() * A.A;
  const auto n = static_cast<Index>(A.n());

  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<Index>(threads, n));
  RipPartial total;
  if (threads <= 1 || supports < 10000) {
    total = rip_range(gram, S, 0, n);
  } else {
    // interleave first indices so the (front-heavy) work balances
    std::vector<std::future<RipPartial>> parts;
    for (unsigned t = 0; t < threads; ++t) {
      parts.push_back(std::async(std::launch::async, [&, t] {
        RipPartial acc;
        for (Index f = t; f < n; f += threads) {
          const auto p = rip_range(gram, S, f, f + 1);
          acc.min_ev = std::min(acc.min_ev, p.min_ev);
          acc.max_ev = std::max(acc.max_ev, p.max_ev);
          acc.count += p.count;
        }
        return acc;
      }));
    }
    for (auto& f : parts) {
      const auto p = f.get();
      total.min_ev = std::min(total.min_ev, p.min_ev);
      total.max_ev = std::max(total.max_ev, p.max_ev);
      total.count += p.count;
    }
  }
  RipReport report;
  report.S = S;
  report.min_sigma_sq = total.min_ev;
  report.max_sigma_sq = total.max_ev;
  report.delta_S = std::max({0.0, total.max_ev - 1.0, 1.0 - total.min_ev});
  report.enumerated_supports = total.count;
  return report;
}

bool rip_check(const SensingMatrix& A, int S, double delta, std::uint64_t budget) {
  return restricted_isometry_constant(A, S, budget).delta_S < delta;
}

}  // namespace cmag
