// SPDX-License-Identifier: Apache-2.0

#include "cmag/l1_recovery.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>

#include "cmag/error.hpp"
#include "cmag/walsh.hpp"

namespace cmag {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Linear operators

class Operator {
 public:
  virtual ~Operator() = default;
  virtual void apply(const VectorXd& x, VectorXd& out) const = 0;    // out = A x
  virtual void adjoint(const VectorXd& r, VectorXd& out) const = 0;  // out = A^T r
};

class DenseOperator final : public Operator {
 public:
  explicit DenseOperator(const MatrixXd& A) : A_(A) {}
  void apply(const VectorXd& x, VectorXd& out) const override { out.noalias() = A_ * x; }
  void adjoint(const VectorXd& r, VectorXd& out) const override { out.noalias() = A_.transpose() * r; }

 private:
  const MatrixXd& A_;
};

// A = rows M of the orthonormal sequency Walsh matrix.
class WalshRowsOperator final : public Operator {
 public:
  WalshRowsOperator(int N, const std::vector<std::size_t>& rows)
      : n_(std::size_t{1} << N), scale_(1.0 / std::sqrt(static_cast<double>(n_))), buf_(n_) {
    const auto perm = walsh_permutation(N, WalshOrdering::sequency);
    slots_.reserve(rows.size());
    for (std::size_t r : rows) slots_.push_back(perm[r]);
  }

  void apply(const VectorXd& x, VectorXd& out) const override {
    std::copy(x.data(), x.data() + n_, buf_.begin());
    fwht_natural(buf_);
    out.resize(static_cast<Index>(slots_.size()));
    for (std::size_t i = 0; i < slots_.size(); ++i) out(static_cast<Index>(i)) = buf_[slots_[i]] * scale_;
  }

  void adjoint(const VectorXd& r, VectorXd& out) const override {
    std::fill(buf_.begin(), buf_.end(), 0.0);
    for (std::size_t i = 0; i < slots_.size(); ++i) buf_[slots_[i]] = r(static_cast<Index>(i));
    fwht_natural(buf_);
    out.resize(static_cast<Index>(n_));
    for (std::size_t j = 0; j < n_; ++j) out(static_cast<Index>(j)) = buf_[j] * scale_;
  }

 private:
  std::size_t n_;
  double scale_;
  std::vector<std::uint64_t> slots_;
  mutable std::vector<double> buf_;
};

std::unique_ptr<Operator> make_operator(const SensingMatrix& A, const SolverOptions& opts) {
  if (opts.use_fast_transform && A.is_subsampled_walsh()) {
    const auto& prov = std::get<SubsampledProvenance>(A.provenance);
    return std::make_unique<WalshRowsOperator>(std::countr_zero(A.n()), prov.rows);
  }
  return std::make_unique<DenseOperator>(A.A);
}

// Solves (shift I + A A^T) c = rhs.
class GramSolver {
 public:
  GramSolver(const SensingMatrix& A, double shift) : shift_(shift) {
    if (A.is_subsampled_walsh()) {
      identity_scale_ = 1.0 + shift;  // rows are orthonormal
      return;
    }
    MatrixXd g = A.A * A.A.transpose();
    g.diagonal().array() += shift;
    llt_.compute(g);
    if (llt_.info() == Eigen::Success) {
      const auto& L = llt_.matrixLLT();
      const double dmax = L.diagonal().cwiseAbs().maxCoeff();
      const double dmin = L.diagonal().cwiseAbs().minCoeff();
      if (dmin > 1e-7 * dmax) return;
    }
    cod_ = std::make_unique<Eigen::CompleteOrthogonalDecomposition<MatrixXd>>(g);
  }

  VectorXd solve(const VectorXd& rhs) const {
    if (identity_scale_) return rhs / *identity_scale_;
    if (cod_) return cod_->solve(rhs);
    return llt_.solve(rhs);
  }

  bool rank_deficient() const { return cod_ != nullptr; }

 private:
  double shift_;
  std::optional<double> identity_scale_;
  Eigen::LLT<MatrixXd> llt_;
  std::unique_ptr<Eigen::CompleteOrthogonalDecomposition<MatrixXd>> cod_;
};

VectorXd soft_threshold(const VectorXd& v, double t) {
  return v.unaryExpr([t](double a) { return a > t ? a - t : (a < -t ? a + t : 0.0); });
}

std::vector<Index> support_of(const VectorXd& z) {
  std::vector<Index> idx;
  for (Index i = 0; i < z.size(); ++i)
    if (z(i) != 0.0) idx.push_back(i);
  return idx;
}

MatrixXd gather_columns(const MatrixXd& A, const std::vector<Index>& I) {
  MatrixXd out(A.rows(), static_cast<Index>(I.size()));
  for (std::size_t k = 0; k < I.size(); ++k) out.col(static_cast<Index>(k)) = A.col(I[k]);
  return out;
}

void validate_inputs(const SensingMatrix& A, const VectorXd& y) {
  require(A.m() >= 1 && A.n() >= 1, ErrorCode::domain, "empty sensing matrix");
  require(static_cast<std::size_t>(y.size()) == A.m(), ErrorCode::domain, "measurement length must equal m");
  require(y.allFinite() && A.A.allFinite(), ErrorCode::numeric, "non-finite problem data");
}

RecoveryResult finish(const SensingMatrix& A, VectorXd x, const VectorXd& y, int iterations, bool converged,
                      bool polished, double gap) {
  RecoveryResult r;
  r.l1_value = x.lpNorm<1>();
  r.residual_norm = (y - A.A * x).norm();
  r.x_star = std::move(x);
  r.iterations = iterations;
  r.converged = converged;
  r.polished = polished;
  r.duality_gap_estimate = std::max(0.0, gap);
  return r;
}

double relative_gap(double gap, double l1) { return gap / std::max(l1, std::numeric_limits<double>::min()); }

// ---------------------------------------------------------------------------
// Basis pursuit

struct Candidate {
  VectorXd x;
  double gap = 0.0;
};

// Certified solve on the support of z with the signs of z, or nothing.
std::optional<Candidate> polish_bp(const SensingMatrix& A, const VectorXd& y, const VectorXd& z,
                                   const VectorXd& lambda0, const SolverOptions& opts) {
  const auto I = support_of(z);
  if (I.empty() || I.size() > A.m()) return std::nullopt;
  const MatrixXd AI = gather_columns(A.A, I);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(AI);
  if (qr.rank() < static_cast<Index>(I.size())) return std::nullopt;
  const VectorXd xI = qr.solve(y);
  const double ynorm = y.norm();
  if ((AI * xI - y).norm() > opts.feasibility_tol * ynorm) return std::nullopt;

  VectorXd s(static_cast<Index>(I.size()));
  for (std::size_t k = 0; k < I.size(); ++k) {
    const double zk = z(I[k]), xk = xI(static_cast<Index>(k));
    if (xk == 0.0 || (xk > 0) != (zk > 0)) return std::nullopt;
    s(static_cast<Index>(k)) = xk > 0 ? 1.0 : -1.0;
  }
  VectorXd x = VectorXd::Zero(static_cast<Index>(A.n()));
  for (std::size_t k = 0; k < I.size(); ++k) x(I[k]) = xI(static_cast<Index>(k));
  const double l1 = x.lpNorm<1>();

  const Eigen::LDLT<MatrixXd> gI(AI.transpose() * AI);
  std::optional<Candidate> best;
  // Two dual candidates: the ADMM multiplier corrected onto the support
  // equations, and the minimum-norm solution of A_I^T lambda = s.
  for (const VectorXd& base : {lambda0, VectorXd(VectorXd::Zero(y.size()))}) {
    const VectorXd lambda = base + AI * gI.solve(s - AI.transpose() * base);
    const double gmax = (A.A.transpose() * lambda).cwiseAbs().maxCoeff();
    const double lower = y.dot(lambda) / std::max(1.0, gmax);
    const double gap = l1 - lower;
    if (!best || gap < best->gap) best = Candidate{x, gap};
  }
  if (relative_gap(best->gap, l1) <= opts.optimality_tol) return best;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// BPDN

std::optional<Candidate> polish_bpdn(const SensingMatrix& A, const VectorXd& y, double eps, const VectorXd& z,
                                     const SolverOptions& opts) {
  const auto I = support_of(z);
  if (I.empty() || I.size() > A.m()) return std::nullopt;
  const MatrixXd AI = gather_columns(A.A, I);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(AI);
  if (qr.rank() < static_cast<Index>(I.size())) return std::nullopt;
  VectorXd s(static_cast<Index>(I.size()));
  for (std::size_t k = 0; k < I.size(); ++k) s(static_cast<Index>(k)) = z(I[k]) > 0 ? 1.0 : -1.0;

  const Eigen::LDLT<MatrixXd> gI(AI.transpose() * AI);
  const VectorXd x_ls = qr.solve(y);
  const VectorXd r0 = y - AI * x_ls;
  const VectorXd Ginv_s = gI.solve(s);
  const VectorXd d = AI * Ginv_s;
  const double slack = eps * eps - r0.squaredNorm();
  if (slack <= 0.0 || d.squaredNorm() == 0.0) return std::nullopt;
  // |r(lambda)|^2 = |r0|^2 + lambda^2 |d|^2 because r0 is orthogonal to range(A_I)
  const double lambda = std::sqrt(slack / d.squaredNorm());
  const VectorXd xI = x_ls - lambda * Ginv_s;
  for (Index k = 0; k < xI.size(); ++k) {
    if (xI(k) == 0.0 || (xI(k) > 0) != (s(k) > 0)) return std::nullopt;
  }
  VectorXd x = VectorXd::Zero(static_cast<Index>(A.n()));
  for (std::size_t k = 0; k < I.size(); ++k) x(I[k]) = xI(static_cast<Index>(k));
  const VectorXd r = y - A.A * x;
  if (r.norm() > eps * (1.0 + 1e-9)) return std::nullopt;

  // r / lambda is the exact dual point but loses digits as lambda -> 0; d is
  // its noiseless part and stays accurate there
  auto bound = [&](VectorXd mu) {
    const double gmax = (A.A.transpose() * mu).cwiseAbs().maxCoeff();
    mu /= std::max(1.0, gmax);
    return y.dot(mu) - eps * mu.norm();
  };
  const double lower = std::max(bound(r / lambda), bound(d));
  const double l1 = x.lpNorm<1>();
  const double gap = l1 - lower;
  if (relative_gap(gap, l1) <= opts.optimality_tol) return Candidate{std::move(x), gap};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Lasso homotopy

// Upper-triangular R with R^T R = A_I^T A_I, grown and shrunk one column at
// a time.
class ActiveSet {
 public:
  ActiveSet(const MatrixXd& A, Index capacity)
      : A_(A), R_(MatrixXd::Zero(capacity, capacity)), AI_(A.rows(), capacity) {}

  Index size() const { return k_; }
  const std::vector<Index>& indices() const { return idx_; }

  bool insert(Index j) {
    if (k_ == R_.rows()) return false;
    const auto a = A_.col(j);
    VectorXd l = VectorXd::Zero(k_);
    if (k_ > 0) {
      l = AI_.leftCols(k_).transpose() * a;
      R_.topLeftCorner(k_, k_).triangularView<Eigen::Upper>().transpose().solveInPlace(l);
    }
    const double aa = a.squaredNorm();
    const double d2 = aa - l.squaredNorm();
    if (!(d2 > 1e-10 * aa)) return false;  // numerically dependent column
    R_.block(0, k_, k_, 1) = l;
    R_.row(k_).head(k_).setZero();
    R_(k_, k_) = std::sqrt(d2);
    AI_.col(k_) = a;
    idx_.push_back(j);
    ++k_;
    return true;
  }

  void erase(Index p) {
    for (Index c = p; c + 1 < k_; ++c) {
      R_.col(c).head(k_) = R_.col(c + 1).head(k_);
      AI_.col(c) = AI_.col(c + 1);
    }
    for (Index c = p; c + 1 < k_; ++c) {
      Eigen::JacobiRotation<double> g;
      g.makeGivens(R_(c, c), R_(c + 1, c));
      R_.block(0, c, k_, k_ - 1 - c).applyOnTheLeft(c, c + 1, g.adjoint());
      R_(c + 1, c) = 0.0;
    }
    R_.row(k_ - 1).setZero();
    R_.col(k_ - 1).setZero();
    idx_.erase(idx_.begin() + p);
    --k_;
  }

  // (A_I^T A_I)^{-1} b
  VectorXd solve(VectorXd b) const {
    const auto R = R_.topLeftCorner(k_, k_);
    R.triangularView<Eigen::Upper>().transpose().solveInPlace(b);
    R.triangularView<Eigen::Upper>().solveInPlace(b);
    return b;
  }

  VectorXd times(const VectorXd& xI) const { return AI_.leftCols(k_) * xI; }

 private:
  const MatrixXd& A_;
  MatrixXd R_;
  MatrixXd AI_;
  std::vector<Index> idx_;
  Index k_ = 0;
};

// Follows x(lambda) = argmin 1/2 |y - Ax|^2 + lambda |x|_1 from lambda = |A^T y|_inf
// down to |y - Ax| = eps (eps > 0) or lambda = 0 (eps = 0).
std::optional<VectorXd> lasso_homotopy(const SensingMatrix& A, const Operator& op, const VectorXd& y, double eps,
                                       int max_steps, int& steps) {
  const Index n = static_cast<Index>(A.n());
  const Index m = static_cast<Index>(A.m());
  ActiveSet act(A.A, m);
  std::vector<char> active(static_cast<std::size_t>(n), 0);
  VectorXd xI(0), sI(0);
  VectorXd r = y, c, a, v;
  op.adjoint(r, c);
  Index j0;
  double lambda = c.cwiseAbs().maxCoeff(&j0);
  const double lambda0 = lambda;
  const double tiny = 1e-13 * lambda0;
  if (!act.insert(j0)) return std::nullopt;
  active[static_cast<std::size_t>(j0)] = 1;
  xI = VectorXd::Zero(1);
  sI = VectorXd::Constant(1, c(j0) > 0 ? 1.0 : -1.0);
  Index just_left = -1;

  for (int step = 0; step < max_steps; ++step) {
    steps = step + 1;
    const VectorXd d = act.solve(sI);
    v = act.times(d);
    op.adjoint(v, a);

    enum class Event { end, join, leave, residual } event = Event::end;
    double gamma = lambda;
    Index who = -1;
    double join_sign = 0.0;
    // with m active columns every join coincides with the end of the path
    for (Index j = 0; j < n && act.size() < m; ++j) {
      if (active[static_cast<std::size_t>(j)] || j == just_left) continue;
      const double aj = a(j), cj = c(j);
      if (aj < 1.0 - 1e-12) {
        const double g = (lambda - cj) / (1.0 - aj);
        if (g > tiny && g < gamma) {
          gamma = g;
          who = j;
          join_sign = 1.0;
          event = Event::join;
        }
      }
      if (aj > -1.0 + 1e-12) {
        const double g = (lambda + cj) / (1.0 + aj);
        if (g > tiny && g < gamma) {
          gamma = g;
          who = j;
          join_sign = -1.0;
          event = Event::join;
        }
      }
    }
    for (Index i = 0; i < xI.size(); ++i) {
      if (d(i) == 0.0) continue;
      const double g = -xI(i) / d(i);
      if (g > tiny && g < gamma) {
        gamma = g;
        who = i;
        event = Event::leave;
      }
    }
    if (eps > 0.0) {
      // |r - g v| = eps on the segment
      const double vv = v.squaredNorm(), rv = r.dot(v), rr = r.squaredNorm();
      const double disc = rv * rv - vv * (rr - eps * eps);
      if (vv > 0.0 && disc >= 0.0) {
        const double g = (rr - eps * eps) / (rv + std::sqrt(disc));
        if (g >= 0.0 && g <= gamma) {
          gamma = g;
          event = Event::residual;
        }
      }
    }

    xI += gamma * d;
    r -= gamma * v;
    c -= gamma * a;
    lambda -= gamma;
    just_left = -1;

    if (event == Event::end || event == Event::residual) {
      VectorXd x = VectorXd::Zero(n);
      for (Index i = 0; i < xI.size(); ++i) x(act.indices()[static_cast<std::size_t>(i)]) = xI(i);
      return x;
    }
    if (event == Event::join) {
      if (!act.insert(who)) return std::nullopt;
      active[static_cast<std::size_t>(who)] = 1;
      xI.conservativeResize(xI.size() + 1);
      xI(xI.size() - 1) = 0.0;
      sI.conservativeResize(sI.size() + 1);
      sI(sI.size() - 1) = join_sign;
    } else {
      const Index j = act.indices()[static_cast<std::size_t>(who)];
      act.erase(who);
      active[static_cast<std::size_t>(j)] = 0;
      just_left = j;
      const Index k = xI.size();
      for (Index i = who; i + 1 < k; ++i) {
        xI(i) = xI(i + 1);
        sI(i) = sI(i + 1);
      }
      xI.conservativeResize(k - 1);
      sI.conservativeResize(k - 1);
      if (k == 1) return std::nullopt;
    }
    if (step % 64 == 63) {  // resynchronise the running residual and correlations
      r = y - act.times(xI);
      op.adjoint(r, c);
    }
  }
  return std::nullopt;
}

}  // namespace

namespace {

RecoveryResult admm_bp(const SensingMatrix& A, const VectorXd& y, const SolverOptions& opts, const Operator* op) {
  const Index n = static_cast<Index>(A.n());
  const GramSolver gram(A, 0.0);
  const double ynorm = y.norm();

  // projection onto {x : Ax = y}
  VectorXd Av, tmp;
  auto project = [&](const VectorXd& v) {
    op->apply(v, Av);
    op->adjoint(gram.solve(Av - y), tmp);
    return VectorXd(v - tmp);
  };

  VectorXd x = project(VectorXd::Zero(n));
  op->apply(x, Av);
  require((Av - y).norm() <= std::max(1e-8, 100 * opts.feasibility_tol) * ynorm, ErrorCode::infeasible,
          "basis pursuit is infeasible: y is not in the range of A");

  const double scale = x.cwiseAbs().maxCoeff();
  double rho = opts.rho > 0.0 ? opts.rho : 1.0 / scale;
  VectorXd z = x;
  VectorXd u = VectorXd::Zero(n);
  VectorXd z_old(n);
  double best_gap = std::numeric_limits<double>::infinity();

  int k = 0;
  for (k = 1; k <= opts.max_iterations; ++k) {
    x = project(z - u);
    z_old = z;
    z = soft_threshold(x + u, 1.0 / rho);
    u += x - z;

    const double r_norm = (x - z).norm();
    const double s_norm = rho * (z - z_old).norm();
    if (k % 10 == 0) {
      if (r_norm > 10.0 * s_norm) {
        rho *= 2.0;
        u /= 2.0;
      } else if (s_norm > 10.0 * r_norm) {
        rho /= 2.0;
        u *= 2.0;
      }
    }

    if (k % opts.polish_interval == 0 || k == opts.max_iterations) {
      // dual point: rho u lies in the row space at a fixed point; project it there
      VectorXd g = rho * u;
      VectorXd Ag;
      op->apply(g, Ag);
      VectorXd lambda = gram.solve(Ag);
      if (opts.polish) {
        if (auto c = polish_bp(A, y, z, lambda, opts)) {
          return finish(A, std::move(c->x), y, k, true, true, c->gap);
        }
      }
      VectorXd At_lambda;
      op->adjoint(lambda, At_lambda);
      const double gmax = At_lambda.cwiseAbs().maxCoeff();
      const double lower = y.dot(lambda) / std::max(1.0, gmax);
      const double l1 = x.lpNorm<1>();
      best_gap = l1 - lower;
      op->apply(x, Av);
      const bool feasible = (Av - y).norm() <= opts.feasibility_tol * ynorm;
      if (feasible && relative_gap(best_gap, l1) <= opts.optimality_tol) {
        return finish(A, std::move(x), y, k, true, false, best_gap);
      }
    }
  }
  return finish(A, std::move(x), y, opts.max_iterations, false, false, best_gap);
}

RecoveryResult admm_bpdn(const SensingMatrix& A, const VectorXd& y, double epsilon, const SolverOptions& opts,
                         const Operator* op) {
  const Index n = static_cast<Index>(A.n());
  const Index m = static_cast<Index>(A.m());
  const GramSolver gram(A, 1.0);  // (I + A A^T) for the Woodbury x-update

  VectorXd Aty;
  op->adjoint(y, Aty);
  const double scale = Aty.cwiseAbs().maxCoeff();
  double rho = opts.rho > 0.0 ? opts.rho : 10.0 / scale;

  VectorXd x = VectorXd::Zero(n), z = VectorXd::Zero(n), u = VectorXd::Zero(n);
  VectorXd w = y, v = VectorXd::Zero(m);
  VectorXd Ax(m), q(n), tmp(n), Aq(m), z_old(n), w_old(m), dw(n);
  auto project_ball = [&](const VectorXd& p) {
    const VectorXd d = p - y;
    const double dn = d.norm();
    return dn <= epsilon ? p : VectorXd(y + d * (epsilon / dn));
  };

  double best_gap = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= opts.max_iterations; ++k) {
    // x = (I + A^T A)^{-1} q with q = (z - u) + A^T (w - v)
    op->adjoint(w - v, tmp);
    q = z - u + tmp;
    op->apply(q, Aq);
    op->adjoint(gram.solve(Aq), tmp);
    x = q - tmp;
    op->apply(x, Ax);

    z_old = z;
    w_old = w;
    z = soft_threshold(x + u, 1.0 / rho);
    w = project_ball(Ax + v);
    u += x - z;
    v += Ax - w;

    if (k % 10 == 0) {
      const double r_norm = std::sqrt((x - z).squaredNorm() + (Ax - w).squaredNorm());
      op->adjoint(w - w_old, dw);
      const double s_norm = rho * ((z - z_old) + dw).norm();
      if (r_norm > 10.0 * s_norm) {
        rho *= 2.0;
        u /= 2.0;
        v /= 2.0;
      } else if (s_norm > 10.0 * r_norm) {
        rho /= 2.0;
        u *= 2.0;
        v *= 2.0;
      }
    }

    if (k % opts.polish_interval == 0 || k == opts.max_iterations) {
      if (opts.polish) {
        if (auto c = polish_bpdn(A, y, epsilon, z, opts)) {
          return finish(A, std::move(c->x), y, k, true, true, c->gap);
        }
      }
      // certificate for the sparse iterate z from mu = -rho v
      VectorXd mu = -rho * v;
      VectorXd At_mu;
      op->adjoint(mu, At_mu);
      const double gmax = At_mu.cwiseAbs().maxCoeff();
      mu /= std::max(1.0, gmax);
      const double lower = y.dot(mu) - epsilon * mu.norm();
      VectorXd Az;
      op->apply(z, Az);
      const double l1 = z.lpNorm<1>();
      best_gap = l1 - lower;
      const bool feasible = (y - Az).norm() <= epsilon * (1.0 + 1e-6);
      if (feasible && relative_gap(best_gap, l1) <= opts.optimality_tol) {
        return finish(A, std::move(z), y, k, true, false, best_gap);
      }
    }
  }
  // z is sparse but may sit slightly outside the ball; x carries the same issue.
  VectorXd Az;
  op->apply(z, Az);
  return finish(A, (y - Az).norm() <= (y - Ax).norm() ? z : x, y, opts.max_iterations, false, false, best_gap);
}

int homotopy_steps(const SensingMatrix& A, const SolverOptions& opts) {
  return opts.max_homotopy_steps > 0 ? opts.max_homotopy_steps : 10 * static_cast<int>(A.m()) + 100;
}

}  // namespace

RecoveryResult basis_pursuit(const SensingMatrix& A, const VectorXd& y, const SolverOptions& opts) {
  validate_inputs(A, y);
  const Index n = static_cast<Index>(A.n());
  if (y.norm() == 0.0) return finish(A, VectorXd::Zero(n), y, 0, true, true, 0.0);
  const auto op = make_operator(A, opts);
  if (opts.method == SolverMethod::homotopy) {
    int steps = 0;
    if (auto x = lasso_homotopy(A, *op, y, 0.0, homotopy_steps(A, opts), steps)) {
      if (auto c = polish_bp(A, y, *x, VectorXd::Zero(y.size()), opts)) {
        return finish(A, std::move(c->x), y, steps, true, true, c->gap);
      }
    }
  }
  return admm_bp(A, y, opts, op.get());
}

RecoveryResult bpdn(const SensingMatrix& A, const VectorXd& y, double epsilon, const SolverOptions& opts) {
  validate_inputs(A, y);
  require(epsilon > 0.0 && std::isfinite(epsilon), ErrorCode::domain, "bpdn needs epsilon > 0");
  const Index n = static_cast<Index>(A.n());
  if (epsilon >= y.norm()) return finish(A, VectorXd::Zero(n), y, 0, true, true, 0.0);
  const auto op = make_operator(A, opts);
  if (opts.method == SolverMethod::homotopy) {
    int steps = 0;
    if (auto x = lasso_homotopy(A, *op, y, epsilon, homotopy_steps(A, opts), steps)) {
      if (auto c = polish_bpdn(A, y, epsilon, *x, opts)) {
        return finish(A, std::move(c->x), y, steps, true, true, c->gap);
      }
    }
  }
  return admm_bpdn(A, y, epsilon, opts, op.get());
}

RecoveryResult solve(const RecoveryProblem& problem, const SolverOptions& opts) {
  require(problem.epsilon >= 0.0, ErrorCode::domain, "epsilon must be >= 0");
  if (problem.epsilon == 0.0) return basis_pursuit(problem.A, problem.y, opts);
  return bpdn(problem.A, problem.y, problem.epsilon, opts);
}

// ---------------------------------------------------------------------------
// Exact LP oracle

LpOracleResult lp_oracle(const MatrixXd& A, const VectorXd& y) {
  const Index m = A.rows(), n = A.cols();
  require(m >= 1 && n >= 1 && m <= kLpOracleMaxDim && n <= kLpOracleMaxDim, ErrorCode::resource,
          "lp_oracle is limited to m, n <= 24");
  require(y.size() == m, ErrorCode::domain, "measurement length must equal m");

  // Columns: x+ (n), x- (n), artificials (m), rhs.
  const Index nv = 2 * n + m;
  const Index rhs = nv;
  MatrixXd tab = MatrixXd::Zero(m + 1, nv + 1);
  std::vector<Index> basis(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const double sgn = y(i) < 0 ? -1.0 : 1.0;
    tab.row(i).segment(0, n) = sgn * A.row(i);
    tab.row(i).segment(n, n) = -sgn * A.row(i);
    tab(i, 2 * n + i) = 1.0;
    tab(i, rhs) = sgn * y(i);
    basis[static_cast<std::size_t>(i)] = 2 * n + i;
  }
  const double scale = std::max({1.0, A.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff()});
  const double piv_tol = 1e-11 * scale;
  const double cost_tol = 1e-11 * scale;
  constexpr int kMaxPivots = 20000;
  int pivots = 0;
  std::vector<char> allowed(static_cast<std::size_t>(nv), 1);
  Index rows = m;

  auto pivot = [&](Index r, Index c) {
    tab.row(r) /= tab(r, c);
    for (Index i = 0; i <= m; ++i) {
      if (i != r && tab(i, c) != 0.0) tab.row(i) -= tab(i, c) * tab.row(r);
    }
    basis[static_cast<std::size_t>(r)] = c;
    ++pivots;
  };

  // Objective row holds reduced costs; its rhs entry is -objective.
  auto set_objective = [&](const VectorXd& cost) {
    tab.row(m).setZero();
    tab.row(m).segment(0, nv) = cost.transpose();
    for (Index i = 0; i < rows; ++i) {
      const double cb = cost(basis[static_cast<std::size_t>(i)]);
      if (cb != 0.0) tab.row(m) -= cb * tab.row(i);
    }
  };

  auto run_simplex = [&] {
    for (;;) {
      require(pivots < kMaxPivots, ErrorCode::oracle_failure, "simplex pivot limit exceeded");
      Index enter = -1;
      for (Index j = 0; j < nv; ++j) {  // Bland: lowest index with negative reduced cost
        if (allowed[static_cast<std::size_t>(j)] && tab(m, j) < -cost_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return;
      Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Index i = 0; i < rows; ++i) {
        if (tab(i, enter) > piv_tol) {
          const double ratio = tab(i, rhs) / tab(i, enter);
          if (ratio < best - 1e-14 * scale ||
              (std::abs(ratio - best) <= 1e-14 * scale && leave >= 0 &&
               basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
            best = ratio;
            leave = i;
          }
        }
      }
      require(leave >= 0, ErrorCode::oracle_failure, "LP unbounded (cannot happen for an l1 objective)");
      pivot(leave, enter);
    }
  };

  // Phase I
  VectorXd cost1 = VectorXd::Zero(nv);
  cost1.tail(m).setOnes();
  set_objective(cost1);
  run_simplex();
  require(-tab(m, rhs) <= 1e-9 * std::max(1.0, y.cwiseAbs().sum()), ErrorCode::infeasible,
          "lp_oracle: Ax = y has no solution");

  // Drive artificials out of the basis; drop redundant rows.
  for (Index i = 0; i < rows;) {
    if (basis[static_cast<std::size_t>(i)] >= 2 * n) {
      Index c = -1;
      for (Index j = 0; j < 2 * n; ++j) {
        if (std::abs(tab(i, j)) > piv_tol) {
          c = j;
          break;
        }
      }
      if (c >= 0) {
        pivot(i, c);
      } else {
        // redundant constraint: move it below the active rows
        tab.row(i).swap(tab.row(rows - 1));
        std::swap(basis[static_cast<std::size_t>(i)], basis[static_cast<std::size_t>(rows - 1)]);
        tab.row(rows - 1).setZero();
        --rows;
        continue;
      }
    }
    ++i;
  }
  for (Index j = 2 * n; j < nv; ++j) allowed[static_cast<std::size_t>(j)] = 0;

  // Phase II
  VectorXd cost2 = VectorXd::Zero(nv);
  cost2.head(2 * n).setOnes();
  set_objective(cost2);
  run_simplex();

  LpOracleResult res;
  res.x = VectorXd::Zero(n);
  for (Index i = 0; i < rows; ++i) {
    const Index b = basis[static_cast<std::size_t>(i)];
    if (b < n) res.x(b) += tab(i, rhs);
    else if (b < 2 * n) res.x(b - n) -= tab(i, rhs);
  }
  res.objective = res.x.lpNorm<1>();
  res.pivots = pivots;
  return res;
}

VectorXd compress(const VectorXd& x, std::size_t S) {
  const auto n = static_cast<std::size_t>(x.size());
  require(S <= n, ErrorCode::domain, "compress: S exceeds the vector length");
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return std::abs(x(a)) > std::abs(x(b)); });
  VectorXd out = VectorXd::Zero(x.size());
  for (std::size_t k = 0; k < S; ++k) out(order[k]) = x(order[k]);
  return out;
}

RecoveryProblem synthesis_problem(const OrthonormalBasis& phi, const OrthonormalBasis& psi,
                                  const std::vector<std::size_t>& M, const VectorXd& measured) {
  require(static_cast<std::size_t>(measured.size()) == M.size(), ErrorCode::domain,
          "one measured value per selected index is required");
  return RecoveryProblem{subsample_rows(phi, psi, M), measured, 0.0};
}

double recovery_error_bound(const VectorXd& x, std::size_t S, double C3, double epsilon) {
  require(S >= 1, ErrorCode::domain, "S must be >= 1");
  const double tail = (x - compress(x, S)).lpNorm<1>();
  return C3 * tail / std::sqrt(static_cast<double>(S)) + epsilon;
}

}  // namespace cmag
