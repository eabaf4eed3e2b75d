#pragma once

// Primal-dual interior-point method (Mehrotra predictor-corrector) for the
// sparse convex QP in qp.hpp. Each iteration factors the regularized
// quasi-definite system
//
//   [ P + Gᵀ(Λ/W)G + ρI   Aᵀ  ] [dz]   [r1]
//   [ A                  -δI ] [dy] = [r2]
//
// with a sparse LDLᵀ whose symbolic analysis is computed once per solve, and
// removes the regularization error by iterative refinement.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "aggsim/optimize/qp.hpp"

namespace aggsim {

enum class SolveStatus { optimal, max_iterations, infeasible };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "?";
}

struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;

  double max() const { return std::max({stationarity, primal, complementarity}); }
};

struct Solution {
  Eigen::VectorXd z;
  Eigen::VectorXd y;       // equality multipliers
  Eigen::VectorXd lambda;  // inequality multipliers
  double objective = 0.0;
  KktResiduals residuals;
  SolveStatus status = SolveStatus::max_iterations;
  int iterations = 0;
};

struct SolverOptions {
  double tolerance = 1e-6;
  int max_iterations = 10000;
  std::ostream* trace = nullptr;  // one line per iteration when set
};

/// KKT residuals of a primal-dual point, infinity norms.
inline KktResiduals kkt_residuals(const QuadraticProgram& qp, const Eigen::VectorXd& z, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& lambda) {
  KktResiduals r;
  Eigen::VectorXd grad = qp.P * z + qp.q;
  if (qp.A.rows() > 0) grad += qp.A.transpose() * y;
  if (qp.G.rows() > 0) grad += qp.G.transpose() * lambda;
  r.stationarity = grad.size() ? grad.cwiseAbs().maxCoeff() : 0.0;
  if (qp.A.rows() > 0) r.primal = (qp.A * z - qp.b).cwiseAbs().maxCoeff();
  if (qp.G.rows() > 0) {
    const Eigen::VectorXd slack = qp.h - qp.G * z;
    r.primal = std::max(r.primal, (-slack).cwiseMax(0.0).maxCoeff());
    r.complementarity = (lambda.array() * slack.array().cwiseMax(0.0)).abs().maxCoeff();
    r.complementarity = std::max(r.complementarity, (-lambda).cwiseMax(0.0).maxCoeff());
  }
  return r;
}

namespace detail {

/// Lower-triangular KKT matrix with a fixed pattern and in-place value updates.
class KktSystem {
 public:
  explicit KktSystem(const QuadraticProgram& qp) : n_(qp.variable_count()), me_(qp.A.rows()) {
    const Eigen::Index dim = n_ + me_;
    Triplets pattern;
    for (int k = 0; k < qp.P.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.P, k); it; ++it) {
        if (it.row() >= it.col()) pattern.emplace_back(it.row(), it.col(), 0.0);
      }
    }
    for (Eigen::Index i = 0; i < dim; ++i) pattern.emplace_back(i, i, 0.0);
    for (int k = 0; k < qp.A.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.A, k); it; ++it) pattern.emplace_back(n_ + it.row(), it.col(), 0.0);
    }
    const Eigen::SparseMatrix<double, Eigen::RowMajor> g_rows = qp.G;
    std::vector<std::pair<int, double>> row;
    for (int r = 0; r < g_rows.outerSize(); ++r) {
      row.clear();
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g_rows, r); it; ++it) {
        row.emplace_back(static_cast<int>(it.col()), it.value());
      }
      for (const auto& [ca, va] : row) {
        for (const auto& [cb, vb] : row) {
          if (ca >= cb) {
            pattern.emplace_back(ca, cb, 0.0);
            g_terms_.push_back({0, r, va * vb});
          }
        }
      }
    }
    kkt_.resize(dim, dim);
    kkt_.setFromTriplets(pattern.begin(), pattern.end());
    kkt_.makeCompressed();

    // Resolve value slots.
    std::size_t gi = 0;
    for (int r = 0; r < g_rows.outerSize(); ++r) {
      row.clear();
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(g_rows, r); it; ++it) {
        row.emplace_back(static_cast<int>(it.col()), it.value());
      }
      for (const auto& [ca, va] : row) {
        for (const auto& [cb, vb] : row) {
          if (ca >= cb) g_terms_[gi++].slot = slot(ca, cb);
        }
      }
    }
    for (int k = 0; k < qp.P.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.P, k); it; ++it) {
        if (it.row() >= it.col()) static_terms_.push_back({slot(it.row(), it.col()), it.value()});
      }
    }
    for (int k = 0; k < qp.A.outerSize(); ++k) {
      for (SparseMatrix::InnerIterator it(qp.A, k); it; ++it) {
        static_terms_.push_back({slot(n_ + it.row(), it.col()), it.value()});
      }
    }
    diag_slots_.resize(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) diag_slots_[static_cast<std::size_t>(i)] = slot(i, i);
    ldlt_.analyzePattern(kkt_);
  }

  /// Refactor for inequality weights d = λ/w and regularization (rho, delta).
  bool factor(const Eigen::VectorXd& d, double rho, double delta) {
    rho_ = rho;
    delta_ = delta;
    double* v = kkt_.valuePtr();
    std::fill(v, v + kkt_.nonZeros(), 0.0);
    for (const auto& t : static_terms_) v[t.slot] += t.value;
    for (const auto& t : g_terms_) v[t.slot] += d[t.row] * t.coef;
    for (Eigen::Index i = 0; i < n_ + me_; ++i) v[diag_slots_[static_cast<std::size_t>(i)]] += i < n_ ? rho : -delta;
    ldlt_.factorize(kkt_);
    return ldlt_.info() == Eigen::Success;
  }

  /// Solves the unregularized system by refinement on the regularized factor.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, int refinement_steps = 3) const {
    Eigen::VectorXd x = ldlt_.solve(rhs);
    for (int k = 0; k < refinement_steps; ++k) {
      Eigen::VectorXd kx = kkt_.selfadjointView<Eigen::Lower>() * x;
      kx.head(n_) -= rho_ * x.head(n_);
      kx.tail(me_) += delta_ * x.tail(me_);
      const Eigen::VectorXd r = rhs - kx;
      if (r.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + rhs.cwiseAbs().maxCoeff())) break;
      x += ldlt_.solve(r);
    }
    return x;
  }

 private:
  struct StaticTerm {
    Eigen::Index slot;
    double value;
  };
  struct GTerm {
    Eigen::Index slot;
    int row;
    double coef;
  };

  Eigen::Index slot(Eigen::Index r, Eigen::Index c) const {
    const int* inner = kkt_.innerIndexPtr();
    const int begin = kkt_.outerIndexPtr()[c];
    const int end = kkt_.outerIndexPtr()[c + 1];
    const int* it = std::lower_bound(inner + begin, inner + end, static_cast<int>(r));
    return it - inner;
  }

  Eigen::Index n_;
  Eigen::Index me_;
  double rho_ = 0.0;
  double delta_ = 0.0;
  SparseMatrix kkt_;
  std::vector<StaticTerm> static_terms_;
  std::vector<GTerm> g_terms_;
  std::vector<Eigen::Index> diag_slots_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

inline double max_step(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
  double step = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (dv[i] < 0.0) step = std::min(step, -v[i] / dv[i]);
  }
  return step;
}

}  // namespace detail

inline Solution solve(const QuadraticProgram& qp, const SolverOptions& options = {}) {
  qp.validate();
  const Eigen::Index n = qp.variable_count();
  const Eigen::Index me = qp.A.rows();
  const Eigen::Index mi = qp.G.rows();
  constexpr double kRho = 1e-9;
  constexpr double kDelta = 1e-9;

  detail::KktSystem kkt(qp);
  Solution sol;

  // Start: minimize ½zᵀPz + qᵀz + ½‖Gz - h‖² subject to Az = b.
  Eigen::VectorXd z;
  Eigen::VectorXd y;
  {
    if (!kkt.factor(Eigen::VectorXd::Ones(mi), kRho, kDelta)) {
      throw SolverFailure("interior point: initial factorization failed");
    }
    Eigen::VectorXd rhs(n + me);
    rhs.head(n) = -qp.q;
    if (mi > 0) rhs.head(n) += qp.G.transpose() * qp.h;
    rhs.tail(me) = qp.b;
    const Eigen::VectorXd x = kkt.solve(rhs);
    z = x.head(n);
    y = x.tail(me);
  }
  Eigen::VectorXd w = mi > 0 ? Eigen::VectorXd((qp.h - qp.G * z).cwiseMax(1.0)) : Eigen::VectorXd();
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(mi);

  const double tol = options.tolerance;
  const double inner_tol = 0.1 * tol;
  Eigen::VectorXd r_d(n);
  Eigen::VectorXd r_p(me);
  Eigen::VectorXd r_g(mi);
  Eigen::VectorXd rhs(n + me);

  auto newton = [&](const Eigen::VectorXd& r_c, Eigen::VectorXd& dz, Eigen::VectorXd& dy, Eigen::VectorXd& dl,
                    Eigen::VectorXd& dw) {
    // dλ = (-r_c + Λ r_g)/w + D G dz,  dw = -r_g - G dz
    const Eigen::VectorXd t = ((-r_c).array() + lambda.array() * r_g.array()) / w.array();
    rhs.head(n) = -r_d;
    if (mi > 0) rhs.head(n) -= qp.G.transpose() * t;
    rhs.tail(me) = -r_p;
    const Eigen::VectorXd x = kkt.solve(rhs);
    dz = x.head(n);
    dy = x.tail(me);
    if (mi > 0) {
      const Eigen::VectorXd gdz = qp.G * dz;
      dl = t.array() + (lambda.array() / w.array()) * gdz.array();
      dw = -r_g - gdz;
    }
  };

  double best_primal = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    sol.iterations = iter;
    r_d = qp.P * z + qp.q;
    if (me > 0) r_d += qp.A.transpose() * y;
    if (mi > 0) r_d += qp.G.transpose() * lambda;
    if (me > 0) r_p = qp.A * z - qp.b;
    if (mi > 0) r_g = qp.G * z + w - qp.h;

    const double mu = mi > 0 ? lambda.dot(w) / static_cast<double>(mi) : 0.0;
    const double res_d = n > 0 ? r_d.cwiseAbs().maxCoeff() : 0.0;
    const double res_p = std::max(me > 0 ? r_p.cwiseAbs().maxCoeff() : 0.0, mi > 0 ? r_g.cwiseAbs().maxCoeff() : 0.0);
    const double comp = mi > 0 ? (lambda.array() * w.array()).maxCoeff() : 0.0;
    const double obj = qp.objective(z);
    const double gap = mi > 0 ? lambda.dot(w) : 0.0;

    if (options.trace) {
      *options.trace << "it " << iter << " obj " << obj << " res_d " << res_d << " res_p " << res_p << " comp " << comp
                     << " gap " << gap;
      if (mi > 0) *options.trace << " min_w " << w.minCoeff() << " max_lambda " << lambda.maxCoeff();
      *options.trace << '\n';
    }
    if (res_d <= inner_tol && res_p <= inner_tol && comp <= inner_tol && gap <= tol * (1.0 + std::abs(obj))) {
      sol.status = SolveStatus::optimal;
      break;
    }
    // Divergent multipliers with a primal residual that no longer improves: infeasible.
    if (res_p < 0.5 * best_primal) {
      best_primal = res_p;
      stalled = 0;
    } else {
      ++stalled;
    }
    if (mi > 0 && res_p > tol && ((lambda.maxCoeff() > 1e12) || (stalled > 50 && mu < 1e-10))) {
      sol.status = SolveStatus::infeasible;
      break;
    }

    const Eigen::VectorXd d = mi > 0 ? Eigen::VectorXd(lambda.array() / w.array()) : Eigen::VectorXd();
    // Near the boundary λ/w spans many decades; retry with stronger regularization.
    bool factored = false;
    for (double scale = 1.0; scale <= 1e4 && !factored; scale *= 100.0) {
      factored = kkt.factor(d, kRho * scale, kDelta * scale);
    }
    if (!factored) {
      const bool close = res_d <= tol && res_p <= tol && comp <= tol && gap <= tol * (1.0 + std::abs(obj));
      sol.status = close ? SolveStatus::optimal : SolveStatus::max_iterations;
      break;
    }

    Eigen::VectorXd dz, dy, dl, dw;
    if (mi == 0) {
      newton(Eigen::VectorXd(), dz, dy, dl, dw);
      z += dz;
      y += dy;
      continue;
    }

    // Predictor.
    const Eigen::VectorXd lw = lambda.array() * w.array();
    newton(lw, dz, dy, dl, dw);
    const double a_aff = std::min(detail::max_step(lambda, dl), detail::max_step(w, dw));
    const double mu_aff = (lambda + a_aff * dl).dot(w + a_aff * dw) / static_cast<double>(mi);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    // Corrector.
    const Eigen::VectorXd r_c = lw.array() + dl.array() * dw.array() - sigma * mu;
    newton(r_c, dz, dy, dl, dw);
    const double a_max = std::min(detail::max_step(lambda, dl), detail::max_step(w, dw));
    const double step = std::min(1.0, 0.99 * a_max);

    z += step * dz;
    y += step * dy;
    lambda += step * dl;
    w += step * dw;
    lambda = lambda.cwiseMax(1e-300);
    w = w.cwiseMax(1e-300);
    sol.iterations = iter + 1;
  }

  sol.z = std::move(z);
  sol.y = std::move(y);
  sol.lambda = std::move(lambda);
  sol.objective = qp.objective(sol.z);
  sol.residuals = kkt_residuals(qp, sol.z, sol.y, sol.lambda);
  if (sol.status == SolveStatus::optimal && sol.residuals.max() > tol) sol.status = SolveStatus::max_iterations;
  return sol;
}

}  // namespace aggsim
