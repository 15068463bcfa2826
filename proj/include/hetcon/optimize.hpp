#pragma once

// Small unconstrained minimizers: L-BFGS with Armijo backtracking and a
// sparse Newton method with a Levenberg shift.

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <vector>

#include "hetcon/errors.hpp"

namespace hetcon {

enum class SolverStatus { converged, stalled, iteration_cap };

inline const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::stalled: return "stalled";
    case SolverStatus::iteration_cap: return "iteration_cap";
  }
  return "unknown";
}

struct LbfgsOptions {
  int max_iter = 2000;
  int memory = 10;
  double grad_tol = 1e-9;   ///< on the infinity norm of the gradient
  double rel_tol = 1e-14;   ///< relative decrease counted as no progress
  int stall_window = 5;     ///< consecutive no-progress steps before stalling
  double armijo = 1e-4;
  int max_backtracks = 50;
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  std::vector<double> trace;
  SolverStatus status = SolverStatus::iteration_cap;
  int iterations = 0;
  double grad_norm = 0.0;
};

/// `fg(x, grad)` returns f(x) and writes ∇f(x). Every accepted step satisfies
/// the Armijo condition, so the trace is nonincreasing.
template <class FG>
OptimizeResult minimize_lbfgs(FG&& fg, Eigen::VectorXd x0, const LbfgsOptions& opt = {}) {
  OptimizeResult res;
  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = std::move(x0), g(n), gn(n), xn(n);
  double f = fg(x, g);
  if (!std::isfinite(f)) throw InvalidArgument("objective is not finite at the initial point");
  res.trace.push_back(f);
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  int no_progress = 0;
  res.status = SolverStatus::iteration_cap;
  if (n == 0) {
    res.status = SolverStatus::converged;
    res.x = x;
    res.value = f;
    return res;
  }
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
      res.status = SolverStatus::converged;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    std::vector<double> alpha(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      alpha[k] = rho[k] * S[k].dot(d);
      d -= alpha[k] * Y[k];
    }
    if (!S.empty()) d *= S.back().dot(Y.back()) / Y.back().squaredNorm();
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double beta = rho[k] * Y[k].dot(d);
      d += (alpha[k] - beta) * S[k];
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      S.clear(), Y.clear(), rho.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    double step = S.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    double fn = f;
    bool accepted = false;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      xn = x + step * d;
      fn = fg(xn, gn);
      if (std::isfinite(fn) && fn <= f + opt.armijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!S.empty()) {
        S.clear(), Y.clear(), rho.clear();
        continue;
      }
      res.status = SolverStatus::stalled;
      break;
    }
    const Eigen::VectorXd s = xn - x, y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      S.push_back(s), Y.push_back(y), rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.memory) S.pop_front(), Y.pop_front(), rho.pop_front();
    }
    const double decrease = f - fn;
    x.swap(xn);
    g.swap(gn);
    f = fn;
    res.trace.push_back(f);
    if (decrease <= opt.rel_tol * std::max(std::abs(f), 1e-300)) {
      if (++no_progress >= opt.stall_window) {
        res.status = SolverStatus::stalled;
        res.iterations = it + 1;
        break;
      }
    } else {
      no_progress = 0;
    }
    res.iterations = it + 1;
  }
  if (res.status == SolverStatus::iteration_cap && g.lpNorm<Eigen::Infinity>() < opt.grad_tol)
    res.status = SolverStatus::converged;
  res.x = std::move(x);
  res.value = f;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  return res;
}

struct NewtonOptions {
  int max_iter = 100;
  double grad_tol = 1e-10;
};

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Damped Newton for smooth functions with sparse Hessians. `fgh(x, g, H)`
/// returns f and fills the gradient and Hessian. Indefinite or singular
/// Hessians get a growing diagonal shift.
template <class FGH>
OptimizeResult minimize_newton(FGH&& fgh, Eigen::VectorXd x, const NewtonOptions& opt = {}) {
  OptimizeResult res;
  const Eigen::Index n = x.size();
  Eigen::VectorXd g(n), gn(n);
  SparseMatrix H(n, n), Hn(n, n);
  double f = fgh(x, g, H);
  if (!std::isfinite(f)) throw InvalidArgument("objective is not finite at the initial point");
  res.trace.push_back(f);
  double shift = 0.0;
  Eigen::SimplicialLDLT<SparseMatrix> solver;
  SparseMatrix I(n, n);
  I.setIdentity();
  for (int it = 0; it < opt.max_iter; ++it) {
    res.iterations = it;
    if (g.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
      res.status = SolverStatus::converged;
      break;
    }
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      SparseMatrix A = H + shift * I;
      solver.compute(A);
      bool ok = solver.info() == Eigen::Success && (solver.vectorD().array() > 0.0).all();
      Eigen::VectorXd d;
      if (ok) {
        d = solver.solve(-g);
        ok = d.allFinite() && g.dot(d) < 0.0;
      }
      if (!ok) {
        shift = std::max(2.0 * shift, 1e-8 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()));
        continue;
      }
      double step = 1.0;
      for (int bt = 0; bt < 30; ++bt) {
        const Eigen::VectorXd xn = x + step * d;
        const double fn = fgh(xn, gn, Hn);
        if (std::isfinite(fn) && fn <= f + 1e-4 * step * g.dot(d)) {
          x = xn;
          f = fn;
          g.swap(gn);
          H.swap(Hn);
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (accepted) {
        shift = step == 1.0 ? shift * 0.1 : shift;
        if (shift < 1e-14) shift = 0.0;
      } else {
        shift = std::max(4.0 * shift, 1e-8 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()));
      }
    }
    if (!accepted) {
      res.status = SolverStatus::stalled;
      break;
    }
    res.trace.push_back(f);
    res.iterations = it + 1;
  }
  if (g.lpNorm<Eigen::Infinity>() < opt.grad_tol) res.status = SolverStatus::converged;
  res.x = std::move(x);
  res.value = f;
  res.grad_norm = g.lpNorm<Eigen::Infinity>();
  return res;
}

}  // namespace hetcon
