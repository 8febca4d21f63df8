#pragma once

// Block Davidson with Olsen-corrected preconditioning for the lowest
// eigenpairs of a Hermitian operator. With the identity preconditioner the
// search space is the block Krylov space; a good approximate inverse of
// (H - theta) shortens the iteration.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "qedft/errors.hpp"
#include "qedft/lanczos.hpp"

namespace qedft {

struct DavidsonOptions {
  double tol = 1e-10;
  int max_matvecs = 4000;
  int max_basis = 24;
  int block_size = 2;
  int wanted = 2;
  std::uint64_t seed = 20170314;
  /// Approximate lowest eigenvalues (ascending). While a Ritz pair is far from
  /// converged its correction is shifted toward these instead of theta, so a
  /// random start block does not lock onto high-lying states.
  std::vector<double> targets;
  double target_switch = 1e-3;
};

/// apply(x, y): y = H x.  precondition(theta, r, t): t ~ (H - theta)^{-1} r.
template <class Apply, class Precondition>
EigenResult lowest_eigenpairs_davidson(Apply&& apply, Precondition&& precondition,
                                       Eigen::Index dim, const DavidsonOptions& opts) {
  if (dim <= 0) throw Error("eigensolver needs a non-empty space");
  if (opts.block_size < 1) throw Error("block size must be positive");
  const int wanted = static_cast<int>(std::min<Eigen::Index>(opts.wanted, dim));
  const int p = static_cast<int>(std::min<Eigen::Index>(std::max(opts.block_size, wanted), dim));
  const int mmax = static_cast<int>(std::min<Eigen::Index>(std::max(opts.max_basis, 3 * p), dim));
  const int keep = std::max(p, mmax / 2);

  std::mt19937_64 rng(opts.seed);
  Eigen::MatrixXcd v(dim, mmax), hv(dim, mmax);
  int s = 0;
  EigenResult out;
  double best = INFINITY;

  auto orthogonalize = [&](Eigen::VectorXcd& x) {
    const double before = x.norm();
    double norm = before;
    for (int pass = 0; pass < 3 && s > 0; ++pass) {
      Eigen::VectorXcd c = v.leftCols(s).adjoint() * x;
      x.noalias() -= v.leftCols(s) * c;
      const double after = x.norm();
      const bool settled = after > 0.7 * norm;
      norm = after;
      if (settled) break;
    }
    return norm > 1e-12 * std::max(before, 1e-300);
  };
  Eigen::VectorXcd w(dim);
  auto push = [&](Eigen::VectorXcd x) {
    x.normalize();
    v.col(s) = x;
    apply(x, w);
    ++out.matvecs;
    hv.col(s) = w;
    ++s;
  };
  auto push_random = [&]() {
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::VectorXcd x = detail::random_unit(dim, rng);
      if (orthogonalize(x)) return push(std::move(x));
    }
    throw ConvergenceError("could not extend search space", best);
  };

  for (int i = 0; i < p; ++i) push_random();

  while (true) {
    Eigen::MatrixXcd g = v.leftCols(s).adjoint() * hv.leftCols(s);
    g = 0.5 * (g + g.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> rr(g);
    const auto& theta = rr.eigenvalues();
    const auto& y = rr.eigenvectors();
    const bool full = s >= dim;

    const int nr = std::min(p, s);
    Eigen::MatrixXcd x = v.leftCols(s) * y.leftCols(nr);
    Eigen::MatrixXcd r = hv.leftCols(s) * y.leftCols(nr);
    std::vector<double> res(nr);
    bool ok = s >= wanted;
    for (int i = 0; i < nr; ++i) {
      r.col(i) -= theta[i] * x.col(i);
      res[i] = full ? 0.0 : r.col(i).norm();
      if (i < wanted && res[i] > opts.tol) ok = false;
    }
    best = std::min(best, res[0]);

    if (ok || out.matvecs >= opts.max_matvecs) {
      out.converged = ok;
      for (int i = 0; i < wanted; ++i) {
        out.values.push_back(theta[i]);
        out.vectors.push_back(x.col(i).normalized());
        out.residuals.push_back(res[i]);
      }
      return out;
    }
    if (full) throw ConvergenceError("search space exhausted", best);

    if (s + nr > mmax) {
      Eigen::MatrixXcd vk = v.leftCols(s) * y.leftCols(keep);
      Eigen::MatrixXcd hk = hv.leftCols(s) * y.leftCols(keep);
      v.leftCols(keep) = vk;
      hv.leftCols(keep) = hk;
      s = keep;
      ++out.restarts;
    }

    const double scale = std::max(1.0, theta.head(nr).cwiseAbs().maxCoeff());
    const int before = s;
    for (int i = 0; i < nr; ++i) {
      if (s >= dim) break;
      if (res[i] <= 0.1 * opts.tol) continue;
      double shift = theta[i];
      if (i < static_cast<int>(opts.targets.size()) && res[i] > opts.target_switch * scale)
        shift = std::min(shift, opts.targets[i]);
      // Olsen: t = P r - eps P x with eps chosen so that x^H t = 0.
      Eigen::VectorXcd pr(dim), px(dim);
      precondition(shift, Eigen::VectorXcd(r.col(i)), pr);
      precondition(shift, Eigen::VectorXcd(x.col(i)), px);
      const std::complex<double> den = x.col(i).dot(px);
      Eigen::VectorXcd t = pr;
      if (std::abs(den) > 1e-14 * scale) t -= (x.col(i).dot(pr) / den) * px;
      if (!t.allFinite() || !orthogonalize(t)) {
        // Fall back to the plain residual direction.
        t = r.col(i);
        if (!orthogonalize(t)) continue;
      }
      push(std::move(t));
    }
    if (s == before) push_random();
  }
}

}  // namespace qedft
