#pragma once

// Thick-restart block Lanczos for the lowest eigenpairs of a Hermitian
// operator given only as y = H x. Full reorthogonalization keeps the
// projected matrix equal to V^dag H V; restarts keep the lowest Ritz vectors.
// A block size >= 2 resolves degenerate pairs that a single start vector misses.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "qedft/errors.hpp"

namespace qedft {

struct LanczosOptions {
  double tol = 1e-10;  ///< target residual ||H y - theta y|| of the wanted pairs
  int max_matvecs = 20000;
  int krylov_dim = 40;  ///< basis size between restarts
  int block_size = 2;
  int wanted = 2;
  std::uint64_t seed = 20170314;  ///< start block seed
};

struct EigenResult {
  std::vector<double> values;
  std::vector<Eigen::VectorXcd> vectors;
  std::vector<double> residuals;  ///< Ritz residual estimates
  int matvecs = 0;
  int restarts = 0;
  bool converged = false;
};

namespace detail {

inline Eigen::VectorXcd random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::VectorXcd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = {g(rng), g(rng)};
  v.normalize();
  return v;
}

}  // namespace detail

/// apply(x, y) must write y = H x.
template <class Apply>
EigenResult lowest_eigenpairs(Apply&& apply, Eigen::Index dim, const LanczosOptions& opts) {
  if (dim <= 0) throw Error("eigensolver needs a non-empty space");
  if (opts.block_size < 1) throw Error("block size must be positive");
  const int p = static_cast<int>(std::min<Eigen::Index>(opts.block_size, dim));
  const int wanted = static_cast<int>(std::min<Eigen::Index>(opts.wanted, dim));
  const int m = static_cast<int>(
      std::min<Eigen::Index>(std::max(opts.krylov_dim, wanted + 2 * p), dim));
  const int keep = std::max(wanted, std::min(m - p, m / 2));

  std::mt19937_64 rng(opts.seed);
  // Basis columns; s of them are live.
  Eigen::MatrixXcd basis(dim, m + p);
  int s = 0;

  EigenResult out;
  double best = INFINITY;

  // Classical Gram-Schmidt against the live basis, repeated once when the
  // first pass loses most of the norm. Returns false when v lies in the span.
  auto orthogonalize = [&](Eigen::VectorXcd& v, Eigen::VectorXcd* coeffs) {
    const double before = v.norm();
    double norm = before;
    for (int pass = 0; pass < 3 && s > 0; ++pass) {
      Eigen::VectorXcd c = basis.leftCols(s).adjoint() * v;
      v.noalias() -= basis.leftCols(s) * c;
      if (coeffs) *coeffs += c;
      const double after = v.norm();
      const bool settled = after > 0.7 * norm;
      norm = after;
      if (settled) break;
    }
    return norm > 1e-10 * std::max(before, 1e-300);
  };
  auto push_fresh = [&]() {
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::VectorXcd v = detail::random_unit(dim, rng);
      if (orthogonalize(v, nullptr)) {
        basis.col(s++) = v.normalized();
        return;
      }
    }
    throw ConvergenceError("could not extend Krylov basis", best);
  };

  for (int i = 0; i < p; ++i) push_fresh();
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(m + p, m + p);
  int block_begin = 0;
  Eigen::VectorXcd w(dim);

  while (true) {
    const int nb = s - block_begin;
    Eigen::MatrixXcd rem(dim, nb);
    for (int j = block_begin; j < s; ++j) {
      Eigen::VectorXcd x = basis.col(j);
      apply(x, w);
      ++out.matvecs;
      Eigen::VectorXcd col = Eigen::VectorXcd::Zero(s);
      orthogonalize(w, &col);
      for (int i = 0; i < s; ++i) {
        t(i, j) = col[i];
        t(j, i) = std::conj(col[i]);
      }
      t(j, j) = t(j, j).real();
      rem.col(j - block_begin) = w;
    }

    // QR of the remainder block: rem = q r, computed in place.
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(nb, nb);
    for (int c = 0; c < nb; ++c) {
      for (int pass = 0; pass < 2; ++pass)
        for (int k = 0; k < c; ++k) {
          const std::complex<double> proj = rem.col(k).dot(rem.col(c));
          rem.col(c) -= proj * rem.col(k);
          r(k, c) += proj;
        }
      const double nrm = rem.col(c).norm();
      r(c, c) = nrm;
      if (nrm > 0) rem.col(c) /= nrm;
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> rr(t.topLeftCorner(s, s));
    const auto& theta = rr.eigenvalues();
    const auto& y = rr.eigenvectors();
    const double scale = std::max(1.0, theta.cwiseAbs().maxCoeff());
    const bool full = s >= dim;

    std::vector<double> res(std::min(wanted, s));
    bool ok = s >= wanted;
    for (int i = 0; i < static_cast<int>(res.size()); ++i) {
      res[i] = full ? 0.0 : (r * y.col(i).segment(block_begin, nb)).norm();
      if (res[i] > opts.tol) ok = false;
    }
    if (!res.empty()) best = std::min(best, res[0]);

    if (ok || out.matvecs >= opts.max_matvecs) {
      out.converged = ok;
      for (int i = 0; i < static_cast<int>(res.size()); ++i) {
        Eigen::VectorXcd v = basis.leftCols(s) * y.col(i);
        v.normalize();
        out.values.push_back(theta[i]);
        out.vectors.push_back(std::move(v));
        out.residuals.push_back(res[i]);
      }
      return out;
    }
    if (full) throw ConvergenceError("Krylov space exhausted", best);

    if (s + nb > m) {
      Eigen::MatrixXcd kept = basis.leftCols(s) * y.leftCols(keep);
      basis.leftCols(keep) = kept;
      s = keep;
      t.setZero();
      for (int i = 0; i < keep; ++i) t(i, i) = theta[i];
      ++out.restarts;
    }
    block_begin = s;
    for (int c = 0; c < nb; ++c) {
      if (s >= dim) break;
      if (r(c, c).real() > 1e-14 * scale) {
        Eigen::VectorXcd v = rem.col(c);
        // Guards against drift; q is already orthogonal to the old basis.
        if (orthogonalize(v, nullptr)) {
          basis.col(s++) = v.normalized();
          continue;
        }
      }
      // Exhausted direction: extend with a fresh vector orthogonal to everything so far.
      push_fresh();
    }
  }
}

}  // namespace qedft
