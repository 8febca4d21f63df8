#pragma once

// Truncated boson spaces: ladder operators, per-mode unitaries and the
// tensor-product layout used for several independent modes.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "qedft/errors.hpp"
#include "qedft/field_core.hpp"

namespace qedft::fock {

using Matrix = Eigen::MatrixXcd;

/// Annihilation operator on {|0>, ..., |n_max>}.
inline Matrix annihilation(int n_max) {
  Matrix a = Matrix::Zero(n_max + 1, n_max + 1);
  for (int m = 1; m <= n_max; ++m) a(m - 1, m) = std::sqrt(static_cast<double>(m));
  return a;
}

/// exp(-i theta (a e^{i phi} + a^dag e^{-i phi})) built from the truncated generator.
/// Exactly unitary on the truncated space.
class ModeExponential {
public:
  explicit ModeExponential(int n_max) : n_max_(n_max) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n_max + 1, n_max + 1);
    for (int m = 1; m <= n_max; ++m) q(m - 1, m) = q(m, m - 1) = std::sqrt(double(m));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(q);
    eigenvalues_ = es.eigenvalues();
    eigenvectors_ = es.eigenvectors();
  }

  Matrix operator()(double theta, double phi) const {
    const int d = n_max_ + 1;
    Eigen::VectorXcd phase(d);
    for (int k = 0; k < d; ++k) phase[k] = std::polar(1.0, -theta * eigenvalues_[k]);
    Matrix e = eigenvectors_.cast<complex>() * phase.asDiagonal() *
               eigenvectors_.transpose().cast<complex>();
    // R a R^dag = e^{i phi} a with R = diag(e^{-i phi m}).
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) e(r, c) *= std::polar(1.0, -phi * (r - c));
    return e;
  }

private:
  int n_max_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// Generalized Laguerre polynomial L_n^{(k)}(x) by upward recurrence.
inline double laguerre(int n, int k, double x) {
  if (n == 0) return 1.0;
  double l0 = 1.0;
  double l1 = 1.0 + k - x;
  for (int m = 1; m < n; ++m) {
    double l2 = ((2.0 * m + 1.0 + k - x) * l1 - (m + k) * l0) / (m + 1.0);
    l0 = l1;
    l1 = l2;
  }
  return l1;
}

/// Exact matrix elements <m|D(beta)|n> of D(beta) = exp(beta a^dag - conj(beta) a),
/// truncated to m, n <= n_max. Not unitary: the missing weight is leakage.
inline Matrix displacement_matrix(complex beta, int n_max) {
  Matrix d(n_max + 1, n_max + 1);
  const double x = std::norm(beta);
  const double pref = std::exp(-0.5 * x);
  for (int m = 0; m <= n_max; ++m) {
    for (int n = 0; n <= n_max; ++n) {
      if (m >= n) {
        double ratio = 1.0;  // sqrt(n!/m!)
        for (int q = n + 1; q <= m; ++q) ratio /= std::sqrt(double(q));
        d(m, n) = pref * ratio * std::pow(beta, m - n) * laguerre(n, m - n, x);
      } else {
        double ratio = 1.0;
        for (int q = m + 1; q <= n; ++q) ratio /= std::sqrt(double(q));
        d(m, n) = pref * ratio * std::pow(-std::conj(beta), n - m) * laguerre(m, n - m, x);
      }
    }
  }
  return d;
}

/// Row-major layout of a product of truncated modes; mode 0 varies slowest.
class Layout {
public:
  Layout() = default;
  Layout(std::size_t modes, int n_max) : n_max_(n_max), strides_(modes) {
    if (n_max < 1) throw Error("n_max must be at least 1");
    std::size_t s = 1;
    for (std::size_t m = modes; m-- > 0;) {
      strides_[m] = s;
      s *= static_cast<std::size_t>(n_max + 1);
    }
    size_ = s;
  }

  std::size_t modes() const { return strides_.size(); }
  int n_max() const { return n_max_; }
  int dim() const { return n_max_ + 1; }
  std::size_t size() const { return size_; }
  std::size_t stride(std::size_t m) const { return strides_[m]; }
  int occupation(std::size_t index, std::size_t m) const {
    return static_cast<int>((index / strides_[m]) % static_cast<std::size_t>(n_max_ + 1));
  }

private:
  int n_max_ = 1;
  std::size_t size_ = 1;
  std::vector<std::size_t> strides_;
};

/// In-place y <- (1 x .. x op_m x .. x 1) y on one photon block.
/// scratch must hold at least layout.size() entries.
inline void apply_on_mode(complex* block, const Layout& layout, std::size_t m, const Matrix& op,
                          complex* scratch) {
  using Map = Eigen::Map<Matrix>;
  const Eigen::Index d = layout.dim();
  const Eigen::Index inner = static_cast<Eigen::Index>(layout.stride(m));
  const Eigen::Index outer = static_cast<Eigen::Index>(layout.size()) / (inner * d);
  if (inner == 1) {
    // Fastest mode: the block is a d x outer column-major matrix.
    Map x(block, d, outer);
    Map t(scratch, d, outer);
    t.noalias() = op * x;
    x = t;
    return;
  }
  for (Eigen::Index o = 0; o < outer; ++o) {
    Map x(block + o * inner * d, inner, d);
    Map t(scratch, inner, d);
    t.noalias() = x * op.transpose();
    x = t;
  }
}

/// Tensor product of per-mode matrices acting on the truncated photon space.
struct ProductOperator {
  Layout layout;
  std::vector<Matrix> factors;

  void apply(complex* block) const {
    std::vector<complex> scratch(layout.size());
    for (std::size_t m = 0; m < factors.size(); ++m)
      apply_on_mode(block, layout, m, factors[m], scratch.data());
  }

  Matrix dense() const {
    Matrix out = Matrix::Identity(1, 1);
    for (const auto& f : factors) {
      Matrix next(out.rows() * f.rows(), out.cols() * f.cols());
      for (Eigen::Index r = 0; r < out.rows(); ++r)
        for (Eigen::Index c = 0; c < out.cols(); ++c)
          next.block(r * f.rows(), c * f.cols(), f.rows(), f.cols()) = out(r, c) * f;
      out = std::move(next);
    }
    return out;
  }
};

}  // namespace qedft::fock
