#pragma once

// Periodic 1D matter grid, quantized photon modes and the mode-space
// representation of transverse currents and vector potentials.
//
// Units: hbar = c = m = |e| = eps0 = mu0 = 1. A mode n has wavenumber
// k_n = 2 pi n / L, frequency w_n = |k_n| and field prefactor
// f_n = (2 w_n L)^(-1/2). Mode coefficients are the primary representation;
// grid arrays are derived views.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "qedft/errors.hpp"

namespace qedft {

using complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

class Grid1D {
public:
  Grid1D() = default;
  Grid1D(double length, int points) : length_(length), points_(points) {
    if (!(length > 0.0) || !std::isfinite(length))
      throw Error("grid length must be positive and finite");
    if (points < min_points)
      throw Error("grid needs at least " + std::to_string(min_points) + " points, got " +
                  std::to_string(points));
  }

  static constexpr int min_points = 4;

  double length() const { return length_; }
  int points() const { return points_; }
  double spacing() const { return length_ / points_; }
  double position(int i) const { return i * spacing(); }
  /// Midpoint of the bond joining site i and site i+1.
  double bond_position(int i) const { return (i + 0.5) * spacing(); }
  int wrap(int i) const { return ((i % points_) + points_) % points_; }

  bool operator==(const Grid1D&) const = default;

private:
  double length_ = 1.0;
  int points_ = min_points;
};

/// Finite set of photon modes, closed under n -> -n, sorted by n.
class ModeSet {
public:
  ModeSet() = default;
  ModeSet(std::vector<int> modes, double length, double coupling)
      : modes_(std::move(modes)), length_(length), coupling_(coupling) {
    std::sort(modes_.begin(), modes_.end());
    if (std::adjacent_find(modes_.begin(), modes_.end()) != modes_.end())
      throw Error("duplicate photon mode");
    for (int n : modes_) {
      if (n == 0) throw Error("photon mode 0 is not allowed (Coulomb gauge)");
      if (!std::binary_search(modes_.begin(), modes_.end(), -n))
        throw Error("mode set is not closed under negation: missing " + std::to_string(-n));
    }
    if (!(coupling >= 0.0) || !std::isfinite(coupling))
      throw Error("coupling scale must be finite and non-negative");
    if (!(length > 0.0)) throw Error("mode quantization length must be positive");
  }

  /// Symmetric set {+-1, ..., +-count}.
  static ModeSet lowest(int count, double length, double coupling) {
    std::vector<int> ns;
    for (int n = 1; n <= count; ++n) {
      ns.push_back(n);
      ns.push_back(-n);
    }
    return ModeSet(std::move(ns), length, coupling);
  }

  std::size_t size() const { return modes_.size(); }
  bool empty() const { return modes_.empty(); }
  const std::vector<int>& labels() const { return modes_; }
  int label(std::size_t i) const { return modes_[i]; }
  double length() const { return length_; }
  double coupling() const { return coupling_; }

  double wavenumber(std::size_t i) const { return two_pi * modes_[i] / length_; }
  double frequency(std::size_t i) const { return std::abs(wavenumber(i)); }
  double field_prefactor(std::size_t i) const {
    return 1.0 / std::sqrt(2.0 * frequency(i) * length_);
  }
  /// g_n = gamma * f_n, the amplitude with which a mode enters the matter coupling.
  double coupling_prefactor(std::size_t i) const { return coupling_ * field_prefactor(i); }

  std::size_t partner(std::size_t i) const {
    auto it = std::lower_bound(modes_.begin(), modes_.end(), -modes_[i]);
    return static_cast<std::size_t>(it - modes_.begin());
  }

  ModeSet with_coupling(double coupling) const { return ModeSet(modes_, length_, coupling); }

  /// Throws AliasingError if some |n| >= N_g/2.
  void check_resolved_by(const Grid1D& grid) const {
    for (int n : modes_) {
      if (2 * std::abs(n) >= grid.points())
        throw AliasingError("mode " + std::to_string(n) + " is aliased on a grid of " +
                            std::to_string(grid.points()) + " points (need |n| < N_g/2)");
    }
    if (std::abs(grid.length() - length_) > 1e-12 * length_)
      throw Error("mode set and grid use different box lengths");
  }

  bool operator==(const ModeSet&) const = default;

private:
  std::vector<int> modes_;
  double length_ = 1.0;
  double coupling_ = 0.0;
};

/// Mode coefficients c_n of a transverse current or external vector potential,
/// ordered like ModeSet::labels().
struct TransverseCurrent {
  std::vector<complex> coeffs;

  static TransverseCurrent zero(const ModeSet& modes) {
    return {std::vector<complex>(modes.size(), complex{})};
  }
  std::size_t size() const { return coeffs.size(); }
  complex operator[](std::size_t i) const { return coeffs[i]; }
  complex& operator[](std::size_t i) { return coeffs[i]; }

  bool is_zero() const {
    return std::all_of(coeffs.begin(), coeffs.end(), [](complex c) { return c == complex{}; });
  }
  double norm() const {
    double s = 0;
    for (auto c : coeffs) s += std::norm(c);
    return std::sqrt(s);
  }
  friend TransverseCurrent operator+(TransverseCurrent a, const TransverseCurrent& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a.coeffs[i] += b.coeffs[i];
    return a;
  }
  friend TransverseCurrent operator-(TransverseCurrent a, const TransverseCurrent& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a.coeffs[i] -= b.coeffs[i];
    return a;
  }
  friend TransverseCurrent operator*(double s, TransverseCurrent a) {
    for (auto& c : a.coeffs) c *= s;
    return a;
  }
  TransverseCurrent operator-() const { return -1.0 * *this; }
  bool operator==(const TransverseCurrent&) const = default;
};

/// Largest |c_n - conj(c_{-n})|.
inline double conjugation_defect(const TransverseCurrent& c, const ModeSet& modes) {
  double worst = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i)
    worst = std::max(worst, std::abs(c[i] - std::conj(c[modes.partner(i)])));
  return worst;
}

inline void require_conjugation_symmetry(const TransverseCurrent& c, const ModeSet& modes,
                                         double tol = 1e-12) {
  if (c.size() != modes.size())
    throw Error("coefficient count " + std::to_string(c.size()) + " does not match " +
                std::to_string(modes.size()) + " modes");
  double scale = std::max(1.0, c.norm());
  if (conjugation_defect(c, modes) > tol * scale)
    throw SymmetryError("mode coefficients break c_n = conj(c_-n)");
}

/// Coherent amplitudes alpha_n of the photon field; A(x) = sum_n f_n (alpha_n e^{ikx} + c.c.).
struct ClassicalField {
  std::vector<complex> amplitudes;

  static ClassicalField zero(const ModeSet& modes) {
    return {std::vector<complex>(modes.size(), complex{})};
  }
  std::size_t size() const { return amplitudes.size(); }
  complex operator[](std::size_t i) const { return amplitudes[i]; }

  double value_at(double x, const ModeSet& modes) const {
    double a = 0.0;
    for (std::size_t i = 0; i < modes.size(); ++i)
      a += 2.0 * modes.field_prefactor(i) *
           (amplitudes[i] * std::polar(1.0, modes.wavenumber(i) * x)).real();
    return a;
  }
  RealVector on_grid(const Grid1D& grid, const ModeSet& modes, double offset = 0.0) const {
    RealVector out(grid.points());
    for (int i = 0; i < grid.points(); ++i) out[i] = value_at(grid.position(i) + offset, modes);
    return out;
  }
  /// a~_n = alpha_n + conj(alpha_{-n}), the coefficient that multiplies e^{ik_n x} / f_n.
  complex symmetric_amplitude(std::size_t i, const ModeSet& modes) const {
    return amplitudes[i] + std::conj(amplitudes[modes.partner(i)]);
  }
};

/// Grid field -> mode coefficients j_n = (2 w^3 L)^(-1/2) dx sum_x j(x) e^{-ik_n x}.
/// Samples sit at x_i + offset. Zero and unrepresented Fourier components are dropped.
inline TransverseCurrent to_mode_coefficients(std::span<const double> field, const Grid1D& grid,
                                              const ModeSet& modes, double offset = 0.0) {
  if (static_cast<int>(field.size()) != grid.points())
    throw Error("field has " + std::to_string(field.size()) + " samples, grid has " +
                std::to_string(grid.points()));
  modes.check_resolved_by(grid);
  TransverseCurrent out = TransverseCurrent::zero(modes);
  const double dx = grid.spacing();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    // Only the positive member of each pair is summed; the partner follows by conjugation.
    if (modes.label(m) < 0) continue;
    const double k = modes.wavenumber(m);
    complex acc{};
    for (int i = 0; i < grid.points(); ++i)
      acc += field[i] * std::polar(1.0, -k * (grid.position(i) + offset));
    const double w = modes.frequency(m);
    out[m] = acc * dx / std::sqrt(2.0 * w * w * w * grid.length());
    out[modes.partner(m)] = std::conj(out[m]);
  }
  return out;
}

inline TransverseCurrent to_mode_coefficients(const RealVector& field, const Grid1D& grid,
                                              const ModeSet& modes, double offset = 0.0) {
  return to_mode_coefficients(std::span<const double>(field.data(), field.size()), grid, modes,
                              offset);
}

/// Exact inverse of to_mode_coefficients on represented modes:
/// j(x) = sum_n (2 w_n^3 / L)^(1/2) j_n e^{ik_n x}.
inline RealVector from_mode_coefficients(const TransverseCurrent& coeffs, const Grid1D& grid,
                                         const ModeSet& modes, double offset = 0.0) {
  require_conjugation_symmetry(coeffs, modes);
  RealVector out = RealVector::Zero(grid.points());
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double w = modes.frequency(m);
    const double scale = std::sqrt(2.0 * w * w * w / grid.length());
    for (int i = 0; i < grid.points(); ++i)
      out[i] += scale * (coeffs[m] * std::polar(1.0, modes.wavenumber(m) *
                                                         (grid.position(i) + offset)))
                            .real();
  }
  return out;
}

/// Amplitudes whose field solves -A'' = source on represented modes. With the
/// conventions above this is the identity map alpha_n = source_n.
inline ClassicalField solve_static_maxwell(const TransverseCurrent& source, const ModeSet& modes) {
  if (source.size() != modes.size()) throw Error("source does not match mode set");
  return ClassicalField{source.coeffs};
}

/// Current whose static Maxwell solution is the vector potential b.
inline TransverseCurrent b_to_current(const TransverseCurrent& b) { return b; }

/// Spectral second derivative restricted to represented modes.
inline RealVector spectral_second_derivative(const RealVector& field, const Grid1D& grid,
                                             const ModeSet& modes) {
  TransverseCurrent c = to_mode_coefficients(field, grid, modes);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double k = modes.wavenumber(m);
    c[m] *= -k * k;
  }
  return from_mode_coefficients(c, grid, modes);
}

/// Mode-space form of the coupling integral: sum_n w_n (alpha_n conj(j_n) + conj(alpha_n) j_n),
/// which equals dx sum_x j(x) A(x).
inline double coupling_bilinear(const ClassicalField& field, const TransverseCurrent& current,
                                const ModeSet& modes) {
  double s = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m)
    s += modes.frequency(m) * 2.0 * (field[m] * std::conj(current[m])).real();
  return s;
}

inline double grid_integral(const RealVector& a, const RealVector& b, const Grid1D& grid) {
  return grid.spacing() * a.dot(b);
}

inline double grid_norm(const RealVector& a, const Grid1D& grid) {
  return std::sqrt(grid.spacing() * a.squaredNorm());
}

/// Subtracts the spatial mean so the potential carries no gauge constant.
inline RealVector gauge_fix(const RealVector& v) {
  return (v.array() - v.mean()).matrix();
}

}  // namespace qedft
