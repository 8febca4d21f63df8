#pragma once

// Shared fixtures and the dense reference construction used as an oracle.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "qedft/field_core.hpp"
#include "qedft/pauli_fierz.hpp"

namespace qedft::fixtures {

/// L = 10, N_g = 16, N_e = 2, modes +-1 +-2, n_max = 6, w0 = 0.5, a = 1, gamma = 0.05.
inline HamiltonianSpec reference_spec(double gamma = 0.05) {
  Grid1D grid(10.0, 16);
  ModeSet modes({-2, -1, 1, 2}, 10.0, gamma);
  HamiltonianSpec s = make_spec(grid, modes, 2);
  RealVector v(16);
  for (int i = 0; i < 16; ++i) v[i] = 0.5 * std::cos(two_pi * grid.position(i) / 10.0);
  s.v = gauge_fix(v);
  // modes are sorted: index 0 -> n=-2, 1 -> -1, 2 -> 1, 3 -> 2
  s.j[2] = {0.1, 0.0};
  s.j[1] = std::conj(s.j[2]);
  s.j[3] = {0.2, 0.1};
  s.j[0] = std::conj(s.j[3]);
  s.interaction = {0.5, 1.0};
  s.n_max = 6;
  return s;
}

/// N_g = 6, one or two electrons, modes +-1, n_max = 3.
inline HamiltonianSpec tiny_spec(int electrons = 1, double gamma = 0.3) {
  Grid1D grid(10.0, 6);
  ModeSet modes({-1, 1}, 10.0, gamma);
  HamiltonianSpec s = make_spec(grid, modes, electrons);
  RealVector v(6);
  for (int i = 0; i < 6; ++i)
    v[i] = 0.4 * std::cos(two_pi * grid.position(i) / 10.0) + 0.15 * std::sin(2 * two_pi * grid.position(i) / 10.0);
  s.v = gauge_fix(v);
  s.j[1] = {0.2, 0.1};
  s.j[0] = std::conj(s.j[1]);
  s.interaction = {0.5, 1.0};
  s.n_max = 3;
  return s;
}

inline void set_mode(TransverseCurrent& c, const ModeSet& modes, int n, complex value) {
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (modes.label(m) == n) c[m] = value;
    if (modes.label(m) == -n) c[m] = std::conj(value);
  }
}

/// Full composite Hamiltonian as a dense matrix, vacuum Fock centre. Built
/// from scratch: Jordan-Wigner signs, photon operators on occupation vectors,
/// and one matrix exponential of the summed link generator per bond.
struct DenseModel {
  std::vector<std::uint64_t> configs;
  int photon_dim = 0;
  Eigen::MatrixXcd h;
  std::vector<Eigen::MatrixXcd> a;  ///< annihilators on the photon space
};

inline DenseModel dense_model(const HamiltonianSpec& s) {
  DenseModel d;
  const int ng = s.grid.points();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << ng); ++mask)
    if (std::popcount(mask) == s.electrons) d.configs.push_back(mask);
  const int nm = static_cast<int>(s.modes.size());
  const int q = s.n_max + 1;
  int dph = 1;
  for (int m = 0; m < nm; ++m) dph *= q;
  d.photon_dim = dph;

  auto occ = [&](int p, int m) {
    for (int k = nm - 1; k > m; --k) p /= q;
    return p % q;
  };
  auto power = [&](int m) {
    int s = 1;
    for (int k = nm - 1; k > m; --k) s *= q;
    return s;
  };
  for (int m = 0; m < nm; ++m) {
    Eigen::MatrixXcd am = Eigen::MatrixXcd::Zero(dph, dph);
    for (int p = 0; p < dph; ++p)
      if (occ(p, m) > 0) am(p - power(m), p) = std::sqrt(double(occ(p, m)));
    d.a.push_back(am);
  }
  Eigen::MatrixXcd hph = Eigen::MatrixXcd::Zero(dph, dph);
  for (int m = 0; m < nm; ++m) {
    const double w = s.modes.frequency(m);
    hph += w * (d.a[m].adjoint() * d.a[m] - std::conj(s.j[m]) * d.a[m] - s.j[m] * d.a[m].adjoint());
  }

  const double dx = s.grid.spacing();
  const double t = 0.5 / (dx * dx);
  const double gamma = s.modes.coupling();
  const int ne = static_cast<int>(d.configs.size());
  d.h = Eigen::MatrixXcd::Zero(ne * dph, ne * dph);
  for (int c = 0; c < ne; ++c) {
    double e = s.electrons / (dx * dx);
    std::vector<int> sites;
    for (int i = 0; i < ng; ++i)
      if (d.configs[c] >> i & 1) {
        sites.push_back(i);
        e -= s.v[i];
      }
    for (std::size_t x = 0; x < sites.size(); ++x)
      for (std::size_t y = x + 1; y < sites.size(); ++y)
        e += s.interaction(dx * (sites[x] - sites[y]), s.grid.length());
    d.h.block(c * dph, c * dph, dph, dph) = hph + e * Eigen::MatrixXcd::Identity(dph, dph);
  }
  auto index = [&](std::uint64_t mask) {
    for (int c = 0; c < ne; ++c)
      if (d.configs[c] == mask) return c;
    return -1;
  };
  for (int b = 0; b < ng; ++b) {
    const double xb = (b + 0.5) * dx;
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(dph, dph);
    double classical = 0.0;
    for (int m = 0; m < nm; ++m) {
      const complex ph = s.dipole ? complex{1.0} : std::exp(complex{0, s.modes.wavenumber(m) * xb});
      const double f = 1.0 / std::sqrt(2.0 * s.modes.frequency(m) * s.grid.length());
      g += f * (ph * d.a[m] + std::conj(ph) * d.a[m].adjoint());
      classical += 2.0 * f * (s.b[m] * ph).real();
    }
    g += classical * Eigen::MatrixXcd::Identity(dph, dph);
    const Eigen::MatrixXcd u = (complex{0, -gamma * dx} * g).exp();
    const int i = b, j = (b + 1) % ng;
    for (int c = 0; c < ne; ++c) {
      std::uint64_t mask = d.configs[c];
      if (!(mask >> i & 1) || (mask >> j & 1)) continue;
      // c_j^dag c_i with Jordan-Wigner ordering by site index
      int sign = (std::popcount(mask & ((std::uint64_t{1} << i) - 1)) % 2) ? -1 : 1;
      mask &= ~(std::uint64_t{1} << i);
      if (std::popcount(mask & ((std::uint64_t{1} << j) - 1)) % 2) sign = -sign;
      mask |= std::uint64_t{1} << j;
      const int c2 = index(mask);
      d.h.block(c2 * dph, c * dph, dph, dph) += -t * double(sign) * u;
      d.h.block(c * dph, c2 * dph, dph, dph) += -t * double(sign) * u.adjoint();
    }
  }
  return d;
}

}  // namespace qedft::fixtures
