#pragma once

#include <vector>

#include "crystab/lattice.hpp"

namespace crystab {

/// Periodic block of L^3 cells; cell n = (n1, n2, n3) is stored at (n1 L + n2) L + n3.
struct SupercellState {
  int L = 1;
  std::vector<StateVector> cells;

  static SupercellState zero(int L, const BasisPtr& basis);
  std::size_t cell_count() const noexcept { return cells.size(); }
  static std::size_t cell_index(int L, const IVec3& n);
  static IVec3 cell_of(int L, std::size_t index);
};

/// Bloch components on the grid theta_k = 2 pi k / L, k in {0..L-1}^3, same ordering as cells.
struct BlochComponents {
  int L = 1;
  std::vector<Vec3> thetas;
  std::vector<StateVector> modes;
};

/// theta_k = 2 pi k / L in cell ordering.
std::vector<Vec3> bloch_grid(int L);

/// Y~(theta_k) = sum_n exp(-i n.theta_k) Y(n).
BlochComponents bloch_decompose(const SupercellState& state);

/// Y(n) = L^{-3} sum_k exp(+i n.theta_k) Y~(theta_k).
SupercellState bloch_reconstruct(const BlochComponents& components);

/// sum_n ||Y(n)||_X^2.
double supercell_norm2(const SupercellState& state);

}  // namespace crystab
