#include "crystab/bloch.hpp"

#include <cmath>
#include <string>

namespace crystab {

namespace {

// Separable DFT over the three cell axes applied to packed per-cell vectors:
// out[k] = sum_n exp(sign * i n.theta_k) in[n].
std::vector<CVector> cell_dft(int L, const std::vector<CVector>& in, double sign) {
  const std::size_t L1 = static_cast<std::size_t>(L);
  std::vector<cplx> phase(L1 * L1);
  for (int k = 0; k < L; ++k)
    for (int n = 0; n < L; ++n)
      phase[static_cast<std::size_t>(k) * L1 + static_cast<std::size_t>(n)] =
          std::polar(1.0, sign * kTwoPi * static_cast<double>(k) * n / L);

  std::vector<CVector> cur = in;
  std::vector<CVector> next(cur.size());
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t out = 0; out < cur.size(); ++out) {
      IVec3 idx = SupercellState::cell_of(L, out);
      const int k = idx[axis];
      CVector acc = CVector::Zero(cur[out].size());
      for (int n = 0; n < L; ++n) {
        idx[axis] = n;
        acc += phase[static_cast<std::size_t>(k) * L1 + static_cast<std::size_t>(n)] *
               cur[SupercellState::cell_index(L, idx)];
      }
      next[out] = std::move(acc);
    }
    std::swap(cur, next);
  }
  return cur;
}

}  // namespace

SupercellState SupercellState::zero(int L, const BasisPtr& basis) {
  if (L < 1) throw InvalidArgument("SupercellState: L must be >= 1, got " + std::to_string(L));
  SupercellState s;
  s.L = L;
  s.cells.assign(static_cast<std::size_t>(L) * L * L, StateVector::zero(basis));
  return s;
}

std::size_t SupercellState::cell_index(int L, const IVec3& n) {
  return (static_cast<std::size_t>(n[0]) * L + static_cast<std::size_t>(n[1])) * L + static_cast<std::size_t>(n[2]);
}

IVec3 SupercellState::cell_of(int L, std::size_t index) {
  const int c = static_cast<int>(index % L);
  const int b = static_cast<int>((index / L) % L);
  const int a = static_cast<int>(index / (static_cast<std::size_t>(L) * L));
  return {a, b, c};
}

std::vector<Vec3> bloch_grid(int L) {
  if (L < 1) throw InvalidArgument("bloch_grid: L must be >= 1, got " + std::to_string(L));
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(L) * L * L);
  for (std::size_t i = 0; i < static_cast<std::size_t>(L) * L * L; ++i) {
    const IVec3 k = SupercellState::cell_of(L, i);
    out.push_back(kTwoPi / L * Vec3(k[0], k[1], k[2]));
  }
  return out;
}

BlochComponents bloch_decompose(const SupercellState& state) {
  const int L = state.L;
  if (L < 1) throw InvalidArgument("bloch_decompose: L must be >= 1, got " + std::to_string(L));
  const std::size_t count = static_cast<std::size_t>(L) * L * L;
  if (state.cells.size() != count) {
    throw ShapeError("bloch_decompose: expected " + std::to_string(count) + " cells, got " +
                     std::to_string(state.cells.size()));
  }
  const BasisPtr& basis = state.cells.front().psi1.basis_ptr();
  std::vector<CVector> packed;
  packed.reserve(count);
  for (const auto& y : state.cells) {
    require_same_basis(y.psi1, state.cells.front().psi1, "bloch_decompose");
    packed.push_back(y.pack());
  }
  const auto modes = cell_dft(L, packed, -1.0);

  BlochComponents out;
  out.L = L;
  out.thetas = bloch_grid(L);
  out.modes.reserve(count);
  for (const auto& v : modes) out.modes.push_back(StateVector::unpack(basis, v));
  return out;
}

SupercellState bloch_reconstruct(const BlochComponents& components) {
  const int L = components.L;
  if (L < 1) throw InvalidArgument("bloch_reconstruct: L must be >= 1, got " + std::to_string(L));
  const std::size_t count = static_cast<std::size_t>(L) * L * L;
  if (components.modes.size() != count) {
    throw ShapeError("bloch_reconstruct: expected " + std::to_string(count) + " modes, got " +
                     std::to_string(components.modes.size()));
  }
  const BasisPtr& basis = components.modes.front().psi1.basis_ptr();
  std::vector<CVector> packed;
  packed.reserve(count);
  for (const auto& y : components.modes) packed.push_back(y.pack());
  auto cells = cell_dft(L, packed, +1.0);

  SupercellState out;
  out.L = L;
  out.cells.reserve(count);
  const double scale = 1.0 / static_cast<double>(count);
  for (auto& v : cells) out.cells.push_back(StateVector::unpack(basis, scale * v));
  return out;
}

double supercell_norm2(const SupercellState& state) {
  double acc = 0.0;
  for (const auto& y : state.cells) acc += inner_X(y, y).real();
  return acc;
}

}  // namespace crystab
