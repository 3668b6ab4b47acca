#pragma once

#include <random>

namespace crystab {

template <class Rng>
StateVector random_state(const BasisPtr& basis, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] { return cplx(normal(rng), normal(rng)); };
  StateVector y = StateVector::zero(basis);
  for (std::size_t i = 0; i < y.field_size(); ++i) {
    y.psi1[i] = draw();
    y.psi2[i] = draw();
  }
  for (int k = 0; k < 3; ++k) {
    y.q[k] = draw();
    y.p[k] = draw();
  }
  return y;
}

}  // namespace crystab
