#pragma once

#include <cstddef>
#include <vector>

#include "dqc/ref/statevector.hpp"

namespace dqc::ref {

struct GroundState {
  double energy;
  Statevector state;
};

// Dense diagonalization of the open-boundary transverse-field Ising chain
// H = -J (sum_i Z_i Z_{i+1} + g sum_j X_j) for n up to 14 qubits.
GroundState tfi_ground_dense(std::size_t n, double g, double j = 1.0);

}  // namespace dqc::ref
