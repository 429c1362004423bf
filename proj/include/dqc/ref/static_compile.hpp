#pragma once

#include <cstddef>
#include <vector>

#include "dqc/circuit.hpp"
#include "dqc/ref/statevector.hpp"

namespace dqc::ref {

struct StaticCompileResult {
  StaticCircuit circuit;
  double fidelity = 0.0;               // |<target|prepared>|^2
  std::vector<double> fidelity_series;  // entry 0 is the initial circuit
};

// Dense mirror of the ancilla-free training loop: the same layer-major
// polar-update schedule, but every environment is a plain amplitude loop
// over the full 2^n vector. Pins the tensor-network compiler's static
// limit without sharing its contraction code.
StaticCompileResult compile_static(StaticCircuit init,
                                   const Statevector& target,
                                   std::size_t sweeps);

}  // namespace dqc::ref
