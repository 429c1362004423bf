#pragma once

#include <vector>

#include "dqc/mps.hpp"

namespace dqc {

// Open-boundary transverse-field Ising chain
// H = -J (sum_i Z_i Z_{i+1} + g sum_j X_j), bond dimension 3.
MPO tfi_mpo(std::size_t n, double g, double j = 1.0);

struct DmrgParams {
  std::size_t max_bond = 64;
  double cutoff = 1e-12;
  std::size_t max_sweeps = 30;
  double energy_tol = 1e-10;   // per-sweep energy change
  std::size_t lanczos_iters = 30;
  double lanczos_tol = 1e-13;
};

struct DmrgResult {
  MPS state;
  double energy = 0.0;
  std::vector<double> sweep_energies;  // one entry per completed sweep
  bool converged = false;
};

// Two-site ground-state search. Non-convergence is reported through the
// flag and the energy trace, never by throwing.
DmrgResult dmrg_ground_state(const MPO& hamiltonian, MPS initial,
                             const DmrgParams& params = {});

// Critical point sits at g = 1.
MPS tfi_ground_state(std::size_t n, double g, const DmrgParams& params = {});
DmrgResult tfi_ground_state_full(std::size_t n, double g,
                                 const DmrgParams& params = {});

}  // namespace dqc
