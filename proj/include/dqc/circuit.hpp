#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dqc/mps.hpp"

namespace dqc {

// One- or two-qubit unitary on adjacent wires. The matrix is stored as
// (2,2) or (4,4) with labels ("o","i"); two-site rows and columns are
// ordered as first_wire * 2 + second_wire.
struct Gate {
  DenseTensor unitary;
  std::vector<std::size_t> sites;  // ascending, adjacent
  std::string tag;
};

// Validates unitarity (within 1e-10), adjacency, and rank/site agreement.
Gate make_gate(DenseTensor unitary, std::vector<std::size_t> sites,
               std::string tag);

Gate adjoint_gate(const Gate& g);

// Named constructors for the fixed gates the builders use.
Gate gate_h(std::size_t q);
Gate gate_x(std::size_t q);
Gate gate_z(std::size_t q);
// control and target must be adjacent; either order is allowed.
Gate gate_cnot(std::size_t control, std::size_t target);

// Euler rotation Rz(phi) Ry(theta) Rz(lambda) in the half-angle
// convention, so every angle supports exact +-pi/2 parameter shifts.
DenseTensor euler_unitary(double theta, double phi, double lambda);

// Full two-qubit unitary from 15 angles: single-qubit Euler layers around
// exp(-i/2 (a XX + b YY + c ZZ)). Parameters order: left pair (3+3),
// interaction (3), right pair (3+3).
DenseTensor kak_unitary(const std::array<double, 15>& params);

// Haar-distributed unitary of the given dimension as a (dim,dim) tensor.
DenseTensor haar_unitary(std::size_t dim, Rng& rng);

// Layered circuit on a fixed number of wires; gates inside one layer act
// on disjoint wires.
struct StaticCircuit {
  std::size_t n_qubits = 0;
  std::vector<std::vector<Gate>> layers;

  std::size_t depth() const { return layers.size(); }
};

// Throws ShapeError on out-of-range sites or overlapping gates in a layer.
void validate_circuit(const StaticCircuit& c);

// True when every layer holds only two-site gates whose first wire has the
// layer's parity (the even-odd brick pattern).
bool is_brickwork(const StaticCircuit& c);

// Haar-random seeded brick pattern: layer l pairs (l%2, l%2+1), ...
StaticCircuit build_brickwork(std::size_t n, std::size_t depth,
                              std::uint64_t seed);

void apply_circuit_inplace(MPS& s, const StaticCircuit& c,
                           const Truncation& trunc = {});

// Pre-measurement ansatz: a circuit on n_system + r wires where the wires
// listed in ancilla_positions start in |0>, get measured, and are removed.
// The remaining wires carry the system qubits in chain order.
struct DQCAnsatz {
  std::size_t n_system = 0;
  std::vector<std::size_t> ancilla_positions;  // sorted wire indices
  StaticCircuit pre_circuit;                   // over n_system + r wires

  std::size_t r() const { return ancilla_positions.size(); }
  std::size_t n_wires() const { return n_system + ancilla_positions.size(); }
  const std::vector<std::size_t>& measured_wires() const {
    return ancilla_positions;
  }
  // Complement of the ancilla wires, ascending.
  std::vector<std::size_t> data_wires() const;
};

DQCAnsatz make_ansatz(std::size_t n_system,
                      std::vector<std::size_t> ancilla_positions,
                      StaticCircuit pre_circuit);

// \prod_j U_j |0...0> on the extended chain.
MPS run_pre_measurement(const DQCAnsatz& a, const Truncation& trunc = {});

struct OutcomeBranch {
  std::vector<int> outcome;  // one bit per measured wire, wire order
  double probability = 0.0;
  MPS state;  // system wires only, normalized unless degenerate
  bool degenerate = false;
};

inline constexpr std::size_t kDefaultOutcomeCap = 6;

// All 2^r measurement branches. Probabilities sum to 1 within 1e-10;
// degenerate branches carry probability ~0 and are flagged. Throws
// std::invalid_argument when r exceeds the cap: exhaustive enumeration is
// only for the few-ancilla regime, use sampling beyond it.
std::vector<OutcomeBranch> enumerate_outcomes(
    const DQCAnsatz& a, std::size_t r_max = kDefaultOutcomeCap,
    const Truncation& trunc = {});

// Chain of small entangled patches whose boundary pairs are rotated to the
// Bell basis and measured; every branch is Pauli-equivalent to GHZ on the
// system wires. Patch count is max(2, ceil(n/3)) with sizes as equal as
// possible, giving r = 2*(patches-1).
DQCAnsatz ghz_patch_precircuit(std::size_t n);

// Text round-trip. Format documented in README.
void save_circuit(const StaticCircuit& c, const std::string& path);
StaticCircuit load_circuit(const std::string& path);
void save_ansatz(const DQCAnsatz& a, const std::string& path);
DQCAnsatz load_ansatz(const std::string& path);

}  // namespace dqc
