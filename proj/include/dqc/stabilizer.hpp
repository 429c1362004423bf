#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqc/circuit.hpp"

namespace dqc {

// n-qubit Pauli operator stored as P = i^phase_power * prod_j X_j^x[j]
// Z_j^z[j]. In this convention products pick up (-1)^(z_a . x_b) and a Y
// letter on a site contributes one factor of i to phase_power.
struct PauliString {
  std::size_t n = 0;
  int phase_power = 0;  // modulo 4
  std::vector<std::uint8_t> x, z;

  static PauliString identity(std::size_t n);
  static PauliString single(std::size_t n, std::size_t site, char op);
};

Complex pauli_phase(const PauliString& p);  // i^phase_power

PauliString pauli_product(const PauliString& a, const PauliString& b);

// r(a) Lambda r(b) over GF(2); zero means the operators commute.
int symplectic_product(const PauliString& a, const PauliString& b);
bool commutes(const PauliString& a, const PauliString& b);

// Text form: sign token (+, -, +i, -i) followed by one of IXYZ per site,
// e.g. "+XXI" or "-iZIZ". Round-trips exactly.
std::string to_text(const PauliString& p);
PauliString parse_pauli(const std::string& text);

// Drops every site not listed; keep must be ascending. The phase factor is
// carried over unchanged.
PauliString restrict_pauli(const PauliString& p,
                           const std::vector<std::size_t>& keep);

// Generator list of a stabilizer group; the symplectic machinery below
// only reads the bit part of each row, phases ride along for outcome
// bookkeeping.
struct CheckMatrix {
  std::size_t n = 0;
  std::vector<PauliString> rows;
};

// GF(2) rank of the (rows x 2n) bit matrix equals the row count.
bool independent(const CheckMatrix& r);

// A Pauli anticommuting with row i and commuting with every other row,
// phase +1. Requires independent rows; the defining commutation pattern is
// checked on every call.
PauliString anticommuting_partner(const CheckMatrix& r, std::size_t i);

struct MeasurementCorrection {
  bool deterministic = false;
  int outcome = -1;        // set for deterministic measurements
  PauliString correction;  // set otherwise: maps outcome-1 to outcome-0
};

// Computational-basis measurement of qubit k on the state stabilized by r.
// For a random outcome, returns the Pauli mapping the outcome-1 branch to
// the outcome-0 branch (Lemma-2 partner in the re-derived generator set).
MeasurementCorrection post_measurement_correction(const CheckMatrix& r,
                                                  std::size_t k);

// Iterates the single-qubit correction over a measurement record: returns
// a Pauli on all wires mapping the observed branch to the all-zero branch
// up to global phase. X-support of pending corrections flips later
// reference outcomes, which is accounted for bit by bit. Throws
// std::invalid_argument when the record has probability zero.
PauliString trajectory_correction(const CheckMatrix& r,
                                  const std::vector<std::size_t>& qubits,
                                  const std::vector<int>& outcome);

// Stabilizer-generator tableau with phase tracking; supports the Clifford
// generators and computational-basis measurement.
class StabTableau {
 public:
  explicit StabTableau(std::size_t n);  // |0...0>, generators Z_1..Z_n

  std::size_t qubits() const { return n_; }
  const std::vector<PauliString>& rows() const { return rows_; }
  CheckMatrix check_matrix() const { return CheckMatrix{n_, rows_}; }

  void apply_h(std::size_t q);
  void apply_s(std::size_t q);
  void apply_x(std::size_t q);
  void apply_z(std::size_t q);
  void apply_cnot(std::size_t control, std::size_t target);

  struct MeasureResult {
    int outcome = 0;
    double probability = 1.0;  // 0.5 when random, 1 when deterministic
    bool was_random = false;
  };
  MeasureResult measure(std::size_t q, Rng& rng);
  // Throws std::invalid_argument if the requested outcome has
  // probability zero.
  MeasureResult measure_forced(std::size_t q, int bit);

 private:
  std::size_t n_;
  std::vector<PauliString> rows_;
};

// Tableau after a seeded random H/S/CNOT sequence on |0...0>.
StabTableau random_stabilizer(std::size_t n, std::size_t gate_count,
                              std::uint64_t seed);

// Replays a gate on the tableau by recognizing its matrix among the
// supported Clifford set (H, X, Z, S, CNOT both orientations); throws
// std::invalid_argument otherwise.
void apply_clifford_gate(StabTableau& t, const Gate& g);
StabTableau tableau_of(const StaticCircuit& c);

}  // namespace dqc
