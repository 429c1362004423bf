#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dqc/circuit.hpp"

namespace dqc {

// Starting point for the adaptive gates. Identity is the default: a
// trivial outcome then needs no sweep at all. The alternatives exist to
// study the sweep dynamics from other starting points.
enum class AdaptiveInit { kIdentity, kHadamard, kSeeded };

struct DecodeConfig {
  std::size_t max_sweeps = 50;
  double tol = 1e-9;  // converged once overlap >= 1 - tol
  std::size_t depth = 1;
  AdaptiveInit init = AdaptiveInit::kIdentity;
  std::uint64_t init_seed = 1;  // used by kSeeded
  // The first sweep reads each wire's correction directly: undecided
  // wires are bridged by |+><+| on the bra side so that both
  // computational components contribute, and the gate is set to the Pauli
  // with the largest environment response. Without this, identity-started
  // sweeps stall whenever the pending correction flips more than the one
  // qubit being updated: every environment is then exactly zero.
  bool align_first_sweep = true;
  Truncation trunc{};
};

// One observed measurement shot of the device side.
struct DeviceShot {
  std::vector<int> outcome;
  double probability = 0.0;
  MPS post_state;  // system wires, normalized
};

// Runs the pre-measurement circuit and Born-samples all ancillae once.
DeviceShot simulate_device(const DQCAnsatz& a, std::uint64_t seed,
                           const Truncation& trunc = {});

// Classical side of the protocol for one observed outcome.
struct DecodingSession {
  MPS post_state;
  MPS target;
  std::vector<Gate> adaptive_gates;  // wire-major within each layer
  std::vector<double> sweep_trace;   // |overlap|, entry 0 = before sweeping
  std::vector<double> update_trace;  // |overlap| after each polar update
  bool converged = false;
  double decode_seconds = 0.0;
};

DecodingSession make_session(MPS post_state, MPS target,
                             const DecodeConfig& cfg = {});

// Sweeps left to right until the overlap reaches 1 - tol or max_sweeps
// runs out. After the optional alignment sweep, every sweep replaces each
// gate with the polar-optimal unitary for its environment, which cannot
// lower the overlap; non-convergence is reported through the flag and the
// recorded trace. Environments are built from cached partial contractions
// so one sweep costs O(wires).
void decode(DecodingSession& session, const DecodeConfig& cfg = {});

// Overlap magnitude of the session's current adaptive circuit, computed
// by applying the gates and contracting; independent of decode's caches.
double session_overlap(const DecodingSession& session,
                       const Truncation& trunc = {});

// End-to-end run on the GHZ patch family: build the ansatz for n system
// qubits, sample one outcome, decode it against GHZ_n.
struct ProtocolReport {
  DecodingSession session;
  std::vector<int> outcome;
  double fidelity = 0.0;  // of the adaptively corrected state vs target
  double decode_ms = 0.0;
};

ProtocolReport run_protocol(std::size_t n, std::uint64_t seed,
                            const DecodeConfig& cfg = {});

// "outcome ...", one "sweep <i> overlap <..>" line per trace entry, then
// convergence flag, fidelity, and decode milliseconds.
std::string format_session(const ProtocolReport& report);

}  // namespace dqc
