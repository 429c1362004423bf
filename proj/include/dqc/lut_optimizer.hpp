#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dqc/circuit.hpp"

namespace dqc {

// Adaptive-gate table: one ordered gate list per measurement outcome, acting
// on the data wires (indices 0..n_wires-1 after the measured wires are
// removed). Outcomes missing from the table act as identity.
struct LookupTableDecoder {
  std::size_t n_wires = 0;
  std::map<std::uint64_t, std::vector<Gate>> table;
};

// Packs an outcome bit vector into a table key, first bit most significant.
// Matches the branch ordering of enumerate_outcomes.
std::uint64_t outcome_key(const std::vector<int>& outcome);

// Identity-initialized decoder with the same brickwork layout (layer l
// starts at wire l % 2) for all 2^r outcomes. A chain of one wire gets one
// single-site gate per layer instead.
LookupTableDecoder make_lut_decoder(std::size_t n_wires, std::size_t r,
                                    std::size_t depth = 1);

void validate_decoder(const LookupTableDecoder& d);

// Applies the outcome's gate list to a post-measurement branch state.
MPS apply_decoder(const LookupTableDecoder& d, const std::vector<int>& outcome,
                  const MPS& branch, const Truncation& trunc = {});

struct BranchOverlap {
  std::vector<int> outcome;
  double p = 0.0;
  Complex o{0.0, 0.0};
  bool degenerate = false;  // probability under the floor; o is pinned to 0
};

// Overlap of every decoded branch with the target: o = <target|V|post>.
std::vector<BranchOverlap> branch_overlaps(const DQCAnsatz& a,
                                           const LookupTableDecoder& d,
                                           const MPS& target,
                                           const Truncation& trunc = {});

// 1 - |sum_m p o|: phase-sensitive training cost.
double cost_pre(const std::vector<BranchOverlap>& overlaps);
// 1 - sum_m p |o|^2: one minus the prepared-state fidelity.
double infidelity(const std::vector<BranchOverlap>& overlaps);
// 1 - sum_m p |o|: triangle-inequality floor of cost_pre.
double overlap_magnitude_bound(const std::vector<BranchOverlap>& overlaps);

// Tr(rho^2) of the measurement-averaged output, decoder applied. Target
// independent; exhaustive over outcomes.
double purity(const DQCAnsatz& a, const LookupTableDecoder& d,
              const Truncation& trunc = {});

// Environment of pre-measurement gate j (flat index, layer-major order):
// the decoded-branch overlap networks contracted around U_j, each branch
// weighted by sqrt(p). With probabilities held fixed at their current
// values, sum_m p o_m = contract_shared(result, U_j).
DenseTensor environment_pre(const DQCAnsatz& a, const LookupTableDecoder& d,
                            const MPS& target, std::size_t gate_index,
                            const Truncation& trunc = {});

// Environment of adaptive gate k for the given outcome: exact, so
// o_m = contract_shared(result, V_k) with no frozen-probability caveat.
DenseTensor environment_post(const DQCAnsatz& a, const LookupTableDecoder& d,
                             const MPS& target, const std::vector<int>& outcome,
                             std::size_t gate_index,
                             const Truncation& trunc = {});

struct TrainConfig {
  double tol = 1e-9;            // sweep-to-sweep change of C_pre
  std::size_t max_sweeps = 200;
  Truncation trunc{};
  // Record purity after each pre-measurement gate update of the first
  // sweep (the saturation trace).
  bool trace_gate_purity = false;
};

struct SweepRecord {
  double c_pre = 0.0;
  double infid = 0.0;
  double purity = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  // records[0] evaluates the initial circuit; one record per sweep after.
  std::vector<SweepRecord> records;
  StaticCircuit pre_circuit{};
  LookupTableDecoder decoder{};
  bool converged = false;
  std::vector<double> gate_purity_trace;  // filled when trace_gate_purity
  TrainConfig config{};
};

// Alternating optimization: each sweep polishes every pre-measurement gate
// through its probability-weighted environment, then every adaptive gate of
// every viable branch through its exact environment. Probabilities are
// refreshed after each pre-gate update. Stops when the sweep-to-sweep
// change of C_pre drops below tol; non-convergence is flagged, not thrown.
TrainReport sweep_train(DQCAnsatz a, LookupTableDecoder d, const MPS& target,
                        const TrainConfig& config = {});

// One record per sweep: "sweep <i> c_pre <..> infidelity <..> purity <..>
// seconds <..>". Parsed back by the experiment tooling.
std::string format_report(const TrainReport& report);

// Angle parameterization of a full ansatz: 15 entangling-composition angles
// per two-site gate, 3 Euler angles per single-site gate. Post angles are
// keyed like the decoder table.
struct DqcAngles {
  std::vector<std::array<double, 15>> pre;
  std::map<std::uint64_t, std::vector<std::vector<double>>> post;
};

DqcAngles random_angles(const DQCAnsatz& a, const LookupTableDecoder& layout,
                        Rng& rng);

// Rebuild gate matrices from angles, keeping the layouts of the prototypes.
DQCAnsatz ansatz_with_angles(const DQCAnsatz& a,
                             const std::vector<std::array<double, 15>>& pre);
LookupTableDecoder decoder_with_angles(
    const LookupTableDecoder& layout,
    const std::map<std::uint64_t, std::vector<std::vector<double>>>& post);

struct GdConfig {
  double learning_rate = 0.1;
  std::size_t steps = 100;
  Truncation trunc{};
};

struct GdReport {
  // infidelity_series[0] evaluates the initial angles; one entry per step.
  std::vector<double> infidelity_series;
  DqcAngles final_angles;
  DQCAnsatz ansatz{};
  LookupTableDecoder decoder{};
  bool diverged = false;  // ended above the starting cost, or cost left [0,1]
};

// Gradient descent on the same ansatz, minimizing 1 - sum_m |A_m|^2 over
// the joint angle vector (A_m the unnormalized decoded-branch amplitude, so
// branch probabilities need no separate treatment). Gradients come from
// exact parameter shifts evaluated against cached gate environments.
GdReport gd_baseline(const DQCAnsatz& a, const LookupTableDecoder& layout,
                     const MPS& target, const DqcAngles& init,
                     const GdConfig& config = {});

// Cost and gradient at one point; exposed for finite-difference checks.
double gd_cost(const DQCAnsatz& a, const LookupTableDecoder& layout,
               const MPS& target, const DqcAngles& angles,
               const Truncation& trunc = {});
DqcAngles gd_gradient(const DQCAnsatz& a, const LookupTableDecoder& layout,
                      const MPS& target, const DqcAngles& angles,
                      const Truncation& trunc = {});

struct GreedyConfig {
  TrainConfig train{};
  std::size_t seeds = 3;          // random restarts per candidate placement
  std::uint64_t base_seed = 1;
  std::size_t depth_post = 1;
};

struct GreedyResult {
  DQCAnsatz ansatz{};
  LookupTableDecoder decoder{};
  // infid_trace[t] is the best trained infidelity with t ancillae placed;
  // entry 0 is the static circuit (no adaptive gates).
  std::vector<double> infid_trace;
  // chosen_slots[t-1] is where ancilla t went (before data qubit `slot`).
  std::vector<std::size_t> chosen_slots;
};

// Places ancillae one at a time, trying every slot 0..n and keeping the one
// whose trained infidelity is lowest. The candidate set always contains the
// previous optimum extended by an idle end-of-chain ancilla, so the trace
// never increases.
GreedyResult greedy_ancilla_search(const MPS& target, std::size_t r_max,
                                   std::size_t depth,
                                   const GreedyConfig& config = {});

// Wire indices of ancillae placed at the given data slots (slot s inserts
// immediately before data qubit s; equal slots stack in order).
std::vector<std::size_t> slots_to_wires(std::vector<std::size_t> slots);

}  // namespace dqc
