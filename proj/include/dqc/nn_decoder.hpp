#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "dqc/circuit.hpp"

namespace dqc {

// Feedforward network from measurement bits to adaptive-gate angles.
// Hidden layers apply tanh, the output layer is linear. Inputs are
// encoded as +-1 per bit so a fresh network sees symmetric activations.
struct MLPDecoder {
  std::vector<std::size_t> layer_sizes;       // [r, hidden..., n_out]
  std::vector<std::vector<double>> weights;   // per layer, row-major out x in
  std::vector<std::vector<double>> biases;    // per layer, length out

  std::size_t n_layers() const { return weights.size(); }
  std::size_t input_size() const { return layer_sizes.front(); }
  std::size_t output_size() const { return layer_sizes.back(); }
};

// All weights and biases zero: every outcome maps to the zero angle
// vector, i.e. identity adaptive gates.
MLPDecoder zero_mlp(std::vector<std::size_t> layer_sizes);

// Uniform(-1, 1) / sqrt(fan_in) entries, seeded through rng.
MLPDecoder random_mlp(std::vector<std::size_t> layer_sizes, Rng& rng);

void validate_mlp(const MLPDecoder& d);

// Deterministic forward pass; outcome bits become +-1 inputs.
std::vector<double> forward(const MLPDecoder& d,
                            const std::vector<int>& outcome);

// Adaptive circuit family the network parameterizes: `depth` layers of one
// arbitrary single-qubit rotation (3 Euler angles) per unmeasured qubit.
// Angles are consumed qubit-major inside each layer.
struct RotationLayout {
  std::size_t n_qubits = 0;
  std::size_t depth = 1;

  std::size_t param_count() const { return 3 * n_qubits * depth; }
};

std::vector<Gate> rotation_gates(const RotationLayout& layout,
                                 const std::vector<double>& angles);

// One Born-sampled (or enumerated) measurement branch.
struct BatchItem {
  std::vector<int> outcome;
  double p = 0.0;  // joint Born probability, always > 0
  MPS post;        // normalized post-measurement state on the data wires
};
using OutcomeBatch = std::vector<BatchItem>;

// Draws batch_size outcomes with multiplicity from the Born distribution.
OutcomeBatch sample_batch(const DQCAnsatz& a, std::size_t batch_size,
                          Rng& rng, const Truncation& trunc = {});

// Every viable outcome exactly once, with its exact probability.
OutcomeBatch exhaustive_batch(const DQCAnsatz& a,
                              const Truncation& trunc = {});

// Batch mean of 1 - |<target| R(f(m)) |post_m>|^2. Sampling multiplicity
// supplies the probability weighting, so items enter unweighted.
double batch_loss(const MLPDecoder& d, const RotationLayout& layout,
                  const MPS& target, const OutcomeBatch& batch,
                  const Truncation& trunc = {});

// Probability-weighted infidelity over an exhaustive batch:
// sum_m p(m) (1 - |o_m|^2), the infidelity of the prepared mixture.
double exhaustive_infidelity(const MLPDecoder& d, const RotationLayout& layout,
                             const MPS& target, const OutcomeBatch& batch,
                             const Truncation& trunc = {});

struct MLPGradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

// Exact gradient of batch_loss: parameter-shift derivatives through each
// rotation angle, chained with reverse-mode derivatives of the network.
MLPGradients backprop(const MLPDecoder& d, const RotationLayout& layout,
                      const MPS& target, const OutcomeBatch& batch,
                      const Truncation& trunc = {});

struct NnTrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  std::size_t epochs = 200;
  // Exhaustive evaluation runs when r is at most this; beyond it the
  // eval field stays at -1.
  std::size_t eval_cap = 12;
  Truncation trunc{};
};

struct NnEpochRecord {
  double batch_loss = 0.0;   // loss of the epoch's fresh batch, pre-update
  double eval_infid = -1.0;  // exhaustive weighted infidelity, post-update
  double seconds = 0.0;
};

struct NnTrainReport {
  std::vector<NnEpochRecord> epochs;
  MLPDecoder decoder;
  bool diverged = false;  // non-finite loss, or loss outside [0, 1]
  NnTrainConfig config{};
};

// Plain SGD: each epoch draws one fresh batch, takes one gradient step.
// The rng drives only batch sampling, so runs with different decoders but
// equal seeds see identical batch sequences.
NnTrainReport train_decoder(MLPDecoder d, const DQCAnsatz& a,
                            const RotationLayout& layout, const MPS& target,
                            const NnTrainConfig& config, Rng& rng);

// "epoch <i> loss <..> eval <..> seconds <..>" per record, then a
// "diverged <0|1>" line.
std::string format_nn_trace(const NnTrainReport& report);

// Checkpoint: "mlp" magic + layer sizes on the first line, then one line
// per tensor with full-precision doubles. Round-trips bitwise.
void write_mlp(std::ostream& os, const MLPDecoder& d);
MLPDecoder read_mlp(std::istream& is);

}  // namespace dqc
