#include "dqc/nn_decoder.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "dqc/lut_optimizer.hpp"
#include "dqc/mps.hpp"
#include "dqc/parallel.hpp"

namespace dqc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// dU/dtheta = (U(theta + pi/2) - U(theta - pi/2)) * kShiftScale for any
// half-angle rotation generator squaring to one.
constexpr double kShiftScale = 0.25 * std::numbers::sqrt2;

std::vector<double> encode(const std::vector<int>& outcome) {
  std::vector<double> x(outcome.size());
  for (std::size_t j = 0; j < outcome.size(); ++j) {
    if (outcome[j] != 0 && outcome[j] != 1)
      throw std::invalid_argument("outcome bits must be 0 or 1");
    x[j] = outcome[j] == 0 ? -1.0 : 1.0;
  }
  return x;
}

// acts[l] is the activation entering layer l; acts.back() is the output.
std::vector<std::vector<double>> forward_trace(const MLPDecoder& d,
                                               const std::vector<double>& x) {
  std::vector<std::vector<double>> acts;
  acts.reserve(d.n_layers() + 1);
  acts.push_back(x);
  for (std::size_t l = 0; l < d.n_layers(); ++l) {
    const std::size_t in = d.layer_sizes[l];
    const std::size_t out = d.layer_sizes[l + 1];
    std::vector<double> z(out);
    for (std::size_t i = 0; i < out; ++i) {
      double v = d.biases[l][i];
      for (std::size_t j = 0; j < in; ++j)
        v += d.weights[l][i * in + j] * acts.back()[j];
      z[i] = v;
    }
    if (l + 1 < d.n_layers())
      for (double& v : z) v = std::tanh(v);
    acts.push_back(std::move(z));
  }
  return acts;
}

void check_pairing(const MLPDecoder& d, const RotationLayout& layout,
                   const MPS& target) {
  validate_mlp(d);
  if (layout.n_qubits == 0 || layout.depth == 0)
    throw std::invalid_argument("rotation layout must cover at least one gate");
  if (d.output_size() != layout.param_count())
    throw std::invalid_argument(
        "network output size must match the rotation parameter count");
  if (target.size() != layout.n_qubits)
    throw ShapeError("target length must match the rotation layout");
}

void check_item(const MLPDecoder& d, const BatchItem& item,
                const RotationLayout& layout) {
  if (item.outcome.size() != d.input_size())
    throw std::invalid_argument("outcome length must match the network input");
  if (item.post.size() != layout.n_qubits)
    throw ShapeError("branch state length must match the rotation layout");
  if (!(item.p > 0.0))
    throw std::invalid_argument("batch probabilities must be positive");
}

struct ItemGrad {
  double loss = 0.0;
  std::vector<double> d_theta;  // dL_item / d(angles)
};

// Loss term and exact angle gradient for one branch.
ItemGrad item_gradient(const std::vector<double>& theta,
                       const RotationLayout& layout, const MPS& target,
                       const MPS& post, const Truncation& trunc,
                       bool want_grad) {
  const std::vector<Gate> gates = rotation_gates(layout, theta);
  const std::size_t n_gates = gates.size();

  std::vector<MPS> bra(n_gates);
  bra[n_gates - 1] = target;
  for (std::size_t k = n_gates - 1; k-- > 0;) {
    bra[k] = bra[k + 1];
    const Gate adj = adjoint_gate(gates[k + 1]);
    apply_gate_inplace(bra[k], adj.unitary, adj.sites, trunc);
  }

  ItemGrad out;
  std::vector<Complex> d_overlap;
  if (want_grad) d_overlap.assign(theta.size(), Complex{0.0, 0.0});
  Complex o{0.0, 0.0};
  MPS fwd = post;
  for (std::size_t k = 0; k < n_gates; ++k) {
    const DenseTensor env = gate_environment(bra[k], fwd, gates[k].sites);
    if (k == 0) o = contract_shared(env, gates[k].unitary).value();
    if (want_grad) {
      for (std::size_t t = 0; t < 3; ++t) {
        std::array<double, 3> th{theta[3 * k], theta[3 * k + 1],
                                 theta[3 * k + 2]};
        th[t] += std::numbers::pi / 2.0;
        const Complex up = contract_shared(env, euler_unitary(th[0], th[1],
                                                              th[2]))
                               .value();
        th[t] -= std::numbers::pi;
        const Complex dn = contract_shared(env, euler_unitary(th[0], th[1],
                                                              th[2]))
                               .value();
        d_overlap[3 * k + t] = (up - dn) * kShiftScale;
      }
    }
    apply_gate_inplace(fwd, gates[k].unitary, gates[k].sites, trunc);
  }
  out.loss = 1.0 - std::norm(o);
  if (want_grad) {
    out.d_theta.assign(theta.size(), 0.0);
    for (std::size_t j = 0; j < theta.size(); ++j)
      out.d_theta[j] = -2.0 * (std::conj(o) * d_overlap[j]).real();
  }
  return out;
}

}  // namespace

MLPDecoder zero_mlp(std::vector<std::size_t> layer_sizes) {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("network needs an input and an output layer");
  MLPDecoder d;
  d.layer_sizes = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < d.layer_sizes.size(); ++l) {
    if (d.layer_sizes[l] == 0 || d.layer_sizes[l + 1] == 0)
      throw std::invalid_argument("layer sizes must be positive");
    d.weights.emplace_back(d.layer_sizes[l] * d.layer_sizes[l + 1], 0.0);
    d.biases.emplace_back(d.layer_sizes[l + 1], 0.0);
  }
  return d;
}

MLPDecoder random_mlp(std::vector<std::size_t> layer_sizes, Rng& rng) {
  MLPDecoder d = zero_mlp(std::move(layer_sizes));
  // Biases are drawn from the output layer inward so that equal seeds give
  // equal initial output biases regardless of hidden widths. Output biases
  // span the full angle range: near-zero angles start every rotation at
  // the identity, where overlaps that need multi-qubit flips are flat to
  // high order and gradient descent stalls.
  for (std::size_t l = d.n_layers(); l-- > 0;) {
    const bool last = l + 1 == d.n_layers();
    const double scale = 1.0 / std::sqrt(double(d.layer_sizes[l]));
    for (double& b : d.biases[l])
      b = last ? rng.uniform(-std::numbers::pi, std::numbers::pi)
               : rng.uniform(-1.0, 1.0) * scale;
  }
  // The readout weights stay zero, so the initial prediction is exactly
  // the output biases: networks of different widths built from equal
  // seeds start from the same angles and the same loss, and width
  // comparisons measure training, not the draw of the hidden layers.
  for (std::size_t l = 0; l + 1 < d.n_layers(); ++l) {
    const double scale = 1.0 / std::sqrt(double(d.layer_sizes[l]));
    for (double& w : d.weights[l]) w = rng.uniform(-1.0, 1.0) * scale;
  }
  return d;
}

void validate_mlp(const MLPDecoder& d) {
  if (d.layer_sizes.size() < 2)
    throw std::invalid_argument("network needs an input and an output layer");
  if (d.weights.size() != d.layer_sizes.size() - 1 ||
      d.biases.size() != d.weights.size())
    throw std::invalid_argument("one weight and bias tensor per layer");
  for (std::size_t l = 0; l < d.n_layers(); ++l) {
    if (d.layer_sizes[l] == 0)
      throw std::invalid_argument("layer sizes must be positive");
    if (d.weights[l].size() != d.layer_sizes[l] * d.layer_sizes[l + 1] ||
        d.biases[l].size() != d.layer_sizes[l + 1])
      throw std::invalid_argument("weight shape disagrees with layer sizes");
    for (double v : d.weights[l])
      if (!std::isfinite(v))
        throw std::invalid_argument("network weights must be finite");
    for (double v : d.biases[l])
      if (!std::isfinite(v))
        throw std::invalid_argument("network weights must be finite");
  }
  if (d.layer_sizes.back() == 0)
    throw std::invalid_argument("layer sizes must be positive");
}

std::vector<double> forward(const MLPDecoder& d,
                            const std::vector<int>& outcome) {
  validate_mlp(d);
  if (outcome.size() != d.input_size())
    throw std::invalid_argument("outcome length must match the network input");
  return forward_trace(d, encode(outcome)).back();
}

std::vector<Gate> rotation_gates(const RotationLayout& layout,
                                 const std::vector<double>& angles) {
  if (angles.size() != layout.param_count())
    throw std::invalid_argument(
        "angle count must match the rotation parameter count");
  std::vector<Gate> gates;
  gates.reserve(layout.n_qubits * layout.depth);
  std::size_t at = 0;
  for (std::size_t l = 0; l < layout.depth; ++l)
    for (std::size_t q = 0; q < layout.n_qubits; ++q, at += 3)
      gates.push_back(make_gate(
          euler_unitary(angles[at], angles[at + 1], angles[at + 2]), {q},
          "rot"));
  return gates;
}

OutcomeBatch sample_batch(const DQCAnsatz& a, std::size_t batch_size, Rng& rng,
                          const Truncation& trunc) {
  if (batch_size == 0)
    throw std::invalid_argument("batch size must be positive");
  const MPS pre = run_pre_measurement(a, trunc);
  const auto& measured = a.measured_wires();

  OutcomeBatch batch;
  batch.reserve(batch_size);
  std::map<std::uint64_t, std::size_t> seen;  // outcome -> first index
  for (std::size_t i = 0; i < batch_size; ++i) {
    if (measured.empty()) {
      batch.push_back({{}, 1.0, pre});
      continue;
    }
    const SampleResult sr = sample_outcome(pre, measured, rng);
    const auto it = seen.find(outcome_key(sr.outcome));
    if (it != seen.end()) {
      batch.push_back(batch[it->second]);
      continue;
    }
    ProjectionResult pr = project(pre, measured, sr.outcome);
    seen.emplace(outcome_key(sr.outcome), batch.size());
    batch.push_back({sr.outcome, pr.probability, std::move(pr.state)});
  }
  return batch;
}

OutcomeBatch exhaustive_batch(const DQCAnsatz& a, const Truncation& trunc) {
  const auto branches = enumerate_outcomes(a, a.r(), trunc);
  OutcomeBatch batch;
  for (const auto& b : branches) {
    if (b.degenerate || b.probability < kProbabilityFloor) continue;
    batch.push_back({b.outcome, b.probability, b.state});
  }
  return batch;
}

double batch_loss(const MLPDecoder& d, const RotationLayout& layout,
                  const MPS& target, const OutcomeBatch& batch,
                  const Truncation& trunc) {
  check_pairing(d, layout, target);
  if (batch.empty()) throw std::invalid_argument("batch must be nonempty");
  for (const auto& item : batch) check_item(d, item, layout);

  std::vector<double> losses(batch.size(), 0.0);
  parallel_for(0, batch.size(), [&](std::size_t i) {
    const std::vector<double> theta =
        forward_trace(d, encode(batch[i].outcome)).back();
    losses[i] =
        item_gradient(theta, layout, target, batch[i].post, trunc, false)
            .loss;
  });
  double sum = 0.0;
  for (double v : losses) sum += v;
  return sum / double(batch.size());
}

double exhaustive_infidelity(const MLPDecoder& d, const RotationLayout& layout,
                             const MPS& target, const OutcomeBatch& batch,
                             const Truncation& trunc) {
  check_pairing(d, layout, target);
  if (batch.empty()) throw std::invalid_argument("batch must be nonempty");
  for (const auto& item : batch) check_item(d, item, layout);

  std::vector<double> terms(batch.size(), 0.0);
  parallel_for(0, batch.size(), [&](std::size_t i) {
    const std::vector<double> theta =
        forward_trace(d, encode(batch[i].outcome)).back();
    terms[i] =
        batch[i].p *
        item_gradient(theta, layout, target, batch[i].post, trunc, false)
            .loss;
  });
  double sum = 0.0;
  for (double v : terms) sum += v;
  return sum;
}

MLPGradients backprop(const MLPDecoder& d, const RotationLayout& layout,
                      const MPS& target, const OutcomeBatch& batch,
                      const Truncation& trunc) {
  check_pairing(d, layout, target);
  if (batch.empty()) throw std::invalid_argument("batch must be nonempty");
  for (const auto& item : batch) check_item(d, item, layout);

  const std::size_t n_layers = d.n_layers();
  std::vector<MLPGradients> per(batch.size());
  parallel_for(0, batch.size(), [&](std::size_t i) {
    const auto acts = forward_trace(d, encode(batch[i].outcome));
    const ItemGrad ig = item_gradient(acts.back(), layout, target,
                                      batch[i].post, trunc, true);

    MLPGradients g;
    g.weights.resize(n_layers);
    g.biases.resize(n_layers);
    std::vector<double> delta = ig.d_theta;  // output layer is linear
    for (std::size_t l = n_layers; l-- > 0;) {
      const std::size_t in = d.layer_sizes[l];
      const std::size_t out = d.layer_sizes[l + 1];
      g.weights[l].assign(in * out, 0.0);
      g.biases[l].assign(out, 0.0);
      for (std::size_t r = 0; r < out; ++r) {
        g.biases[l][r] = delta[r];
        for (std::size_t c = 0; c < in; ++c)
          g.weights[l][r * in + c] = delta[r] * acts[l][c];
      }
      if (l == 0) break;
      std::vector<double> prev(in, 0.0);
      for (std::size_t c = 0; c < in; ++c) {
        double v = 0.0;
        for (std::size_t r = 0; r < out; ++r)
          v += d.weights[l][r * in + c] * delta[r];
        prev[c] = v * (1.0 - acts[l][c] * acts[l][c]);  // tanh'
      }
      delta = std::move(prev);
    }
    per[i] = std::move(g);
  });

  MLPGradients total;
  total.weights.resize(n_layers);
  total.biases.resize(n_layers);
  for (std::size_t l = 0; l < n_layers; ++l) {
    total.weights[l].assign(d.weights[l].size(), 0.0);
    total.biases[l].assign(d.biases[l].size(), 0.0);
  }
  const double inv = 1.0 / double(batch.size());
  for (const auto& g : per)
    for (std::size_t l = 0; l < n_layers; ++l) {
      for (std::size_t j = 0; j < g.weights[l].size(); ++j)
        total.weights[l][j] += inv * g.weights[l][j];
      for (std::size_t j = 0; j < g.biases[l].size(); ++j)
        total.biases[l][j] += inv * g.biases[l][j];
    }
  return total;
}

NnTrainReport train_decoder(MLPDecoder d, const DQCAnsatz& a,
                            const RotationLayout& layout, const MPS& target,
                            const NnTrainConfig& cfg, Rng& rng) {
  check_pairing(d, layout, target);
  if (d.input_size() != a.r())
    throw std::invalid_argument("network input size must match the ancilla count");
  if (layout.n_qubits != a.n_system)
    throw ShapeError("rotation layout must cover the system wires");
  if (cfg.epochs == 0) throw std::invalid_argument("epochs must be positive");

  NnTrainReport rep;
  rep.config = cfg;
  const bool eval = a.r() <= cfg.eval_cap;
  const OutcomeBatch all = eval ? exhaustive_batch(a, cfg.trunc) : OutcomeBatch{};

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    const OutcomeBatch batch = sample_batch(a, cfg.batch_size, rng, cfg.trunc);
    NnEpochRecord rec;
    rec.batch_loss = batch_loss(d, layout, target, batch, cfg.trunc);
    const MLPGradients g = backprop(d, layout, target, batch, cfg.trunc);
    for (std::size_t l = 0; l < d.n_layers(); ++l) {
      for (std::size_t j = 0; j < d.weights[l].size(); ++j)
        d.weights[l][j] -= cfg.learning_rate * g.weights[l][j];
      for (std::size_t j = 0; j < d.biases[l].size(); ++j)
        d.biases[l][j] -= cfg.learning_rate * g.biases[l][j];
    }
    if (eval)
      rec.eval_infid = exhaustive_infidelity(d, layout, target, all, cfg.trunc);
    rec.seconds = seconds_since(t0);
    if (!std::isfinite(rec.batch_loss) || rec.batch_loss < -1e-9 ||
        rec.batch_loss > 1.0 + 1e-9 ||
        (eval && !std::isfinite(rec.eval_infid)))
      rep.diverged = true;
    rep.epochs.push_back(rec);
  }
  rep.decoder = std::move(d);
  return rep;
}

std::string format_nn_trace(const NnTrainReport& report) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < report.epochs.size(); ++i) {
    const auto& e = report.epochs[i];
    os << "epoch " << i << " loss " << e.batch_loss << " eval " << e.eval_infid
       << " seconds " << e.seconds << "\n";
  }
  os << "diverged " << (report.diverged ? 1 : 0) << "\n";
  return os.str();
}

void write_mlp(std::ostream& os, const MLPDecoder& d) {
  validate_mlp(d);
  os.precision(17);
  os << "mlp";
  for (std::size_t s : d.layer_sizes) os << ' ' << s;
  os << '\n';
  for (std::size_t l = 0; l < d.n_layers(); ++l) {
    os << 'W' << l;
    for (double v : d.weights[l]) os << ' ' << v;
    os << '\n' << 'b' << l;
    for (double v : d.biases[l]) os << ' ' << v;
    os << '\n';
  }
}

MLPDecoder read_mlp(std::istream& is) {
  std::string magic;
  is >> magic;
  if (magic != "mlp")
    throw std::invalid_argument("checkpoint does not start with mlp header");
  std::string line;
  std::getline(is, line);
  std::istringstream header(line);
  std::vector<std::size_t> sizes;
  std::size_t s = 0;
  while (header >> s) sizes.push_back(s);
  MLPDecoder d = zero_mlp(std::move(sizes));
  for (std::size_t l = 0; l < d.n_layers(); ++l) {
    std::string tagw, tagb;
    is >> tagw;
    if (tagw != "W" + std::to_string(l))
      throw std::invalid_argument("checkpoint weight tag out of order");
    for (double& v : d.weights[l]) is >> v;
    is >> tagb;
    if (tagb != "b" + std::to_string(l))
      throw std::invalid_argument("checkpoint bias tag out of order");
    for (double& v : d.biases[l]) is >> v;
  }
  if (!is) throw std::invalid_argument("checkpoint truncated");
  validate_mlp(d);
  return d;
}

}  // namespace dqc
