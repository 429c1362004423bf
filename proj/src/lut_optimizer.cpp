#include "dqc/lut_optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dqc/parallel.hpp"

namespace dqc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<int> bits_of(std::uint64_t m, std::size_t r) {
  std::vector<int> bits(r);
  for (std::size_t j = 0; j < r; ++j)
    bits[j] = static_cast<int>((m >> (r - 1 - j)) & 1u);
  return bits;
}

const std::vector<Gate>& decoder_gates(const LookupTableDecoder& d,
                                       const std::vector<int>& outcome) {
  static const std::vector<Gate> kNoGates;
  const auto it = d.table.find(outcome_key(outcome));
  return it == d.table.end() ? kNoGates : it->second;
}

double unitary_defect(const DenseTensor& u, std::size_t dim) {
  double worst = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) {
      Complex s{0.0, 0.0};
      for (std::size_t k = 0; k < dim; ++k)
        s += u[i * dim + k] * std::conj(u[j * dim + k]);
      s -= i == j ? Complex{1.0, 0.0} : Complex{0.0, 0.0};
      worst = std::max(worst, std::abs(s));
    }
  }
  return worst;
}

// The bra side of a branch's amplitude network: decoder adjoint applied to
// the target, then the outcome bits spliced back in at the measured wires.
// Its overlap with the pre-measurement state is sqrt(p) * o.
MPS branch_bra(const DQCAnsatz& a, const LookupTableDecoder& d,
               const MPS& target, const std::vector<int>& outcome,
               const Truncation& trunc) {
  MPS w = target;
  const std::vector<Gate>& gates = decoder_gates(d, outcome);
  for (std::size_t k = gates.size(); k-- > 0;) {
    const Gate adj = adjoint_gate(gates[k]);
    apply_gate_inplace(w, adj.unitary, adj.sites, trunc);
  }
  return with_inserted_bits(w, a.measured_wires(), outcome);
}

void apply_layer(MPS& s, const std::vector<Gate>& layer,
                 const Truncation& trunc) {
  for (const Gate& g : layer) apply_gate_inplace(s, g.unitary, g.sites, trunc);
}

void apply_layer_adjoint(MPS& s, const std::vector<Gate>& layer,
                         const Truncation& trunc) {
  for (const Gate& g : layer) {
    const Gate adj = adjoint_gate(g);
    apply_gate_inplace(s, adj.unitary, adj.sites, trunc);
  }
}

// bras[m][l] is branch m's bra state pulled back to the boundary before
// layer l, so it pairs with the ket that layer acts on.
std::vector<std::vector<MPS>> layer_bras(const DQCAnsatz& a,
                                         const LookupTableDecoder& d,
                                         const MPS& target,
                                         const Truncation& trunc) {
  const std::size_t r = a.r();
  const std::size_t n_layers = a.pre_circuit.layers.size();
  std::vector<std::vector<MPS>> bras(std::size_t{1} << r);
  for (std::size_t m = 0; m < bras.size(); ++m) {
    std::vector<MPS> chain(n_layers + 1);
    chain[n_layers] = branch_bra(a, d, target, bits_of(m, r), trunc);
    for (std::size_t l = n_layers; l-- > 0;) {
      chain[l] = chain[l + 1];
      apply_layer_adjoint(chain[l], a.pre_circuit.layers[l], trunc);
    }
    bras[m] = std::move(chain);
  }
  return bras;
}

// Environment of layer[pos] between one branch bra and the state entering
// the layer, with the layer's other (disjoint) gates absorbed into the ket.
DenseTensor pre_gate_env_for_branch(const MPS& bra, const MPS& front,
                                    const std::vector<Gate>& layer,
                                    std::size_t pos, const Truncation& trunc) {
  MPS others = front;
  for (std::size_t g = 0; g < layer.size(); ++g)
    if (g != pos)
      apply_gate_inplace(others, layer[g].unitary, layer[g].sites, trunc);
  return gate_environment(bra, others, layer[pos].sites);
}

std::vector<OutcomeBranch> branches_of(const MPS& full,
                                       const std::vector<std::size_t>& measured,
                                       std::size_t r) {
  std::vector<OutcomeBranch> branches;
  branches.reserve(std::size_t{1} << r);
  if (r == 0) {
    branches.push_back(OutcomeBranch{{}, 1.0, full, false});
    return branches;
  }
  for (std::size_t m = 0; m < (std::size_t{1} << r); ++m) {
    std::vector<int> outcome = bits_of(m, r);
    ProjectionResult pr = project(full, measured, outcome);
    branches.push_back(OutcomeBranch{std::move(outcome), pr.probability,
                                     std::move(pr.state), pr.degenerate});
  }
  return branches;
}

bool viable(const OutcomeBranch& b) {
  return !b.degenerate && b.probability >= kProbabilityFloor;
}

std::vector<BranchOverlap> overlaps_impl(
    const std::vector<OutcomeBranch>& branches, const LookupTableDecoder& d,
    const MPS& target, const Truncation& trunc) {
  std::vector<BranchOverlap> out;
  out.reserve(branches.size());
  for (const OutcomeBranch& b : branches) {
    BranchOverlap bo;
    bo.outcome = b.outcome;
    bo.p = b.probability;
    bo.degenerate = !viable(b);
    if (!bo.degenerate)
      bo.o = overlap(target, apply_decoder(d, b.outcome, b.state, trunc));
    out.push_back(std::move(bo));
  }
  return out;
}

double purity_impl(const std::vector<OutcomeBranch>& branches,
                   const LookupTableDecoder& d, const Truncation& trunc) {
  std::vector<double> ps;
  std::vector<MPS> phis;
  for (const OutcomeBranch& b : branches) {
    if (!viable(b)) continue;
    ps.push_back(b.probability);
    phis.push_back(apply_decoder(d, b.outcome, b.state, trunc));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i)
    for (std::size_t j = 0; j < ps.size(); ++j)
      sum += ps[i] * ps[j] * std::norm(overlap(phis[i], phis[j]));
  return sum;
}

struct FlatGate {
  std::size_t layer;
  std::size_t pos;
};

std::vector<FlatGate> flat_pre_order(const StaticCircuit& c) {
  std::vector<FlatGate> order;
  for (std::size_t l = 0; l < c.layers.size(); ++l)
    for (std::size_t g = 0; g < c.layers[l].size(); ++g)
      order.push_back(FlatGate{l, g});
  return order;
}

}  // namespace

std::uint64_t outcome_key(const std::vector<int>& outcome) {
  if (outcome.size() > 63)
    throw std::invalid_argument("outcome keys support at most 63 bits");
  std::uint64_t key = 0;
  for (std::size_t j = 0; j < outcome.size(); ++j) {
    if (outcome[j] != 0 && outcome[j] != 1)
      throw std::invalid_argument("outcome bits must be 0 or 1");
    key |= std::uint64_t(outcome[j]) << (outcome.size() - 1 - j);
  }
  return key;
}

LookupTableDecoder make_lut_decoder(std::size_t n_wires, std::size_t r,
                                    std::size_t depth) {
  if (n_wires == 0) throw std::invalid_argument("decoder needs data wires");
  if (r > 20)
    throw std::invalid_argument(
        "exhaustive decoder tables stop at 20 measured wires");
  std::vector<Gate> layout;
  for (std::size_t l = 0; l < depth; ++l) {
    if (n_wires == 1) {
      DenseTensor id({2, 2}, {"o", "i"});
      id.at({0, 0}) = id.at({1, 1}) = Complex{1.0, 0.0};
      layout.push_back(make_gate(std::move(id), {0},
                                 "v" + std::to_string(l) + "_0"));
      continue;
    }
    for (std::size_t q = l % 2; q + 1 < n_wires; q += 2) {
      DenseTensor id({4, 4}, {"o", "i"});
      for (std::size_t k = 0; k < 4; ++k) id.at({k, k}) = Complex{1.0, 0.0};
      layout.push_back(make_gate(std::move(id), {q, q + 1},
                                 "v" + std::to_string(l) + "_" +
                                     std::to_string(q)));
    }
  }
  LookupTableDecoder d;
  d.n_wires = n_wires;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << r); ++m)
    d.table.emplace(m, layout);
  return d;
}

void validate_decoder(const LookupTableDecoder& d) {
  if (d.n_wires == 0) throw std::invalid_argument("decoder needs data wires");
  for (const auto& [key, gates] : d.table) {
    (void)key;
    for (const Gate& g : gates) {
      if (g.sites.empty() || g.sites.size() > 2)
        throw std::invalid_argument("decoder gates act on one or two wires");
      if (g.sites.back() >= d.n_wires)
        throw std::invalid_argument("decoder gate wire out of range");
      if (g.sites.size() == 2 && g.sites[1] != g.sites[0] + 1)
        throw std::invalid_argument("decoder gates act on adjacent wires");
      const std::size_t dim = g.sites.size() == 1 ? 2 : 4;
      if (g.unitary.size() != dim * dim ||
          unitary_defect(g.unitary, dim) > 1e-10)
        throw std::invalid_argument("decoder gate is not unitary");
    }
  }
}

MPS apply_decoder(const LookupTableDecoder& d, const std::vector<int>& outcome,
                  const MPS& branch, const Truncation& trunc) {
  if (branch.size() != d.n_wires)
    throw ShapeError("decoder and branch state disagree on wire count");
  MPS out = branch;
  for (const Gate& g : decoder_gates(d, outcome))
    apply_gate_inplace(out, g.unitary, g.sites, trunc);
  return out;
}

std::vector<BranchOverlap> branch_overlaps(const DQCAnsatz& a,
                                           const LookupTableDecoder& d,
                                           const MPS& target,
                                           const Truncation& trunc) {
  if (target.size() != a.n_system)
    throw ShapeError("target length must match the system size");
  if (d.n_wires != a.n_system)
    throw ShapeError("decoder width must match the system size");
  const MPS full = run_pre_measurement(a, trunc);
  return overlaps_impl(branches_of(full, a.measured_wires(), a.r()), d, target,
                       trunc);
}

double cost_pre(const std::vector<BranchOverlap>& overlaps) {
  Complex sum{0.0, 0.0};
  for (const BranchOverlap& b : overlaps) sum += b.p * b.o;
  return 1.0 - std::abs(sum);
}

double infidelity(const std::vector<BranchOverlap>& overlaps) {
  double sum = 0.0;
  for (const BranchOverlap& b : overlaps) sum += b.p * std::norm(b.o);
  return 1.0 - sum;
}

double overlap_magnitude_bound(const std::vector<BranchOverlap>& overlaps) {
  double sum = 0.0;
  for (const BranchOverlap& b : overlaps) sum += b.p * std::abs(b.o);
  return 1.0 - sum;
}

double purity(const DQCAnsatz& a, const LookupTableDecoder& d,
              const Truncation& trunc) {
  if (d.n_wires != a.n_system)
    throw ShapeError("decoder width must match the system size");
  const MPS full = run_pre_measurement(a, trunc);
  return purity_impl(branches_of(full, a.measured_wires(), a.r()), d, trunc);
}

DenseTensor environment_pre(const DQCAnsatz& a, const LookupTableDecoder& d,
                            const MPS& target, std::size_t gate_index,
                            const Truncation& trunc) {
  const std::vector<FlatGate> order = flat_pre_order(a.pre_circuit);
  if (gate_index >= order.size())
    throw std::invalid_argument("pre-measurement gate index out of range");
  const auto [l, pos] = order[gate_index];
  const std::vector<Gate>& layer = a.pre_circuit.layers[l];

  const MPS full = run_pre_measurement(a, trunc);
  const auto branches = branches_of(full, a.measured_wires(), a.r());
  const auto bras = layer_bras(a, d, target, trunc);

  MPS front = MPS::all_zero(a.n_wires());
  for (std::size_t l2 = 0; l2 < l; ++l2)
    apply_layer(front, a.pre_circuit.layers[l2], trunc);

  const std::size_t dim = layer[pos].sites.size() == 1 ? 2 : 4;
  DenseTensor env({dim, dim}, {"o", "i"});
  for (std::size_t m = 0; m < branches.size(); ++m) {
    if (!viable(branches[m])) continue;
    DenseTensor e =
        pre_gate_env_for_branch(bras[m][l + 1], front, layer, pos, trunc);
    e *= Complex{std::sqrt(branches[m].probability), 0.0};
    env += e;
  }
  return env;
}

DenseTensor environment_post(const DQCAnsatz& a, const LookupTableDecoder& d,
                             const MPS& target, const std::vector<int>& outcome,
                             std::size_t gate_index, const Truncation& trunc) {
  if (outcome.size() != a.r())
    throw std::invalid_argument("outcome length must match the ancilla count");
  const std::vector<Gate>& gates = decoder_gates(d, outcome);
  if (gate_index >= gates.size())
    throw std::invalid_argument("adaptive gate index out of range");

  const MPS full = run_pre_measurement(a, trunc);
  const auto branches = branches_of(full, a.measured_wires(), a.r());
  const OutcomeBranch& b = branches[outcome_key(outcome)];
  if (!viable(b))
    throw std::invalid_argument(
        "zero-probability branch has no normalized state");

  MPS bra = target;
  for (std::size_t k = gates.size(); k-- > gate_index + 1;) {
    const Gate adj = adjoint_gate(gates[k]);
    apply_gate_inplace(bra, adj.unitary, adj.sites, trunc);
  }
  MPS fwd = b.state;
  for (std::size_t k = 0; k < gate_index; ++k)
    apply_gate_inplace(fwd, gates[k].unitary, gates[k].sites, trunc);
  return gate_environment(bra, fwd, gates[gate_index].sites);
}

TrainReport sweep_train(DQCAnsatz a, LookupTableDecoder d, const MPS& target,
                        const TrainConfig& cfg) {
  if (target.size() != a.n_system)
    throw ShapeError("target length must match the system size");
  if (d.n_wires != a.n_system)
    throw ShapeError("decoder width must match the system size");
  validate_decoder(d);
  const std::size_t r = a.r();
  const std::size_t n_out = std::size_t{1} << r;
  // Materialize every outcome so the adaptive half-sweep never inserts.
  for (std::uint64_t m = 0; m < n_out; ++m) d.table.try_emplace(m);

  const auto& measured = a.measured_wires();
  const std::size_t n_layers = a.pre_circuit.layers.size();

  TrainReport rep;
  rep.config = cfg;

  auto evaluate = [&](const MPS& full, double secs) {
    const auto branches = branches_of(full, measured, r);
    const auto ov = overlaps_impl(branches, d, target, cfg.trunc);
    rep.records.push_back(SweepRecord{cost_pre(ov), infidelity(ov),
                                      purity_impl(branches, d, cfg.trunc),
                                      secs});
  };
  evaluate(run_pre_measurement(a, cfg.trunc), 0.0);

  for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    const auto sw0 = Clock::now();

    // Pre-measurement half-sweep. Bra chains are pulled back once per
    // sweep; layers above the one being updated still hold the values the
    // chains were built from, so each pairing stays exact.
    auto bras = layer_bras(a, d, target, cfg.trunc);
    std::vector<double> probs(n_out, 1.0);
    {
      const auto branches =
          branches_of(run_pre_measurement(a, cfg.trunc), measured, r);
      for (std::size_t m = 0; m < n_out; ++m) probs[m] = branches[m].probability;
    }

    MPS front = MPS::all_zero(a.n_wires());
    for (std::size_t l = 0; l < n_layers; ++l) {
      auto& layer = a.pre_circuit.layers[l];
      for (std::size_t g = 0; g < layer.size(); ++g) {
        const std::size_t dim = layer[g].sites.size() == 1 ? 2 : 4;
        DenseTensor env({dim, dim}, {"o", "i"});
        for (std::size_t m = 0; m < n_out; ++m) {
          if (probs[m] < kProbabilityFloor) continue;
          DenseTensor e =
              pre_gate_env_for_branch(bras[m][l + 1], front, layer, g,
                                      cfg.trunc);
          e *= Complex{std::sqrt(probs[m]), 0.0};
          env += e;
        }
        layer[g].unitary = polar_update(env, {"i"});

        // Refresh the branch probabilities under the updated circuit.
        MPS cur = front;
        apply_layer(cur, layer, cfg.trunc);
        for (std::size_t l2 = l + 1; l2 < n_layers; ++l2)
          apply_layer(cur, a.pre_circuit.layers[l2], cfg.trunc);
        const auto branches = branches_of(cur, measured, r);
        for (std::size_t m = 0; m < n_out; ++m)
          probs[m] = branches[m].probability;
        if (cfg.trace_gate_purity && sweep == 1)
          rep.gate_purity_trace.push_back(
              purity_impl(branches, d, cfg.trunc));
      }
      apply_layer(front, layer, cfg.trunc);
    }

    // Adaptive half-sweep: branches are independent of each other, so the
    // gate lists update in parallel.
    const auto branches = branches_of(front, measured, r);
    parallel_for(0, n_out, [&](std::size_t m) {
      const OutcomeBranch& b = branches[m];
      if (!viable(b)) return;
      std::vector<Gate>& gates = d.table.find(outcome_key(b.outcome))->second;
      const std::size_t n_gates = gates.size();
      if (n_gates == 0) return;

      std::vector<MPS> bra(n_gates);
      bra[n_gates - 1] = target;
      for (std::size_t k = n_gates - 1; k-- > 0;) {
        bra[k] = bra[k + 1];
        const Gate adj = adjoint_gate(gates[k + 1]);
        apply_gate_inplace(bra[k], adj.unitary, adj.sites, cfg.trunc);
      }
      MPS fwd = b.state;
      for (std::size_t k = 0; k < n_gates; ++k) {
        const DenseTensor f = gate_environment(bra[k], fwd, gates[k].sites);
        gates[k].unitary = polar_update(f, {"i"});
        apply_gate_inplace(fwd, gates[k].unitary, gates[k].sites, cfg.trunc);
      }
    });

    const double prev = rep.records.back().c_pre;
    evaluate(run_pre_measurement(a, cfg.trunc), seconds_since(sw0));
    const double cur = rep.records.back().c_pre;
    if (std::abs(prev - cur) <= cfg.tol * std::max(1.0, std::abs(prev))) {
      rep.converged = true;
      break;
    }
  }

  rep.pre_circuit = std::move(a.pre_circuit);
  rep.decoder = std::move(d);
  return rep;
}

std::string format_report(const TrainReport& rep) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const SweepRecord& rec = rep.records[i];
    os << "sweep " << i << " c_pre " << rec.c_pre << " infidelity "
       << rec.infid << " purity " << rec.purity << " seconds " << rec.seconds
       << "\n";
  }
  os << "converged " << (rep.converged ? 1 : 0) << "\n";
  return os.str();
}

namespace {

// Every angle enters through one exp(-i theta G / 2) factor with G^2 = I,
// so amplitudes are half-angle trig polynomials and the symmetric +-pi/2
// shift recovers the exact derivative with weight 1 / (2 sqrt 2).
constexpr double kShiftScale = 0.25 * std::numbers::sqrt2;

std::size_t gate_param_count(const Gate& g) {
  return g.sites.size() == 2 ? 15 : 3;
}

DenseTensor gate_from_params(const Gate& proto, const std::vector<double>& p) {
  if (p.size() != gate_param_count(proto))
    throw std::invalid_argument("angle count does not match the gate layout");
  if (proto.sites.size() == 2) {
    std::array<double, 15> arr{};
    std::copy(p.begin(), p.end(), arr.begin());
    return kak_unitary(arr);
  }
  return euler_unitary(p[0], p[1], p[2]);
}

DenseTensor shifted_derivative(const Gate& proto, std::vector<double> p,
                               std::size_t t) {
  p[t] += std::numbers::pi / 2.0;
  DenseTensor plus = gate_from_params(proto, p);
  p[t] -= std::numbers::pi;
  DenseTensor minus = gate_from_params(proto, p);
  minus *= Complex{-1.0, 0.0};
  plus += minus;
  plus *= Complex{kShiftScale, 0.0};
  return plus;
}

}  // namespace

DqcAngles random_angles(const DQCAnsatz& a, const LookupTableDecoder& layout,
                        Rng& rng) {
  DqcAngles angles;
  const auto order = flat_pre_order(a.pre_circuit);
  angles.pre.resize(order.size());
  for (auto& arr : angles.pre)
    for (double& v : arr) v = rng.uniform(-std::numbers::pi, std::numbers::pi);
  for (const auto& [key, gates] : layout.table) {
    auto& list = angles.post[key];
    list.resize(gates.size());
    for (std::size_t k = 0; k < gates.size(); ++k) {
      list[k].resize(gate_param_count(gates[k]));
      for (double& v : list[k])
        v = rng.uniform(-std::numbers::pi, std::numbers::pi);
    }
  }
  return angles;
}

DQCAnsatz ansatz_with_angles(const DQCAnsatz& a,
                             const std::vector<std::array<double, 15>>& pre) {
  DQCAnsatz out = a;
  const auto order = flat_pre_order(out.pre_circuit);
  if (pre.size() != order.size())
    throw std::invalid_argument("one angle set per pre-measurement gate");
  for (std::size_t j = 0; j < order.size(); ++j) {
    Gate& g = out.pre_circuit.layers[order[j].layer][order[j].pos];
    if (g.sites.size() != 2)
      throw std::invalid_argument(
          "angle parameterization covers two-site pre-measurement gates");
    g.unitary = kak_unitary(pre[j]);
  }
  return out;
}

LookupTableDecoder decoder_with_angles(
    const LookupTableDecoder& layout,
    const std::map<std::uint64_t, std::vector<std::vector<double>>>& post) {
  LookupTableDecoder out = layout;
  for (auto& [key, gates] : out.table) {
    const auto it = post.find(key);
    if (it == post.end() || it->second.size() != gates.size())
      throw std::invalid_argument("one angle list per adaptive gate");
    for (std::size_t k = 0; k < gates.size(); ++k)
      gates[k].unitary = gate_from_params(gates[k], it->second[k]);
  }
  return out;
}

double gd_cost(const DQCAnsatz& a, const LookupTableDecoder& layout,
               const MPS& target, const DqcAngles& angles,
               const Truncation& trunc) {
  const DQCAnsatz a2 = ansatz_with_angles(a, angles.pre);
  const LookupTableDecoder d2 = decoder_with_angles(layout, angles.post);
  return infidelity(branch_overlaps(a2, d2, target, trunc));
}

DqcAngles gd_gradient(const DQCAnsatz& a, const LookupTableDecoder& layout,
                      const MPS& target, const DqcAngles& angles,
                      const Truncation& trunc) {
  const DQCAnsatz a2 = ansatz_with_angles(a, angles.pre);
  const LookupTableDecoder d2 = decoder_with_angles(layout, angles.post);
  const std::size_t r = a2.r();
  const std::size_t n_out = std::size_t{1} << r;
  const auto& measured = a2.measured_wires();

  DqcAngles grad;
  grad.pre.assign(angles.pre.size(), std::array<double, 15>{});
  for (const auto& [key, list] : angles.post) {
    auto& g = grad.post[key];
    g.resize(list.size());
    for (std::size_t k = 0; k < list.size(); ++k)
      g[k].assign(list[k].size(), 0.0);
  }

  // Unnormalized branch amplitudes: cost = 1 - sum_m |A_m|^2, and every
  // parameter sees d cost = -2 sum_m Re(conj(A_m) dA_m).
  const auto bras = layer_bras(a2, d2, target, trunc);
  const MPS zero = MPS::all_zero(a2.n_wires());
  std::vector<Complex> amp(n_out);
  for (std::size_t m = 0; m < n_out; ++m) amp[m] = overlap(bras[m][0], zero);

  const auto order = flat_pre_order(a2.pre_circuit);
  MPS front = zero;
  std::size_t flat = 0;
  for (std::size_t l = 0; l < a2.pre_circuit.layers.size(); ++l) {
    const auto& layer = a2.pre_circuit.layers[l];
    for (std::size_t g = 0; g < layer.size(); ++g, ++flat) {
      std::vector<DenseTensor> envs;
      envs.reserve(n_out);
      for (std::size_t m = 0; m < n_out; ++m)
        envs.push_back(
            pre_gate_env_for_branch(bras[m][l + 1], front, layer, g, trunc));
      const std::vector<double> params(angles.pre[flat].begin(),
                                       angles.pre[flat].end());
      for (std::size_t t = 0; t < params.size(); ++t) {
        const DenseTensor du = shifted_derivative(layer[g], params, t);
        double acc = 0.0;
        for (std::size_t m = 0; m < n_out; ++m) {
          const Complex da = contract_shared(envs[m], du).value();
          acc += -2.0 * std::real(std::conj(amp[m]) * da);
        }
        grad.pre[flat][t] = acc;
      }
    }
    apply_layer(front, layer, trunc);
  }

  // Adaptive angles: only their own branch contributes, weighted by the
  // branch amplitude normalization sqrt(p).
  const auto branches = branches_of(front, measured, r);
  for (std::size_t m = 0; m < n_out; ++m) {
    const OutcomeBranch& b = branches[m];
    if (!viable(b)) continue;
    const std::uint64_t key = outcome_key(b.outcome);
    const auto git = d2.table.find(key);
    if (git == d2.table.end() || git->second.empty()) continue;
    const std::vector<Gate>& gates = git->second;
    const auto pit = angles.post.find(key);
    const double sqp = std::sqrt(b.probability);

    std::vector<MPS> bra(gates.size());
    bra[gates.size() - 1] = target;
    for (std::size_t k = gates.size() - 1; k-- > 0;) {
      bra[k] = bra[k + 1];
      const Gate adj = adjoint_gate(gates[k + 1]);
      apply_gate_inplace(bra[k], adj.unitary, adj.sites, trunc);
    }
    MPS fwd = b.state;
    for (std::size_t k = 0; k < gates.size(); ++k) {
      const DenseTensor f = gate_environment(bra[k], fwd, gates[k].sites);
      const auto& params = pit->second[k];
      for (std::size_t t = 0; t < params.size(); ++t) {
        const DenseTensor dv = shifted_derivative(gates[k], params, t);
        const Complex da = sqp * contract_shared(f, dv).value();
        grad.post[key][k][t] += -2.0 * std::real(std::conj(amp[m]) * da);
      }
      apply_gate_inplace(fwd, gates[k].unitary, gates[k].sites, trunc);
    }
  }
  return grad;
}

GdReport gd_baseline(const DQCAnsatz& a, const LookupTableDecoder& layout,
                     const MPS& target, const DqcAngles& init,
                     const GdConfig& cfg) {
  GdReport rep;
  DqcAngles angles = init;
  rep.infidelity_series.push_back(
      gd_cost(a, layout, target, angles, cfg.trunc));
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const DqcAngles grad = gd_gradient(a, layout, target, angles, cfg.trunc);
    for (std::size_t j = 0; j < angles.pre.size(); ++j)
      for (std::size_t t = 0; t < 15; ++t)
        angles.pre[j][t] -= cfg.learning_rate * grad.pre[j][t];
    for (auto& [key, list] : angles.post) {
      const auto& gl = grad.post.at(key);
      for (std::size_t k = 0; k < list.size(); ++k)
        for (std::size_t t = 0; t < list[k].size(); ++t)
          list[k][t] -= cfg.learning_rate * gl[k][t];
    }
    rep.infidelity_series.push_back(
        gd_cost(a, layout, target, angles, cfg.trunc));
  }
  for (double v : rep.infidelity_series)
    if (!std::isfinite(v) || v > 1.0 + 1e-9) rep.diverged = true;
  rep.final_angles = std::move(angles);
  rep.ansatz = ansatz_with_angles(a, rep.final_angles.pre);
  rep.decoder = decoder_with_angles(layout, rep.final_angles.post);
  return rep;
}

namespace {

struct TrainedCandidate {
  double infid = std::numeric_limits<double>::infinity();
  DQCAnsatz a;
  LookupTableDecoder d;
};

TrainedCandidate train_candidate(const DQCAnsatz& a,
                                 const LookupTableDecoder& d,
                                 const MPS& target, const TrainConfig& cfg) {
  TrainReport rep = sweep_train(a, d, target, cfg);
  TrainedCandidate out;
  out.infid = rep.records.back().infid;
  out.a = a;
  out.a.pre_circuit = std::move(rep.pre_circuit);
  out.d = std::move(rep.decoder);
  return out;
}

}  // namespace

std::vector<std::size_t> slots_to_wires(std::vector<std::size_t> slots) {
  std::sort(slots.begin(), slots.end());
  for (std::size_t i = 0; i < slots.size(); ++i) slots[i] += i;
  return slots;
}

GreedyResult greedy_ancilla_search(const MPS& target, std::size_t r_max,
                                   std::size_t depth,
                                   const GreedyConfig& cfg) {
  const std::size_t n = target.size();
  const std::size_t seeds = std::max<std::size_t>(1, cfg.seeds);
  Rng master(cfg.base_seed);

  // Static baseline: pre-measurement circuit only, no adaptive gates.
  TrainedCandidate best;
  for (std::size_t s = 0; s < seeds; ++s) {
    const DQCAnsatz a = make_ansatz(n, {}, build_brickwork(n, depth,
                                                           master.bits()));
    LookupTableDecoder d;
    d.n_wires = n;
    d.table.emplace(0, std::vector<Gate>{});
    TrainedCandidate c = train_candidate(a, d, target, cfg.train);
    if (c.infid < best.infid) best = std::move(c);
  }

  GreedyResult res;
  res.infid_trace.push_back(best.infid);
  std::vector<std::size_t> slots;

  for (std::size_t t = 1; t <= r_max; ++t) {
    TrainedCandidate step_best;
    std::size_t step_slot = 0;
    std::vector<std::size_t> step_slots;

    for (std::size_t c = 0; c <= n; ++c) {
      std::vector<std::size_t> cand = slots;
      cand.push_back(c);
      const std::vector<std::size_t> wires = slots_to_wires(cand);
      for (std::size_t s = 0; s < seeds; ++s) {
        const DQCAnsatz a = make_ansatz(
            n, wires, build_brickwork(n + t, depth, master.bits()));
        const LookupTableDecoder d = make_lut_decoder(n, t, cfg.depth_post);
        TrainedCandidate out = train_candidate(a, d, target, cfg.train);
        if (out.infid < step_best.infid) {
          step_best = std::move(out);
          step_slot = c;
          step_slots = cand;
        }
      }
    }

    // Warm candidate: the previous optimum with an idle ancilla appended at
    // the end of the chain. Its starting point reproduces the previous
    // infidelity, so keeping the better of {init, trained} makes the greedy
    // trace non-increasing.
    {
      std::vector<std::size_t> pos = best.a.ancilla_positions;
      pos.push_back(n + t - 1);
      StaticCircuit circ{n + t, best.a.pre_circuit.layers};
      const DQCAnsatz warm_a = make_ansatz(n, std::move(pos), std::move(circ));
      LookupTableDecoder warm_d = make_lut_decoder(n, t, cfg.depth_post);
      for (auto& [key, gates] : warm_d.table) {
        if (key & 1) continue;  // the idle ancilla never reads 1
        const auto it = best.d.table.find(key >> 1);
        if (it != best.d.table.end() && it->second.size() == gates.size() &&
            !it->second.empty())
          gates = it->second;
      }
      const double init_infid =
          infidelity(branch_overlaps(warm_a, warm_d, target, cfg.train.trunc));
      TrainedCandidate out = train_candidate(warm_a, warm_d, target,
                                             cfg.train);
      if (init_infid < out.infid) out = TrainedCandidate{init_infid, warm_a,
                                                         std::move(warm_d)};
      std::vector<std::size_t> cand = slots;
      cand.push_back(n);
      if (out.infid < step_best.infid) {
        step_best = std::move(out);
        step_slot = n;
        step_slots = std::move(cand);
      }
    }

    best = std::move(step_best);
    slots = std::move(step_slots);
    res.infid_trace.push_back(best.infid);
    res.chosen_slots.push_back(step_slot);
  }

  res.ansatz = std::move(best.a);
  res.decoder = std::move(best.d);
  return res;
}

}  // namespace dqc
