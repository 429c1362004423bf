#include "dqc/realtime.hpp"

#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "dqc/mps.hpp"

namespace dqc {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

const std::string kAdaptiveTag = "adaptive";

DenseTensor identity_unitary() {
  return DenseTensor({2, 2}, {"o", "i"}, {1.0, 0.0, 0.0, 1.0});
}

// The four Paulis, indexed I, X, Y, Z.
const std::array<std::vector<Complex>, 4> kPauli{{
    {1.0, 0.0, 0.0, 1.0},
    {0.0, 1.0, 1.0, 0.0},
    {0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0},
    {1.0, 0.0, 0.0, -1.0},
}};

DenseTensor pauli_unitary(std::size_t which) {
  return DenseTensor({2, 2}, {"o", "i"}, std::vector<Complex>(kPauli[which]));
}

// Site tensors relabeled for the two-chain overlap network. The bra side
// is conjugated, so <target|...|post> sums plain products.
DenseTensor bra_site(const MPS& target, std::size_t q) {
  return target.site(q).conjugated().relabeled({"tl", "bp", "tr"});
}

DenseTensor ket_site(const MPS& post, std::size_t q) {
  return post.site(q).relabeled({"kl", "kp", "kr"});
}

DenseTensor boundary() {
  return DenseTensor({1, 1}, {"tl", "kl"}, {1.0});
}

void normalize_direction(DenseTensor& t) {
  const double n = t.norm();
  if (n > 0.0) t *= Complex(1.0 / n, 0.0);
}

// 2x2 matrix product of a wire's gate stack, top layer leftmost.
std::array<Complex, 4> wire_stack(const std::vector<Gate>& gates,
                                  std::size_t n, std::size_t depth,
                                  std::size_t q) {
  std::array<Complex, 4> m{1.0, 0.0, 0.0, 1.0};
  for (std::size_t l = 0; l < depth; ++l) {
    const DenseTensor& u = gates[l * n + q].unitary;
    const std::array<Complex, 4> g{u[0], u[1], u[2], u[3]};
    std::array<Complex, 4> next{};
    for (std::size_t o = 0; o < 2; ++o)
      for (std::size_t i = 0; i < 2; ++i)
        next[o * 2 + i] = g[o * 2 + 0] * m[0 * 2 + i] + g[o * 2 + 1] * m[1 * 2 + i];
    m = next;
  }
  return m;
}

DenseTensor stack_tensor(const std::array<Complex, 4>& m) {
  return DenseTensor({2, 2}, {"bp", "kp"}, {m[0], m[1], m[2], m[3]});
}

// Right partial contractions for a polar sweep: chain[q] closes wires
// q..n-1 with the current gate stacks folded in.
std::vector<DenseTensor> right_chain(const MPS& target, const MPS& post,
                                     const std::vector<Gate>& gates,
                                     std::size_t depth) {
  const std::size_t n = target.size();
  std::vector<DenseTensor> chain(n + 1);
  chain[n] = boundary();
  for (std::size_t q = n; q-- > 0;) {
    DenseTensor s = contract_shared(bra_site(target, q),
                                    stack_tensor(wire_stack(gates, n, depth, q)));
    s = contract_shared(s, ket_site(post, q));
    chain[q] = contract_shared(s, chain[q + 1].relabeled({"tr", "kr"}));
  }
  return chain;
}

// One alignment sweep: wires left of q carry their chosen corrections,
// wires right of q are bridged by |+><+| on the bra side so both
// computational components contribute with equal weight. Each environment
// is then read against the Pauli basis and the strongest response wins.
// For a byproduct-shifted stabilizer target the environment is exactly
// proportional to the remaining correction, so one pass recovers it.
double alignment_sweep(DecodingSession& session, const Truncation& trunc) {
  const std::size_t n = session.target.size();
  const DenseTensor mixer({2, 2}, {"bp", "kp"}, {0.5, 0.5, 0.5, 0.5});

  std::vector<DenseTensor> right(n + 1);
  right[n] = boundary();
  for (std::size_t q = n; q-- > 0;) {
    DenseTensor s = contract_shared(bra_site(session.target, q), mixer);
    s = contract_shared(s, ket_site(session.post_state, q));
    right[q] = contract_shared(s, right[q + 1].relabeled({"tr", "kr"}));
    normalize_direction(right[q]);
  }

  MPS fwd = session.post_state;
  DenseTensor left = boundary();
  for (std::size_t q = 0; q < n; ++q) {
    const DenseTensor bq = bra_site(session.target, q);
    DenseTensor t = contract(left, bq, {{"tl", "tl"}});
    DenseTensor env = contract(t, ket_site(fwd, q), {{"kl", "kl"}});
    env = contract_shared(env, right[q + 1].relabeled({"tr", "kr"}));

    if (env.norm() > 0.0) {
      // Ties are broken toward the least action: identity, then the
      // diagonal letter. A tie means the remaining wires cannot
      // distinguish the candidates, and any choice the later reads can
      // complete maps the state correctly.
      std::size_t best = 0;
      double best_score = -1.0;
      for (std::size_t p : {0, 3, 1, 2}) {
        Complex resp = 0.0;
        for (std::size_t e = 0; e < 4; ++e) resp += env[e] * kPauli[p][e];
        if (std::abs(resp) > best_score * (1.0 + 1e-12)) {
          best = p;
          best_score = std::abs(resp);
        }
      }
      const DenseTensor chosen = pauli_unitary(best);
      session.adaptive_gates[q] = make_gate(chosen, {q}, kAdaptiveTag);
      apply_gate_inplace(fwd, chosen, {q}, trunc);
    }

    left = contract(t, ket_site(fwd, q), {{"kl", "kl"}, {"bp", "kp"}})
               .relabeled({"tl", "kl"});
    normalize_direction(left);
  }
  return std::abs(overlap(session.target, fwd));
}

// One polar sweep over every gate, wire-major and bottom layer first
// within a wire. Each update maximizes the overlap given all other gates,
// so the recorded per-update values never decrease.
double polar_sweep(DecodingSession& session, std::size_t depth) {
  const std::size_t n = session.target.size();
  std::vector<Gate>& gates = session.adaptive_gates;
  const std::vector<DenseTensor> right =
      right_chain(session.target, session.post_state, gates, depth);

  double last = 0.0;
  DenseTensor left = boundary();
  for (std::size_t q = 0; q < n; ++q) {
    DenseTensor t = contract(left, bra_site(session.target, q), {{"tl", "tl"}});
    const DenseTensor t2 =
        contract(t, ket_site(session.post_state, q), {{"kl", "kl"}});
    const DenseTensor w =
        contract_shared(t2, right[q + 1].relabeled({"tr", "kr"}));

    for (std::size_t l = 0; l < depth; ++l) {
      std::array<Complex, 4> above{1.0, 0.0, 0.0, 1.0};
      for (std::size_t j = depth; j-- > l + 1;) {
        const DenseTensor& u = gates[j * n + q].unitary;
        std::array<Complex, 4> next{};
        for (std::size_t o = 0; o < 2; ++o)
          for (std::size_t i = 0; i < 2; ++i)
            next[o * 2 + i] = above[o * 2 + 0] * u[0 * 2 + i] +
                              above[o * 2 + 1] * u[1 * 2 + i];
        above = next;
      }
      std::array<Complex, 4> below{1.0, 0.0, 0.0, 1.0};
      for (std::size_t j = l; j-- > 0;) {
        const DenseTensor& u = gates[j * n + q].unitary;
        std::array<Complex, 4> next{};
        for (std::size_t o = 0; o < 2; ++o)
          for (std::size_t i = 0; i < 2; ++i)
            next[o * 2 + i] = below[o * 2 + 0] * u[0 * 2 + i] +
                              below[o * 2 + 1] * u[1 * 2 + i];
        below = next;
      }

      DenseTensor env({2, 2}, {"o", "i"});
      for (std::size_t o = 0; o < 2; ++o)
        for (std::size_t i = 0; i < 2; ++i) {
          Complex v = 0.0;
          for (std::size_t bp = 0; bp < 2; ++bp)
            for (std::size_t kp = 0; kp < 2; ++kp)
              v += above[bp * 2 + o] * w.at({bp, kp}) * below[i * 2 + kp];
          env.at({o, i}) = v;
        }
      if (env.norm() == 0.0) {
        session.update_trace.push_back(last);
        continue;
      }
      const DenseTensor updated = polar_update(env, {"o"});
      gates[l * n + q] = make_gate(updated, {q}, kAdaptiveTag);
      last = std::abs(contract_shared(env, updated).value());
      session.update_trace.push_back(last);
    }

    left = contract_shared(t2, stack_tensor(wire_stack(gates, n, depth, q)))
               .relabeled({"tl", "kl"});
  }
  return last;
}

}  // namespace

DeviceShot simulate_device(const DQCAnsatz& a, std::uint64_t seed,
                           const Truncation& trunc) {
  Rng rng(seed);
  MPS pre = run_pre_measurement(a, trunc);
  const std::vector<std::size_t>& measured = a.measured_wires();
  if (measured.empty()) return {{}, 1.0, std::move(pre)};

  const SampleResult draw = sample_outcome(pre, measured, rng);
  // Project one wire at a time, highest first: the joint probability of a
  // long outcome can sit below the degeneracy floor even though every
  // conditional is well separated from zero.
  MPS post = std::move(pre);
  double probability = 1.0;
  for (std::size_t m = measured.size(); m-- > 0;) {
    ProjectionResult proj = project(post, {measured[m]}, {draw.outcome[m]});
    if (proj.degenerate)
      throw std::runtime_error("sampled outcome has vanishing probability");
    probability *= proj.probability;
    post = std::move(proj.state);
  }
  return {draw.outcome, probability, std::move(post)};
}

DecodingSession make_session(MPS post_state, MPS target,
                             const DecodeConfig& cfg) {
  if (post_state.size() != target.size())
    throw ShapeError("post state and target differ in length");
  if (cfg.depth == 0) throw std::invalid_argument("depth must be positive");

  DecodingSession session;
  session.post_state = std::move(post_state);
  session.target = std::move(target);

  const std::size_t n = session.target.size();
  Rng rng(cfg.init_seed);
  session.adaptive_gates.reserve(n * cfg.depth);
  for (std::size_t l = 0; l < cfg.depth; ++l)
    for (std::size_t q = 0; q < n; ++q) {
      DenseTensor u;
      switch (cfg.init) {
        case AdaptiveInit::kIdentity:
          u = identity_unitary();
          break;
        case AdaptiveInit::kHadamard:
          u = gate_h(q).unitary;
          break;
        case AdaptiveInit::kSeeded:
          u = haar_unitary(2, rng).relabeled({"o", "i"});
          break;
      }
      session.adaptive_gates.push_back(make_gate(std::move(u), {q}, kAdaptiveTag));
    }
  return session;
}

double session_overlap(const DecodingSession& session, const Truncation& trunc) {
  MPS state = session.post_state;
  for (const Gate& g : session.adaptive_gates)
    apply_gate_inplace(state, g.unitary, g.sites, trunc);
  return std::abs(overlap(session.target, state));
}

void decode(DecodingSession& session, const DecodeConfig& cfg) {
  const std::size_t n = session.target.size();
  if (session.post_state.size() != n)
    throw ShapeError("post state and target differ in length");
  if (n == 0 || session.adaptive_gates.empty() ||
      session.adaptive_gates.size() % n != 0)
    throw ShapeError("adaptive gates do not tile the chain");
  const std::size_t depth = session.adaptive_gates.size() / n;

  const Clock::time_point start = Clock::now();
  session.sweep_trace.clear();
  session.update_trace.clear();
  session.converged = false;

  double o = session_overlap(session, cfg.trunc);
  session.sweep_trace.push_back(o);
  if (o >= 1.0 - cfg.tol) {
    session.converged = true;
    session.decode_seconds = seconds_since(start);
    return;
  }

  for (std::size_t sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    if (sweep == 1 && cfg.align_first_sweep)
      o = alignment_sweep(session, cfg.trunc);
    else
      o = polar_sweep(session, depth);
    session.sweep_trace.push_back(o);
    if (o >= 1.0 - cfg.tol) {
      session.converged = true;
      break;
    }
  }
  session.decode_seconds = seconds_since(start);
}

ProtocolReport run_protocol(std::size_t n, std::uint64_t seed,
                            const DecodeConfig& cfg) {
  const DQCAnsatz a = ghz_patch_precircuit(n);
  DeviceShot shot = simulate_device(a, seed, cfg.trunc);

  ProtocolReport report;
  report.outcome = shot.outcome;
  report.session =
      make_session(std::move(shot.post_state), make_ghz(n), cfg);
  decode(report.session, cfg);
  const double o = report.session.sweep_trace.empty()
                       ? 0.0
                       : report.session.sweep_trace.back();
  report.fidelity = o * o;
  report.decode_ms = report.session.decode_seconds * 1e3;
  return report;
}

std::string format_session(const ProtocolReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "outcome";
  if (report.outcome.empty()) out << " -";
  for (int bit : report.outcome) out << ' ' << bit;
  out << '\n';
  for (std::size_t i = 0; i < report.session.sweep_trace.size(); ++i)
    out << "sweep " << i << " overlap " << report.session.sweep_trace[i]
        << '\n';
  out << "converged " << (report.session.converged ? 1 : 0) << '\n';
  out << "fidelity " << report.fidelity << '\n';
  out << "decode_ms " << report.decode_ms << '\n';
  return out.str();
}

}  // namespace dqc
