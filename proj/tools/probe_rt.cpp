#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include "dqc/circuit.hpp"
#include "dqc/mps.hpp"
#include "dqc/realtime.hpp"
#include "dqc/stabilizer.hpp"

using namespace dqc;

namespace {

// Max entrywise deviation of u from phase * pauli(p), phase least-squares.
double pauli_deviation(const DenseTensor& u, char letter) {
  static const std::vector<Complex> I{1, 0, 0, 1};
  static const std::vector<Complex> X{0, 1, 1, 0};
  static const std::vector<Complex> Y{0, Complex(0, -1), Complex(0, 1), 0};
  static const std::vector<Complex> Z{1, 0, 0, -1};
  const std::vector<Complex>* p = &I;
  if (letter == 'X') p = &X;
  if (letter == 'Y') p = &Y;
  if (letter == 'Z') p = &Z;
  Complex tr = 0.0;
  for (int e = 0; e < 4; ++e) tr += std::conj((*p)[e]) * u[e];
  const Complex phase = tr / std::abs(tr);
  double worst = 0.0;
  for (int e = 0; e < 4; ++e)
    worst = std::max(worst, std::abs(u[e] - phase * (*p)[e]));
  return worst;
}

char pauli_letter(const PauliString& p, std::size_t q) {
  const bool x = p.x[q], z = p.z[q];
  if (x && z) return 'Y';
  if (x) return 'X';
  if (z) return 'Z';
  return 'I';
}

std::vector<std::size_t> system_wires(const DQCAnsatz& a) {
  std::vector<std::size_t> keep;
  std::size_t m = 0;
  for (std::size_t w = 0; w < a.n_wires(); ++w) {
    if (m < a.measured_wires().size() && a.measured_wires()[m] == w) {
      ++m;
      continue;
    }
    keep.push_back(w);
  }
  return keep;
}

}  // namespace

int main() {
  // All four outcomes of the 6-qubit patch family.
  {
    const DQCAnsatz a = ghz_patch_precircuit(6);
    const MPS target = make_ghz(6);
    const StabTableau tab = tableau_of(a.pre_circuit);
    for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
      DecodeConfig cfg;
      DecodingSession s = make_session(br.state, target, cfg);
      decode(s, cfg);
      const PauliString corr = restrict_pauli(
          trajectory_correction(tab.check_matrix(), a.measured_wires(),
                                br.outcome),
          system_wires(a));
      std::printf("n6 outcome %d%d sweeps %zu trace", br.outcome[0],
                  br.outcome[1], s.sweep_trace.size() - 1);
      for (double o : s.sweep_trace) std::printf(" %.12f", o);
      std::printf(" conv %d corr %s dev", s.converged, to_text(corr).c_str());
      for (std::size_t q = 0; q < 6; ++q)
        std::printf(" %.2e", pauli_deviation(s.adaptive_gates[q].unitary,
                                             pauli_letter(corr, q)));
      std::printf("\n");
    }
  }

  // Identity start without the alignment sweep: expected to stall.
  {
    const DQCAnsatz a = ghz_patch_precircuit(6);
    const MPS target = make_ghz(6);
    DecodeConfig cfg;
    cfg.align_first_sweep = false;
    cfg.max_sweeps = 10;
    for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
      DecodingSession s = make_session(br.state, target, cfg);
      decode(s, cfg);
      std::printf("stall outcome %d%d conv %d last %.6f\n", br.outcome[0],
                  br.outcome[1], s.converged, s.sweep_trace.back());
    }
  }

  // 50-qubit protocol, five seeds.
  {
    const DQCAnsatz a = ghz_patch_precircuit(50);
    const StabTableau tab = tableau_of(a.pre_circuit);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const ProtocolReport rep = run_protocol(50, seed, {});
      const PauliString corr = restrict_pauli(
          trajectory_correction(tab.check_matrix(), a.measured_wires(),
                                rep.outcome),
          system_wires(a));
      double worst = 0.0;
      for (std::size_t q = 0; q < 50; ++q)
        worst = std::max(worst,
                         pauli_deviation(rep.session.adaptive_gates[q].unitary,
                                         pauli_letter(corr, q)));
      std::printf("n50 seed %llu sweeps %zu overlap %.12f fid %.12f dev %.2e "
                  "ms %.2f\n",
                  (unsigned long long)seed, rep.session.sweep_trace.size() - 1,
                  rep.session.sweep_trace.back(), rep.fidelity, worst,
                  rep.decode_ms);
    }
  }

  // Latency scaling.
  for (std::size_t n : {10ul, 20ul, 40ul, 80ul}) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
      total += run_protocol(n, seed, {}).decode_ms;
    std::printf("latency n %zu avg_ms %.3f\n", n, total / 3.0);
  }
  return 0;
}
