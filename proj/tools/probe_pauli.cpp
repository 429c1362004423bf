#include <complex>
#include <cstdio>
#include <vector>

#include "dqc/circuit.hpp"
#include "dqc/mps.hpp"
#include "dqc/nn_decoder.hpp"

using namespace dqc;
using C = std::complex<double>;

int main() {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const MPS target = make_ghz(6);
  const OutcomeBatch batch = exhaustive_batch(a);
  std::printf("branches %zu\n", batch.size());

  const std::vector<std::vector<C>> paulis = {
      {1, 0, 0, 1},                          // I
      {0, 1, 1, 0},                          // X
      {0, C(0, -1), C(0, 1), 0},             // Y
      {1, 0, 0, C(-1, 0)},                   // Z
  };
  const char* names = "IXYZ";

  for (const auto& item : batch) {
    // dense branch state via single-site projections is overkill; use the
    // MPS overlap against Pauli-rotated target instead: |<t|P|b>| =
    // |<P t|b>| since P is Hermitian up to phase.
    double best = -1.0;
    std::size_t best_code = 0;
    for (std::size_t code = 0; code < 4096; ++code) {
      MPS rot = target;
      std::size_t c = code;
      for (std::size_t q = 0; q < 6; ++q, c /= 4) {
        const std::size_t p = c % 4;
        if (p == 0) continue;
        DenseTensor u({2, 2}, std::vector<std::string>{"o", "i"}, paulis[p]);
        apply_gate_inplace(rot, u, {q});
      }
      const double f = std::abs(overlap(rot, item.post));
      if (f > best) {
        best = f;
        best_code = code;
      }
    }
    std::printf("outcome");
    for (int b : item.outcome) std::printf(" %d", b);
    std::printf("  p %.6f  best |o| %.8f  pauli ", item.p, best);
    std::size_t c = best_code;
    for (std::size_t q = 0; q < 6; ++q, c /= 4) std::printf("%c", names[c % 4]);
    std::printf("\n");
  }
  return 0;
}
