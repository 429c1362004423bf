#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "dqc/circuit.hpp"
#include "dqc/mps.hpp"
#include "dqc/realtime.hpp"
#include "dqc/stabilizer.hpp"

namespace {

using namespace dqc;

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

// Per-system-wire letters of the tableau-route correction for an outcome.
std::vector<char> correction_letters(const DQCAnsatz& a,
                                     const std::vector<int>& outcome) {
  const StabTableau tab = tableau_of(a.pre_circuit);
  const PauliString corr = restrict_pauli(
      trajectory_correction(tab.check_matrix(), a.measured_wires(), outcome),
      system_wires(a));
  std::vector<char> letters(corr.n);
  for (std::size_t q = 0; q < corr.n; ++q) {
    const bool x = corr.x[q], z = corr.z[q];
    letters[q] = x && z ? 'Y' : x ? 'X' : z ? 'Z' : 'I';
  }
  return letters;
}

// Max entrywise deviation of u from the closest phase multiple of the
// named Pauli.
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
  if (std::abs(tr) == 0.0) return 2.0;
  const Complex phase = tr / std::abs(tr);
  double worst = 0.0;
  for (int e = 0; e < 4; ++e)
    worst = std::max(worst, std::abs(u[e] - phase * (*p)[e]));
  return worst;
}

// Letter of the Pauli nearest to u, with the deviation written through
// out_dev. Returns '?' when nothing is close.
char nearest_pauli(const DenseTensor& u, double tol, double* out_dev) {
  char best = '?';
  double best_dev = 2.0;
  for (char letter : {'I', 'X', 'Y', 'Z'}) {
    const double dev = pauli_deviation(u, letter);
    if (dev < best_dev) {
      best_dev = dev;
      best = letter;
    }
  }
  if (out_dev != nullptr) *out_dev = best_dev;
  return best_dev < tol ? best : '?';
}

// Two Pauli strings correct the same branch exactly when their product
// stabilizes the target. For a GHZ target the stabilizer group is
// generated by X on every wire and by pairs of Z's, so the product's
// X part must be uniform and its Z part must have even parity.
bool same_ghz_correction(const std::vector<char>& got,
                         const std::vector<char>& want) {
  REQUIRE(got.size() == want.size());
  bool x0 = false;
  std::size_t z_parity = 0;
  for (std::size_t q = 0; q < got.size(); ++q) {
    const bool gx = got[q] == 'X' || got[q] == 'Y';
    const bool gz = got[q] == 'Z' || got[q] == 'Y';
    const bool wx = want[q] == 'X' || want[q] == 'Y';
    const bool wz = want[q] == 'Z' || want[q] == 'Y';
    const bool dx = gx != wx;
    if (q == 0) x0 = dx;
    if (dx != x0) return false;
    z_parity += std::size_t(gz != wz);
  }
  return z_parity % 2 == 0;
}

DQCAnsatz idle_ancilla_ansatz() {
  StaticCircuit c;
  c.n_qubits = 2;
  return make_ansatz(1, {1}, c);
}

}  // namespace

TEST_SUITE("rt") {

TEST_CASE("deterministic ancillae give a fixed shot") {
  const DQCAnsatz a = idle_ancilla_ansatz();
  for (std::uint64_t seed : {1, 2, 3}) {
    const DeviceShot shot = simulate_device(a, seed);
    REQUIRE(shot.outcome == std::vector<int>{0});
    CHECK(shot.probability == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(overlap(MPS::all_zero(1), shot.post_state)) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("seeded shots reproduce exactly") {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const DeviceShot first = simulate_device(a, 7);
  const DeviceShot again = simulate_device(a, 7);
  REQUIRE(first.outcome == again.outcome);
  CHECK(first.probability == again.probability);
  CHECK(std::abs(overlap(first.post_state, again.post_state)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("patch outcomes are uniform over the syndrome set") {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const std::size_t draws = 10000;
  std::vector<std::size_t> bins(4, 0);
  for (std::uint64_t seed = 1; seed <= draws; ++seed) {
    const DeviceShot shot = simulate_device(a, seed);
    REQUIRE(shot.outcome.size() == 2);
    CHECK(shot.probability == doctest::Approx(0.25).epsilon(1e-10));
    ++bins[std::size_t(shot.outcome[0]) * 2 + std::size_t(shot.outcome[1])];
  }
  const double expected = double(draws) / 4.0;
  double chi2 = 0.0;
  for (std::size_t count : bins) {
    const double d = double(count) - expected;
    chi2 += d * d / expected;
  }
  CHECK(chi2 < 11.345);  // 1% critical value, 3 degrees of freedom
}

TEST_CASE("a shot needing no correction converges before sweeping") {
  const DQCAnsatz a = ghz_patch_precircuit(2);
  const MPS target = make_ghz(2);
  for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
    if (br.outcome != std::vector<int>{0, 0}) continue;
    DecodingSession s = make_session(br.state, target, {});
    decode(s, {});
    CHECK(s.converged);
    REQUIRE(s.sweep_trace.size() == 1);
    CHECK(s.sweep_trace[0] == doctest::Approx(1.0).epsilon(1e-12));
    for (const Gate& g : s.adaptive_gates) {
      CHECK(std::abs(g.unitary[0] - 1.0) == 0.0);
      CHECK(std::abs(g.unitary[1]) == 0.0);
      CHECK(std::abs(g.unitary[2]) == 0.0);
      CHECK(std::abs(g.unitary[3] - 1.0) == 0.0);
    }
  }
}

TEST_CASE("every patch outcome decodes to a Pauli that fixes the branch") {
  // The decoded gates must be exact Paulis, and as a string they must
  // agree with the tableau-route correction up to a stabilizer of the
  // target. Letter-for-letter agreement is not decidable from the
  // states alone: the branch (|111000> + |000111>)/sqrt(2) is fixed
  // exactly by XXXIII and by IIIXXX, and nothing in the pair of states
  // prefers one.
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const MPS target = make_ghz(6);
  for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
    DecodingSession s = make_session(br.state, target, {});
    decode(s, {});
    CHECK(s.converged);
    REQUIRE(s.sweep_trace.size() <= 2);
    CHECK(s.sweep_trace.back() == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<char> got(6, '?');
    for (std::size_t q = 0; q < 6; ++q) {
      double dev = 2.0;
      got[q] = nearest_pauli(s.adaptive_gates[q].unitary, 1e-12, &dev);
      CHECK(dev < 1e-12);
    }
    CHECK(same_ghz_correction(got, correction_letters(a, br.outcome)));
  }
}

TEST_CASE("fifty-qubit outcomes decode in one sweep") {
  const DQCAnsatz a = ghz_patch_precircuit(50);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ProtocolReport rep = run_protocol(50, seed, {});
    CHECK(rep.session.converged);
    REQUIRE(rep.session.sweep_trace.size() == 2);
    CHECK(rep.session.sweep_trace.back() >= 0.999);
    CHECK(rep.fidelity > 1.0 - 1e-6);
    std::vector<char> got(50, '?');
    for (std::size_t q = 0; q < 50; ++q) {
      double dev = 2.0;
      got[q] = nearest_pauli(rep.session.adaptive_gates[q].unitary, 1e-6, &dev);
      CHECK(dev < 1e-6);
    }
    CHECK(same_ghz_correction(got, correction_letters(a, rep.outcome)));
  }
}

TEST_CASE("identity start without alignment stalls on multi-qubit flips") {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const MPS target = make_ghz(6);
  DecodeConfig cfg;
  cfg.align_first_sweep = false;
  cfg.max_sweeps = 10;
  for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
    DecodingSession s = make_session(br.state, target, cfg);
    decode(s, cfg);
    const bool multi_flip =
        br.outcome[1] == 1;  // those corrections flip a whole patch
    if (multi_flip) {
      CHECK_FALSE(s.converged);
      CHECK(s.sweep_trace.back() < 1e-9);
    } else {
      CHECK(s.converged);
      CHECK(s.sweep_trace.back() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("alternative starts refine to convergence by polar sweeps") {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const MPS target = make_ghz(6);
  for (AdaptiveInit init : {AdaptiveInit::kHadamard, AdaptiveInit::kSeeded}) {
    DecodeConfig cfg;
    cfg.init = init;
    cfg.align_first_sweep = false;
    for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
      DecodingSession s = make_session(br.state, target, cfg);
      decode(s, cfg);
      CHECK(s.converged);
      CHECK(s.sweep_trace.back() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(session_overlap(s) ==
            doctest::Approx(s.sweep_trace.back()).epsilon(1e-10));
    }
  }
}

TEST_CASE("per-update overlaps never decrease") {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const MPS target = make_ghz(6);
  DecodeConfig cfg;
  cfg.init = AdaptiveInit::kSeeded;
  cfg.init_seed = 5;
  cfg.align_first_sweep = false;
  for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
    DecodingSession s = make_session(br.state, target, cfg);
    decode(s, cfg);
    REQUIRE(!s.update_trace.empty());
    for (std::size_t i = 1; i < s.update_trace.size(); ++i)
      CHECK(s.update_trace[i] >= s.update_trace[i - 1] - 1e-10);
  }
}

TEST_CASE("sweep traces stay within the unit interval") {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const MPS target = make_ghz(6);
  for (bool align : {true, false}) {
    DecodeConfig cfg;
    cfg.align_first_sweep = align;
    cfg.init = align ? AdaptiveInit::kIdentity : AdaptiveInit::kSeeded;
    for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
      DecodingSession s = make_session(br.state, target, cfg);
      decode(s, cfg);
      for (double o : s.sweep_trace) {
        CHECK(o >= 0.0);
        CHECK(o <= 1.0 + 1e-10);
      }
    }
  }
}

TEST_CASE("fidelity equals the squared final overlap") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const ProtocolReport rep = run_protocol(6, seed, {});
    const double o = rep.session.sweep_trace.back();
    CHECK(rep.fidelity == doctest::Approx(o * o).epsilon(1e-10));
  }
}

TEST_CASE("one sweep suffices across one hundred seeded trials") {
  std::size_t trials = 0;
  std::size_t failures = 0;
  for (std::size_t n = 4; n <= 13; ++n)
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const ProtocolReport rep = run_protocol(n, seed, {});
      ++trials;
      const bool ok = rep.session.converged &&
                      rep.session.sweep_trace.size() <= 2 &&
                      rep.session.sweep_trace.back() >= 1.0 - 1e-9;
      if (!ok) ++failures;
    }
  REQUIRE(trials == 100);
  CHECK(failures == 0);
}

TEST_CASE("a second adaptive layer keeps the decode exact") {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const MPS target = make_ghz(6);
  DecodeConfig cfg;
  cfg.depth = 2;
  for (const OutcomeBranch& br : enumerate_outcomes(a, 2, {})) {
    DecodingSession s = make_session(br.state, target, cfg);
    REQUIRE(s.adaptive_gates.size() == 12);
    decode(s, cfg);
    CHECK(s.converged);
    CHECK(session_overlap(s) ==
          doctest::Approx(s.sweep_trace.back()).epsilon(1e-10));
  }
}

TEST_CASE("decode latency grows subquadratically") {
  run_protocol(10, 99, {});  // warm up allocators and caches
  std::vector<double> log_n, log_ms;
  for (std::size_t n : {10ul, 20ul, 40ul, 80ul}) {
    std::vector<double> ms;
    for (std::uint64_t seed = 1; seed <= 5; ++seed)
      ms.push_back(run_protocol(n, seed, {}).decode_ms);
    std::sort(ms.begin(), ms.end());
    log_n.push_back(std::log(double(n)));
    log_ms.push_back(std::log(ms[ms.size() / 2]));
  }
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    mean_x += log_n[i];
    mean_y += log_ms[i];
  }
  mean_x /= double(log_n.size());
  mean_y /= double(log_n.size());
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < log_n.size(); ++i) {
    num += (log_n[i] - mean_x) * (log_ms[i] - mean_y);
    den += (log_n[i] - mean_x) * (log_n[i] - mean_x);
  }
  CHECK(num / den < 1.3);
}

TEST_CASE("session reports are structured text") {
  const ProtocolReport rep = run_protocol(6, 2, {});
  const std::string text = format_session(rep);
  CHECK(text.find("outcome ") != std::string::npos);
  CHECK(text.find("sweep 0 overlap ") != std::string::npos);
  CHECK(text.find("converged 1") != std::string::npos);
  CHECK(text.find("fidelity ") != std::string::npos);
  CHECK(text.find("decode_ms ") != std::string::npos);
}

TEST_CASE("sessions validate their shapes") {
  CHECK_THROWS_AS(make_session(make_ghz(3), make_ghz(4), {}), ShapeError);
  DecodeConfig zero_depth;
  zero_depth.depth = 0;
  CHECK_THROWS_AS(make_session(make_ghz(3), make_ghz(3), zero_depth),
                  std::invalid_argument);
  DecodingSession bare;
  bare.post_state = make_ghz(3);
  bare.target = make_ghz(3);
  CHECK_THROWS_AS(decode(bare, {}), ShapeError);
}

}  // TEST_SUITE
