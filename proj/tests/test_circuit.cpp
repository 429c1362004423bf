#include <doctest.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "dqc/circuit.hpp"
#include "dqc/ref/statevector.hpp"

using namespace dqc;

namespace {

// Runs a circuit on the plain amplitude-vector simulator.
ref::Statevector run_dense(const StaticCircuit& c) {
  ref::Statevector psi(c.n_qubits);
  for (const auto& layer : c.layers)
    for (const Gate& g : layer) {
      if (g.sites.size() == 1)
        psi.apply_1q(g.unitary.data(), g.sites[0]);
      else
        psi.apply_2q(g.unitary.data(), g.sites[0]);
    }
  return psi;
}

std::string temp_path(const char* name) {
  return std::string("/tmp/dqc_circuit_test_") + name;
}

bool same_tensor(const DenseTensor& a, const DenseTensor& b) {
  if (a.shape() != b.shape() || a.labels() != b.labels()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

}  // namespace

TEST_SUITE("circuit") {

TEST_CASE("fixed gates are the textbook matrices") {
  Gate cn = gate_cnot(2, 3);
  CHECK(cn.sites == std::vector<std::size_t>{2, 3});
  CHECK(cn.unitary.at({3, 2}) == Complex{1.0, 0.0});
  CHECK(cn.unitary.at({2, 3}) == Complex{1.0, 0.0});
  CHECK(cn.unitary.at({2, 2}) == Complex{0.0, 0.0});

  Gate up = gate_cnot(3, 2);  // control below target
  CHECK(up.sites == std::vector<std::size_t>{2, 3});
  CHECK(up.unitary.at({3, 1}) == Complex{1.0, 0.0});
  CHECK(up.unitary.at({1, 3}) == Complex{1.0, 0.0});

  CHECK_THROWS_AS(gate_cnot(1, 3), ShapeError);
  CHECK_THROWS_AS(gate_cnot(2, 2), ShapeError);
}

TEST_CASE("gate validation rejects bad input") {
  DenseTensor not_unitary({2, 2}, {"o", "i"},
                          {Complex{1, 0}, Complex{0, 0}, Complex{0, 0},
                           Complex{2, 0}});
  CHECK_THROWS_AS(make_gate(not_unitary, {0}, "bad"), ShapeError);

  DenseTensor id2({2, 2}, {"o", "i"},
                  {Complex{1, 0}, Complex{0, 0}, Complex{0, 0},
                   Complex{1, 0}});
  CHECK_THROWS_AS(make_gate(id2, {0, 1}, "wrong-arity"), ShapeError);
  CHECK_THROWS_AS(make_gate(id2, {0}, "has space"), ShapeError);
  CHECK_THROWS_AS(make_gate(id2, {}, "empty"), ShapeError);

  Gate g = make_gate(id2, {3}, "");
  CHECK(g.tag == "g");
}

TEST_CASE("adjoint composes to the identity") {
  Rng rng(11);
  Gate g = make_gate(haar_unitary(4, rng), {0, 1}, "u");
  Gate gd = adjoint_gate(g);
  MPS s = make_random_mps(3, 4, rng);
  MPS t = apply_gate(apply_gate(s, g.unitary, g.sites), gd.unitary, gd.sites);
  CHECK(fidelity(s, t) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("euler and interaction parameterizations") {
  // All-zero angles give the identity.
  DenseTensor u0 = euler_unitary(0.0, 0.0, 0.0);
  CHECK(std::abs(u0.at({0, 0}) - Complex{1, 0}) < 1e-15);
  CHECK(std::abs(u0.at({0, 1})) < 1e-15);

  std::array<double, 15> zero{};
  DenseTensor k0 = kak_unitary(zero);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(std::abs(k0.at({i, j}) - (i == j ? Complex{1, 0} : Complex{0, 0}))
            < 1e-12);

  // Random angles stay unitary (checked inside make_gate).
  Rng rng(7);
  std::array<double, 15> p{};
  for (auto& v : p) v = rng.uniform(-3.0, 3.0);
  CHECK_NOTHROW(make_gate(kak_unitary(p), {0, 1}, "kak"));

  // theta is a Y rotation: euler(pi,0,0) maps |0> to |1> up to phase.
  DenseTensor flip = euler_unitary(3.14159265358979323846, 0.0, 0.0);
  CHECK(std::abs(flip.at({1, 0})) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(flip.at({0, 0})) < 1e-12);
}

TEST_CASE("brickwork layout follows the even-odd pattern") {
  StaticCircuit c1 = build_brickwork(4, 1, 42);
  REQUIRE(c1.layers.size() == 1);
  REQUIRE(c1.layers[0].size() == 2);
  CHECK(c1.layers[0][0].sites == std::vector<std::size_t>{0, 1});
  CHECK(c1.layers[0][1].sites == std::vector<std::size_t>{2, 3});

  StaticCircuit c2 = build_brickwork(5, 2, 42);
  REQUIRE(c2.layers.size() == 2);
  REQUIRE(c2.layers[0].size() == 2);
  REQUIRE(c2.layers[1].size() == 2);
  CHECK(c2.layers[0][0].sites == std::vector<std::size_t>{0, 1});
  CHECK(c2.layers[0][1].sites == std::vector<std::size_t>{2, 3});
  CHECK(c2.layers[1][0].sites == std::vector<std::size_t>{1, 2});
  CHECK(c2.layers[1][1].sites == std::vector<std::size_t>{3, 4});

  CHECK(is_brickwork(c2));
  CHECK_THROWS_AS(build_brickwork(1, 1, 0), ShapeError);
  CHECK_THROWS_AS(build_brickwork(4, 0, 0), ShapeError);
}

TEST_CASE("seeded rebuild is bitwise identical") {
  StaticCircuit a = build_brickwork(6, 3, 1234);
  StaticCircuit b = build_brickwork(6, 3, 1234);
  StaticCircuit c = build_brickwork(6, 3, 1235);
  REQUIRE(a.layers.size() == b.layers.size());
  bool all_same = true, any_differs = false;
  for (std::size_t l = 0; l < a.layers.size(); ++l)
    for (std::size_t g = 0; g < a.layers[l].size(); ++g) {
      all_same &= same_tensor(a.layers[l][g].unitary, b.layers[l][g].unitary);
      any_differs |=
          !same_tensor(a.layers[l][g].unitary, c.layers[l][g].unitary);
    }
  CHECK(all_same);
  CHECK(any_differs);
}

TEST_CASE("layer overlap is rejected structurally") {
  StaticCircuit c;
  c.n_qubits = 3;
  c.layers.push_back({gate_h(1), gate_h(1)});
  CHECK_THROWS_AS(validate_circuit(c), ShapeError);

  StaticCircuit c2;
  c2.n_qubits = 2;
  c2.layers.push_back({gate_cnot(0, 1), gate_h(1)});
  CHECK_THROWS_AS(validate_circuit(c2), ShapeError);

  StaticCircuit c3;
  c3.n_qubits = 2;
  c3.layers.push_back({gate_h(2)});
  CHECK_THROWS_AS(validate_circuit(c3), ShapeError);
}

TEST_CASE("pre-measurement run matches the dense simulator") {
  StaticCircuit c = build_brickwork(8, 3, 99);
  DQCAnsatz a = make_ansatz(6, {2, 5}, c);
  MPS mps = run_pre_measurement(a);
  ref::Statevector dense = run_dense(c);
  ref::Statevector via_mps = ref::Statevector::from_mps(mps);
  CHECK(std::abs(std::abs(dense.inner(via_mps)) - 1.0) < 1e-10);
}

TEST_CASE("empty pre-circuit leaves the all-zero state") {
  StaticCircuit c;
  c.n_qubits = 5;
  DQCAnsatz a = make_ansatz(4, {2}, c);
  MPS out = run_pre_measurement(a);
  CHECK(fidelity(out, MPS::all_zero(5)) == doctest::Approx(1.0));
}

TEST_CASE("ghz builder with no ancillae reproduces the reference state") {
  StaticCircuit c;
  c.n_qubits = 4;
  c.layers.push_back({gate_h(0)});
  c.layers.push_back({gate_cnot(0, 1)});
  c.layers.push_back({gate_cnot(1, 2)});
  c.layers.push_back({gate_cnot(2, 3)});
  DQCAnsatz a = make_ansatz(4, {}, c);
  MPS out = run_pre_measurement(a);
  CHECK(fidelity(out, make_ghz(4)) == doctest::Approx(1.0).epsilon(1e-12));

  auto branches = enumerate_outcomes(a);
  REQUIRE(branches.size() == 1);
  CHECK(branches[0].outcome.empty());
  CHECK(branches[0].probability == doctest::Approx(1.0));
  CHECK(fidelity(branches[0].state, make_ghz(4)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single ancilla in superposition splits into two even branches") {
  StaticCircuit c;
  c.n_qubits = 3;
  c.layers.push_back({gate_h(1)});
  DQCAnsatz a = make_ansatz(2, {1}, c);
  auto branches = enumerate_outcomes(a);
  REQUIRE(branches.size() == 2);
  CHECK(branches[0].outcome == std::vector<int>{0});
  CHECK(branches[1].outcome == std::vector<int>{1});
  CHECK(branches[0].probability == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(branches[1].probability == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_FALSE(branches[0].degenerate);
}

TEST_CASE("branch probabilities and states match the dense simulator") {
  StaticCircuit c = build_brickwork(8, 3, 2024);
  DQCAnsatz a = make_ansatz(6, {1, 4}, c);
  auto branches = enumerate_outcomes(a);
  REQUIRE(branches.size() == 4);

  double total = 0.0;
  for (const auto& b : branches) {
    total += b.probability;
    // Dense twin: run, then project the measured wires in descending
    // order so earlier indices stay valid.
    ref::Statevector dense = run_dense(c);
    double p = 1.0;
    p *= dense.project_out(4, b.outcome[1]);
    p *= dense.project_out(1, b.outcome[0]);
    CHECK(std::abs(p - b.probability) < 1e-12);
    ref::Statevector branch_dense = ref::Statevector::from_mps(b.state);
    CHECK(std::abs(std::abs(dense.inner(branch_dense)) - 1.0) < 1e-10);
    // Branch states come back normalized.
    CHECK(std::abs(branch_dense.norm() - 1.0) < 1e-10);
  }
  CHECK(std::abs(total - 1.0) < 1e-10);
}

TEST_CASE("impossible branches are flagged degenerate") {
  // Ancilla pinned to |0>: the outcome-1 branch cannot occur.
  StaticCircuit c;
  c.n_qubits = 2;
  c.layers.push_back({gate_h(0)});
  DQCAnsatz a = make_ansatz(1, {1}, c);
  auto branches = enumerate_outcomes(a);
  REQUIRE(branches.size() == 2);
  CHECK(branches[0].probability == doctest::Approx(1.0));
  CHECK(branches[1].degenerate);
  CHECK(branches[1].probability < 1e-12);
}

TEST_CASE("untouched ancillae measure to the no-ancilla run") {
  StaticCircuit on_data;
  on_data.n_qubits = 4;  // wires 0,2,3 are data; wire 1 is the ancilla
  on_data.layers.push_back({gate_h(0)});
  on_data.layers.push_back({gate_cnot(2, 3)});
  DQCAnsatz a = make_ansatz(3, {1}, on_data);
  auto branches = enumerate_outcomes(a);
  REQUIRE(branches.size() == 2);
  CHECK(branches[0].probability == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(branches[1].degenerate);

  StaticCircuit bare;
  bare.n_qubits = 3;
  bare.layers.push_back({gate_h(0)});
  bare.layers.push_back({gate_cnot(1, 2)});
  DQCAnsatz no_anc = make_ansatz(3, {}, bare);
  MPS direct = run_pre_measurement(no_anc);
  CHECK(fidelity(branches[0].state, direct) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("enumeration refuses oversized ancilla registers") {
  StaticCircuit c;
  c.n_qubits = 9;
  DQCAnsatz a = make_ansatz(2, {0, 1, 2, 3, 4, 5, 6}, c);
  CHECK_THROWS_WITH_AS(
      (void)enumerate_outcomes(a),
      doctest::Contains("draw measurement samples instead"),
      std::invalid_argument);
  CHECK_NOTHROW((void)enumerate_outcomes(a, 7));
}

TEST_CASE("ansatz validation") {
  StaticCircuit c;
  c.n_qubits = 4;
  CHECK_THROWS_AS(make_ansatz(3, {0, 0}, c), ShapeError);   // duplicate
  CHECK_THROWS_AS(make_ansatz(3, {4}, c), ShapeError);      // out of range
  CHECK_THROWS_AS(make_ansatz(2, {0}, c), ShapeError);      // width mismatch
  DQCAnsatz a = make_ansatz(2, {1, 2}, c);
  CHECK(a.data_wires() == std::vector<std::size_t>{0, 3});
  CHECK(a.n_wires() == 4);
}

TEST_CASE("patch construction: two qubits, outcome 00 is exact") {
  DQCAnsatz a = ghz_patch_precircuit(2);
  CHECK(a.n_system == 2);
  CHECK(a.r() == 2);
  auto branches = enumerate_outcomes(a);
  REQUIRE(branches.size() == 4);
  CHECK(branches[0].outcome == std::vector<int>{0, 0});
  CHECK(fidelity(branches[0].state, make_ghz(2)) ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("patch construction: uniform branch statistics") {
  for (std::size_t n : {2, 5, 6}) {
    DQCAnsatz a = ghz_patch_precircuit(n);
    auto branches = enumerate_outcomes(a);
    const double expected = 1.0 / static_cast<double>(branches.size());
    for (const auto& b : branches)
      CHECK(std::abs(b.probability - expected) < 1e-10);
  }
}

TEST_CASE("patch branches are Pauli-shifted cat states") {
  // Every branch should put weight 1/2 on two complementary basis states.
  for (std::size_t n : {2, 5, 6}) {
    DQCAnsatz a = ghz_patch_precircuit(n);
    for (const auto& b : enumerate_outcomes(a)) {
      ref::Statevector dense = ref::Statevector::from_mps(b.state);
      const std::size_t dim = dense.amplitudes().size();
      std::vector<std::size_t> support;
      for (std::size_t i = 0; i < dim; ++i)
        if (std::abs(dense.amplitudes()[i]) > 1e-10) support.push_back(i);
      REQUIRE(support.size() == 2);
      CHECK((support[0] ^ support[1]) == dim - 1);  // bitwise complements
      CHECK(std::abs(std::abs(dense.amplitudes()[support[0]]) -
                     1.0 / std::sqrt(2.0)) < 1e-10);
      CHECK(std::abs(std::abs(dense.amplitudes()[support[1]]) -
                     1.0 / std::sqrt(2.0)) < 1e-10);
    }
  }
}

TEST_CASE("patch sizing follows the documented arrangement") {
  DQCAnsatz a50 = ghz_patch_precircuit(50);
  CHECK(a50.r() == 32);  // 17 patches
  DQCAnsatz a6 = ghz_patch_precircuit(6);
  CHECK(a6.r() == 2);  // 2 patches of 3
  CHECK_THROWS_AS(ghz_patch_precircuit(1), ShapeError);
}

TEST_CASE("circuit text round-trip is exact") {
  StaticCircuit c = build_brickwork(5, 3, 777);
  const std::string path = temp_path("roundtrip.txt");
  save_circuit(c, path);
  StaticCircuit back = load_circuit(path);
  REQUIRE(back.n_qubits == c.n_qubits);
  REQUIRE(back.layers.size() == c.layers.size());
  for (std::size_t l = 0; l < c.layers.size(); ++l) {
    REQUIRE(back.layers[l].size() == c.layers[l].size());
    for (std::size_t g = 0; g < c.layers[l].size(); ++g) {
      CHECK(back.layers[l][g].tag == c.layers[l][g].tag);
      CHECK(back.layers[l][g].sites == c.layers[l][g].sites);
      CHECK(same_tensor(back.layers[l][g].unitary, c.layers[l][g].unitary));
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("ansatz text round-trip preserves wiring") {
  DQCAnsatz a = ghz_patch_precircuit(5);
  const std::string path = temp_path("ansatz.txt");
  save_ansatz(a, path);
  DQCAnsatz back = load_ansatz(path);
  CHECK(back.n_system == a.n_system);
  CHECK(back.ancilla_positions == a.ancilla_positions);
  REQUIRE(back.pre_circuit.layers.size() == a.pre_circuit.layers.size());
  MPS x = run_pre_measurement(a), y = run_pre_measurement(back);
  CHECK(fidelity(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  std::remove(path.c_str());
}

TEST_CASE("malformed circuit files are rejected") {
  const std::string path = temp_path("bad.txt");
  {
    std::FILE* f = std::fopen(path.c_str(), "w");
    REQUIRE(f != nullptr);
    std::fputs("circuit v1\nqubits 3\nlayers 1\nlayer 1\ngate h 1 0 nonsense\n",
               f);
    std::fclose(f);
  }
  CHECK_THROWS_AS((void)load_circuit(path), std::runtime_error);
  CHECK_THROWS_AS((void)load_circuit(temp_path("missing.txt")),
                  std::runtime_error);
  std::remove(path.c_str());
}

}  // TEST_SUITE
