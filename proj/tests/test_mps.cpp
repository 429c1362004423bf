#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "dqc/mps.hpp"
#include "dqc/ref/statevector.hpp"
#include "dqc/rng.hpp"

using dqc::Complex;
using dqc::DenseTensor;
using dqc::MPS;
using dqc::ref::Statevector;

namespace {

DenseTensor random_unitary_gate(std::size_t n_sites, dqc::Rng& rng) {
  const std::size_t dim = n_sites == 1 ? 2 : 4;
  DenseTensor seed({dim, dim}, {"o", "i"});
  for (auto& x : seed.data()) x = rng.complex_normal();
  return dqc::polar_update(seed, {"i"});
}

std::vector<Complex> gate_matrix(const DenseTensor& g) { return g.data(); }

double dense_distance(const MPS& s, const Statevector& v) {
  Statevector sv = Statevector::from_mps(s);
  double m = 0.0;
  for (std::size_t i = 0; i < sv.amplitudes().size(); ++i)
    m = std::max(m, std::abs(sv.amplitudes()[i] - v.amplitudes()[i]));
  return m;
}

}  // namespace

TEST_SUITE("mps") {

TEST_CASE("product states and GHZ have the expected amplitudes") {
  MPS zero = MPS::all_zero(3);
  Statevector v = Statevector::from_mps(zero);
  CHECK(std::abs(v.amplitudes()[0] - Complex{1}) < 1e-14);
  for (std::size_t i = 1; i < 8; ++i)
    CHECK(std::abs(v.amplitudes()[i]) < 1e-14);

  MPS ghz = dqc::make_ghz(4);
  Statevector g = Statevector::from_mps(ghz);
  const double amp = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(g.amplitudes()[0] - Complex{amp}) < 1e-12);
  CHECK(std::abs(g.amplitudes()[15] - Complex{amp}) < 1e-12);
  double rest = 0.0;
  for (std::size_t i = 1; i < 15; ++i) rest += std::abs(g.amplitudes()[i]);
  CHECK(rest < 1e-12);
}

TEST_CASE("overlap matches the dense inner product") {
  dqc::Rng rng(101);
  MPS a = dqc::make_random_mps(6, 5, rng);
  MPS b = dqc::make_random_mps(6, 3, rng);
  const Complex fast = dqc::overlap(a, b);
  const Complex dense =
      Statevector::from_mps(a).inner(Statevector::from_mps(b));
  CHECK(std::abs(fast - dense) < 1e-12);
  CHECK(std::abs(dqc::overlap(a, a) - Complex{1}) < 1e-12);
}

TEST_CASE("gate application matches the dense simulator") {
  dqc::Rng rng(7);
  MPS s = dqc::make_random_mps(5, 4, rng);
  Statevector v = Statevector::from_mps(s);

  auto g1 = random_unitary_gate(1, rng);
  s = dqc::apply_gate(s, g1, {2});
  v.apply_1q(gate_matrix(g1), 2);
  CHECK(dense_distance(s, v) < 1e-12);

  for (std::size_t q = 0; q < 4; ++q) {
    auto g2 = random_unitary_gate(2, rng);
    s = dqc::apply_gate(s, g2, {q, q + 1});
    v.apply_2q(gate_matrix(g2), q);
  }
  CHECK(dense_distance(s, v) < 1e-11);
  CHECK(std::abs(dqc::overlap(s, s) - Complex{1}) < 1e-11);
}

TEST_CASE("non-unitary gates are rejected") {
  MPS s = MPS::all_zero(3);
  DenseTensor bad({2, 2}, {"o", "i"},
                  {Complex{1}, Complex{0}, Complex{0}, Complex{0.5}});
  CHECK_THROWS_AS(dqc::apply_gate(s, bad, {0}), dqc::ShapeError);
  CHECK_THROWS_AS(dqc::apply_gate(s, bad, {7}), dqc::ShapeError);
}

TEST_CASE("truncation caps the bond dimension and renormalizes") {
  dqc::Rng rng(31);
  MPS s = MPS::all_zero(6);
  dqc::Truncation tight{2, 1e-12};
  for (int layer = 0; layer < 3; ++layer)
    for (std::size_t q = layer % 2; q + 1 < 6; q += 2)
      s = dqc::apply_gate(s, random_unitary_gate(2, rng), {q, q + 1}, tight);
  CHECK(s.max_bond_dim() <= 2);
  CHECK(std::abs(dqc::overlap(s, s) - Complex{1}) < 1e-10);
}

TEST_CASE("projection agrees with the dense simulator and removes sites") {
  dqc::Rng rng(13);
  MPS s = dqc::make_random_mps(6, 6, rng);

  for (int b0 : {0, 1})
    for (int b1 : {0, 1}) {
      auto res = dqc::project(s, {1, 4}, {b0, b1});
      Statevector v = Statevector::from_mps(s);
      const double p0 = v.project_out(1, b0);
      const double p1 = v.project_out(3, b1);  // site 4 shifted down by one
      CHECK(res.probability ==
            doctest::Approx(p0 * p1).epsilon(1e-10));
      REQUIRE(res.state.size() == 4);
      if (!res.degenerate) CHECK(dense_distance(res.state, v) < 1e-10);
    }

  // outcome probabilities are a distribution
  double total = 0.0;
  for (int b0 : {0, 1})
    for (int b1 : {0, 1})
      total += dqc::project(s, {1, 4}, {b0, b1}).probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("projection onto an impossible outcome is flagged degenerate") {
  MPS zeros = MPS::all_zero(4);
  auto res = dqc::project(zeros, {2}, {1});
  CHECK(res.degenerate);
  CHECK(res.probability < 1e-12);
  auto ok = dqc::project(zeros, {2}, {0});
  CHECK(!ok.degenerate);
  CHECK(ok.probability == doctest::Approx(1.0));
}

TEST_CASE("projection input validation") {
  MPS s = MPS::all_zero(3);
  CHECK_THROWS_AS(dqc::project(s, {2, 1}, {0, 0}), dqc::ShapeError);
  CHECK_THROWS_AS(dqc::project(s, {0, 1, 2}, {0, 0, 0}), dqc::ShapeError);
  CHECK_THROWS_AS(dqc::project(s, {1}, {2}), dqc::ShapeError);
}

TEST_CASE("sampling returns the exact branch probability") {
  dqc::Rng rng(42);
  MPS s = dqc::make_random_mps(7, 4, rng);
  for (int trial = 0; trial < 20; ++trial) {
    auto sample = dqc::sample_outcome(s, {0, 3, 5}, rng);
    auto check = dqc::project(s, {0, 3, 5}, sample.outcome);
    CHECK(std::abs(sample.probability - check.probability) < 1e-10);
  }
}

TEST_CASE("sampling frequencies follow the Born rule on GHZ") {
  dqc::Rng rng(2024);
  MPS ghz = dqc::make_ghz(3);
  int zeros = 0;
  const int shots = 4000;
  for (int i = 0; i < shots; ++i) {
    auto sample = dqc::sample_outcome(ghz, {0, 1}, rng);
    CHECK(sample.outcome[0] == sample.outcome[1]);  // perfectly correlated
    if (sample.outcome[0] == 0) ++zeros;
  }
  // 5-sigma band around p = 1/2
  CHECK(std::abs(zeros - shots / 2) < 5 * std::sqrt(shots * 0.25));
}

TEST_CASE("entanglement entropy of stock states") {
  MPS ghz = dqc::make_ghz(6);
  for (std::size_t cut = 1; cut < 6; ++cut)
    CHECK(dqc::entanglement_entropy(ghz, cut) ==
          doctest::Approx(1.0).epsilon(1e-10));
  MPS prod = MPS::product_state({1, 0, 1, 1});
  CHECK(dqc::entanglement_entropy(prod, 2) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("subset states") {
  // the two-element subset {00..0, 11..1} is exactly GHZ
  MPS sub = dqc::make_subset_state(5, {0, 31});
  CHECK(dqc::fidelity(sub, dqc::make_ghz(5)) ==
        doctest::Approx(1.0).epsilon(1e-12));

  dqc::Rng rng(9);
  MPS s = dqc::make_subset_state(6, 5, rng);
  CHECK(s.max_bond_dim() <= 5);
  CHECK(std::abs(dqc::overlap(s, s) - Complex{1}) < 1e-12);
  Statevector v = Statevector::from_mps(s);
  int support = 0;
  for (const auto& a : v.amplitudes())
    if (std::abs(a) > 1e-10) {
      ++support;
      CHECK(std::abs(a - Complex{1.0 / std::sqrt(5.0)}) < 1e-10);
    }
  CHECK(support == 5);

  CHECK_THROWS_AS(dqc::make_subset_state(3, {1, 1}), dqc::ShapeError);
  CHECK_THROWS_AS(dqc::make_subset_state(3, {9}), dqc::ShapeError);
}

TEST_CASE("random MPS is deterministic per seed and normalized") {
  dqc::Rng r1(55), r2(55), r3(56);
  MPS a = dqc::make_random_mps(5, 4, r1);
  MPS b = dqc::make_random_mps(5, 4, r2);
  MPS c = dqc::make_random_mps(5, 4, r3);
  CHECK(std::abs(dqc::overlap(a, b) - Complex{1}) < 1e-12);
  CHECK(std::abs(dqc::overlap(a, c)) < 0.999);
  CHECK(std::abs(dqc::overlap(a, a) - Complex{1}) < 1e-12);
}

TEST_CASE("canonicalization preserves the state and tracks the center") {
  dqc::Rng rng(77);
  MPS s = dqc::make_random_mps(6, 5, rng);
  Statevector before = Statevector::from_mps(s);
  s.canonicalize(3);
  CHECK(s.ortho_center() == 3);
  Statevector after = Statevector::from_mps(s);
  CHECK(std::abs(before.inner(after)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.bond_dim(0) == 1);
  CHECK(s.bond_dim(6) == 1);
}

TEST_CASE("gate environments are the overlap network minus the gate") {
  dqc::Rng rng(4242);
  MPS bra = dqc::make_random_mps(5, 4, rng);
  MPS ket = dqc::make_random_mps(5, 3, rng);

  for (const std::vector<std::size_t>& sites :
       {std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{2, 3},
        std::vector<std::size_t>{3, 4}, std::vector<std::size_t>{0},
        std::vector<std::size_t>{4}}) {
    const DenseTensor u = random_unitary_gate(sites.size(), rng);
    const DenseTensor env = dqc::gate_environment(bra, ket, sites);
    const Complex via_env = dqc::contract_shared(env, u).value();
    const Complex direct = dqc::overlap(bra, dqc::apply_gate(ket, u, sites));
    CHECK(std::abs(via_env - direct) < 1e-12);
  }

  CHECK_THROWS_AS(dqc::gate_environment(bra, MPS::all_zero(4), {1, 2}),
                  dqc::ShapeError);
  CHECK_THROWS_AS(dqc::gate_environment(bra, ket, {1, 3}), dqc::ShapeError);
  CHECK_THROWS_AS(dqc::gate_environment(bra, ket, {4, 5}), dqc::ShapeError);
}

TEST_CASE("inserted bits splice product wires into the chain") {
  dqc::Rng rng(77);
  MPS s = dqc::make_random_mps(3, 4, rng);
  MPS ext = dqc::with_inserted_bits(s, {1, 3}, {1, 0});
  REQUIRE(ext.size() == 5);

  Statevector base = Statevector::from_mps(s);
  Statevector got = Statevector::from_mps(ext);
  // wire map: 0 -> data 0, 1 -> inserted bit 1, 2 -> data 1, 3 -> inserted
  // bit 0, 4 -> data 2
  for (std::size_t idx = 0; idx < 32; ++idx) {
    const int b1 = static_cast<int>((idx >> 3) & 1);
    const int b3 = static_cast<int>((idx >> 1) & 1);
    const std::size_t data_idx =
        ((idx >> 4) & 1) * 4 + ((idx >> 2) & 1) * 2 + (idx & 1);
    const Complex want = (b1 == 1 && b3 == 0) ? base.amplitudes()[data_idx]
                                              : Complex{0.0, 0.0};
    CHECK(std::abs(got.amplitudes()[idx] - want) < 1e-12);
  }

  CHECK_THROWS_AS(dqc::with_inserted_bits(s, {1}, {0, 1}), dqc::ShapeError);
  CHECK_THROWS_AS(dqc::with_inserted_bits(s, {2, 2}, {0, 0}),
                  dqc::ShapeError);
  CHECK_THROWS_AS(dqc::with_inserted_bits(s, {0}, {2}), dqc::ShapeError);
  CHECK_THROWS_AS(dqc::with_inserted_bits(s, {9}, {0}), dqc::ShapeError);
}

TEST_CASE("serialization round-trip") {
  dqc::Rng rng(123);
  MPS s = dqc::make_random_mps(5, 3, rng);
  const auto path =
      std::filesystem::temp_directory_path() / "dqc_mps_roundtrip.bin";
  dqc::save_mps(s, path.string());
  MPS loaded = dqc::load_mps(path.string());
  REQUIRE(loaded.size() == s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    REQUIRE(loaded.site(i).shape() == s.site(i).shape());
    for (std::size_t k = 0; k < s.site(i).size(); ++k)
      CHECK(loaded.site(i)[k] == s.site(i)[k]);
  }
  std::filesystem::remove(path);

  CHECK_THROWS(dqc::load_mps("/nonexistent/path/state.bin"));
}

}  // TEST_SUITE
