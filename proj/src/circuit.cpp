#include "dqc/circuit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dqc {

namespace {

using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;

Eigen::MatrixXcd as_matrix(const DenseTensor& t, std::size_t dim) {
  Eigen::MatrixXcd m(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) m(i, j) = t[i * dim + j];
  return m;
}

DenseTensor from_matrix(const Eigen::MatrixXcd& m) {
  const std::size_t dim = static_cast<std::size_t>(m.rows());
  DenseTensor t({dim, dim}, {"o", "i"});
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) t[i * dim + j] = m(i, j);
  return t;
}

double unitarity_defect(const DenseTensor& t, std::size_t dim) {
  Eigen::MatrixXcd m = as_matrix(t, dim);
  return (m * m.adjoint() - Eigen::MatrixXcd::Identity(dim, dim))
      .cwiseAbs()
      .maxCoeff();
}

Mat4 kron22(const Mat2& a, const Mat2& b) {
  Mat4 k;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      k.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return k;
}

Mat2 euler_matrix(double theta, double phi, double lambda) {
  const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
  const Complex pp = std::exp(Complex{0.0, 0.5 * (phi + lambda)});
  const Complex pm = std::exp(Complex{0.0, 0.5 * (phi - lambda)});
  Mat2 u;
  u << std::conj(pp) * c, -std::conj(pm) * s, pm * s, pp * c;
  return u;
}

void require_clean_tag(const std::string& tag) {
  for (char ch : tag)
    if (std::isspace(static_cast<unsigned char>(ch)))
      throw ShapeError("gate tag must not contain whitespace");
}

}  // namespace

Gate make_gate(DenseTensor unitary, std::vector<std::size_t> sites,
               std::string tag) {
  if (sites.empty() || sites.size() > 2)
    throw ShapeError("gate acts on one or two sites");
  if (sites.size() == 2 && sites[1] != sites[0] + 1)
    throw ShapeError("two-site gates act on adjacent ascending wires");
  const std::size_t dim = sites.size() == 1 ? 2 : 4;
  if (unitary.rank() != 2 || unitary.shape()[0] != dim ||
      unitary.shape()[1] != dim)
    throw ShapeError("gate matrix shape does not match its site count");
  if (unitarity_defect(unitary, dim) > 1e-10)
    throw ShapeError("gate matrix is not unitary");
  if (tag.empty()) tag = "g";
  require_clean_tag(tag);
  return Gate{std::move(unitary), std::move(sites), std::move(tag)};
}

Gate adjoint_gate(const Gate& g) {
  const std::size_t dim = g.sites.size() == 1 ? 2 : 4;
  return Gate{from_matrix(as_matrix(g.unitary, dim).adjoint()), g.sites,
              g.tag};
}

Gate gate_h(std::size_t q) {
  const double h = 1.0 / std::sqrt(2.0);
  return make_gate(DenseTensor({2, 2}, {"o", "i"},
                               {Complex{h, 0}, Complex{h, 0}, Complex{h, 0},
                                Complex{-h, 0}}),
                   {q}, "h");
}

Gate gate_x(std::size_t q) {
  return make_gate(DenseTensor({2, 2}, {"o", "i"},
                               {Complex{0, 0}, Complex{1, 0}, Complex{1, 0},
                                Complex{0, 0}}),
                   {q}, "x");
}

Gate gate_z(std::size_t q) {
  return make_gate(DenseTensor({2, 2}, {"o", "i"},
                               {Complex{1, 0}, Complex{0, 0}, Complex{0, 0},
                                Complex{-1, 0}}),
                   {q}, "z");
}

Gate gate_cnot(std::size_t control, std::size_t target) {
  if (control == target ||
      (control > target ? control - target : target - control) != 1)
    throw ShapeError("cnot wires must be adjacent and distinct");
  DenseTensor u({4, 4}, {"o", "i"});
  if (control < target) {
    u.at({0, 0}) = u.at({1, 1}) = u.at({3, 2}) = u.at({2, 3}) = 1.0;
  } else {
    u.at({0, 0}) = u.at({3, 1}) = u.at({2, 2}) = u.at({1, 3}) = 1.0;
  }
  return make_gate(std::move(u), {std::min(control, target),
                                  std::max(control, target)},
                   "cnot");
}

DenseTensor euler_unitary(double theta, double phi, double lambda) {
  return from_matrix(euler_matrix(theta, phi, lambda));
}

DenseTensor kak_unitary(const std::array<double, 15>& p) {
  const Mat4 left = kron22(euler_matrix(p[0], p[1], p[2]),
                           euler_matrix(p[3], p[4], p[5]));
  const Mat4 right = kron22(euler_matrix(p[9], p[10], p[11]),
                            euler_matrix(p[12], p[13], p[14]));

  Eigen::Matrix4d gen = Eigen::Matrix4d::Zero();
  // a XX + b YY + c ZZ in the computational basis
  gen(0, 3) = gen(3, 0) = p[6] - p[7];
  gen(1, 2) = gen(2, 1) = p[6] + p[7];
  gen(0, 0) = gen(3, 3) = p[8];
  gen(1, 1) = gen(2, 2) = -p[8];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(gen);
  Mat4 core = Mat4::Zero();
  for (int k = 0; k < 4; ++k) {
    const Complex phase = std::exp(Complex{0.0, -0.5 * es.eigenvalues()(k)});
    core += phase * (es.eigenvectors().col(k) *
                     es.eigenvectors().col(k).transpose())
                        .cast<Complex>();
  }
  return from_matrix(left * core * right);
}

DenseTensor haar_unitary(std::size_t dim, Rng& rng) {
  Eigen::MatrixXcd z(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) z(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  Eigen::MatrixXcd q = qr.householderQ() *
                       Eigen::MatrixXcd::Identity(dim, dim);
  const Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the QR gauge so the distribution is uniform, not QR-biased.
  for (std::size_t j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    q.col(j) *= std::abs(d) > 0.0 ? d / std::abs(d) : Complex{1.0, 0.0};
  }
  return from_matrix(q);
}

void validate_circuit(const StaticCircuit& c) {
  if (c.n_qubits == 0) throw ShapeError("circuit needs at least one wire");
  for (const auto& layer : c.layers) {
    std::vector<bool> used(c.n_qubits, false);
    for (const Gate& g : layer) {
      if (g.sites.empty() || g.sites.size() > 2)
        throw ShapeError("gate acts on one or two sites");
      for (std::size_t s : g.sites) {
        if (s >= c.n_qubits) throw ShapeError("gate site out of range");
        if (used[s]) throw ShapeError("overlapping gates within a layer");
        used[s] = true;
      }
    }
  }
}

bool is_brickwork(const StaticCircuit& c) {
  for (std::size_t l = 0; l < c.layers.size(); ++l)
    for (const Gate& g : c.layers[l])
      if (g.sites.size() != 2 || g.sites[0] % 2 != l % 2) return false;
  return true;
}

StaticCircuit build_brickwork(std::size_t n, std::size_t depth,
                              std::uint64_t seed) {
  if (n < 2) throw ShapeError("brickwork needs at least two wires");
  if (depth == 0) throw ShapeError("brickwork needs at least one layer");
  Rng rng(seed);
  StaticCircuit c;
  c.n_qubits = n;
  c.layers.resize(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    for (std::size_t s = l % 2; s + 1 < n; s += 2) {
      std::ostringstream tag;
      tag << "u" << l << "_" << s;
      c.layers[l].push_back(
          make_gate(haar_unitary(4, rng), {s, s + 1}, tag.str()));
    }
  }
  return c;
}

void apply_circuit_inplace(MPS& s, const StaticCircuit& c,
                           const Truncation& trunc) {
  validate_circuit(c);
  if (s.size() != c.n_qubits)
    throw ShapeError("circuit width does not match the state");
  for (const auto& layer : c.layers)
    for (const Gate& g : layer)
      apply_gate_inplace(s, g.unitary, g.sites, trunc);
}

std::vector<std::size_t> DQCAnsatz::data_wires() const {
  std::vector<std::size_t> out;
  out.reserve(n_system);
  std::size_t a = 0;
  for (std::size_t w = 0; w < n_wires(); ++w) {
    if (a < ancilla_positions.size() && ancilla_positions[a] == w) {
      ++a;
    } else {
      out.push_back(w);
    }
  }
  return out;
}

DQCAnsatz make_ansatz(std::size_t n_system,
                      std::vector<std::size_t> ancilla_positions,
                      StaticCircuit pre_circuit) {
  if (n_system == 0) throw ShapeError("ansatz needs at least one system wire");
  const std::size_t wires = n_system + ancilla_positions.size();
  for (std::size_t i = 0; i < ancilla_positions.size(); ++i) {
    if (ancilla_positions[i] >= wires)
      throw ShapeError("ancilla position out of range");
    if (i > 0 && ancilla_positions[i] <= ancilla_positions[i - 1])
      throw ShapeError("ancilla positions must be strictly ascending");
  }
  if (pre_circuit.n_qubits != wires)
    throw ShapeError("pre-circuit width must equal system plus ancillae");
  validate_circuit(pre_circuit);
  return DQCAnsatz{n_system, std::move(ancilla_positions),
                   std::move(pre_circuit)};
}

MPS run_pre_measurement(const DQCAnsatz& a, const Truncation& trunc) {
  MPS s = MPS::all_zero(a.n_wires());
  apply_circuit_inplace(s, a.pre_circuit, trunc);
  return s;
}

std::vector<OutcomeBranch> enumerate_outcomes(const DQCAnsatz& a,
                                              std::size_t r_max,
                                              const Truncation& trunc) {
  const std::size_t r = a.r();
  if (r > r_max) {
    std::ostringstream msg;
    msg << "exhaustive enumeration over " << r
        << " ancillae exceeds the cap of " << r_max
        << "; draw measurement samples instead";
    throw std::invalid_argument(msg.str());
  }
  MPS pre = run_pre_measurement(a, trunc);
  std::vector<OutcomeBranch> branches;
  branches.reserve(std::size_t{1} << r);
  if (r == 0) {
    branches.push_back(OutcomeBranch{{}, 1.0, std::move(pre), false});
    return branches;
  }
  for (std::size_t m = 0; m < (std::size_t{1} << r); ++m) {
    std::vector<int> outcome(r);
    for (std::size_t j = 0; j < r; ++j)
      outcome[j] = static_cast<int>((m >> (r - 1 - j)) & 1u);
    ProjectionResult pr = project(pre, a.measured_wires(), outcome);
    branches.push_back(OutcomeBranch{std::move(outcome), pr.probability,
                                     std::move(pr.state), pr.degenerate});
  }
  return branches;
}

DQCAnsatz ghz_patch_precircuit(std::size_t n) {
  if (n < 2) throw ShapeError("patch construction needs at least two qubits");
  const std::size_t patches = std::max<std::size_t>(2, (n + 2) / 3);
  const std::size_t base = n / patches, rem = n % patches;

  // Contiguous blocks: [beta from the previous seam] data... [alpha].
  std::vector<std::size_t> block_lo, block_hi, alphas, betas;
  std::size_t w = 0;
  for (std::size_t k = 0; k < patches; ++k) {
    const std::size_t size = base + (k < rem ? 1 : 0);
    block_lo.push_back(k == 0 ? w : betas.back());
    w += size;
    if (k + 1 < patches) {
      alphas.push_back(w++);
      betas.push_back(w++);
    }
    block_hi.push_back(k + 1 < patches ? alphas.back() : w - 1);
  }

  StaticCircuit c;
  c.n_qubits = w;
  std::vector<Gate> heads;
  for (std::size_t k = 0; k < patches; ++k)
    heads.push_back(gate_h(block_lo[k]));
  c.layers.push_back(std::move(heads));

  std::size_t longest = 0;
  for (std::size_t k = 0; k < patches; ++k)
    longest = std::max(longest, block_hi[k] - block_lo[k]);
  for (std::size_t t = 0; t < longest; ++t) {
    std::vector<Gate> layer;
    for (std::size_t k = 0; k < patches; ++k)
      if (block_lo[k] + t < block_hi[k])
        layer.push_back(gate_cnot(block_lo[k] + t, block_lo[k] + t + 1));
    c.layers.push_back(std::move(layer));
  }

  std::vector<Gate> bell_cnots, bell_heads;
  for (std::size_t k = 0; k + 1 < patches; ++k) {
    bell_cnots.push_back(gate_cnot(alphas[k], betas[k]));
    bell_heads.push_back(gate_h(alphas[k]));
  }
  c.layers.push_back(std::move(bell_cnots));
  c.layers.push_back(std::move(bell_heads));

  std::vector<std::size_t> measured;
  for (std::size_t k = 0; k + 1 < patches; ++k) {
    measured.push_back(alphas[k]);
    measured.push_back(betas[k]);
  }
  return make_ansatz(n, std::move(measured), std::move(c));
}

namespace {

void write_circuit(std::ostream& out, const StaticCircuit& c) {
  out.precision(std::numeric_limits<double>::max_digits10);
  out << "circuit v1\n";
  out << "qubits " << c.n_qubits << "\n";
  out << "layers " << c.layers.size() << "\n";
  for (const auto& layer : c.layers) {
    out << "layer " << layer.size() << "\n";
    for (const Gate& g : layer) {
      out << "gate " << g.tag << " " << g.sites.size();
      for (std::size_t s : g.sites) out << " " << s;
      for (const Complex& v : g.unitary.data())
        out << " " << v.real() << " " << v.imag();
      out << "\n";
    }
  }
}

[[noreturn]] void parse_fail(const std::string& what) {
  throw std::runtime_error("circuit parse error: " + what);
}

void expect_word(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) parse_fail("expected '" + word + "'");
}

StaticCircuit read_circuit(std::istream& in) {
  expect_word(in, "circuit");
  expect_word(in, "v1");
  StaticCircuit c;
  std::size_t n_layers = 0;
  expect_word(in, "qubits");
  if (!(in >> c.n_qubits)) parse_fail("qubit count");
  expect_word(in, "layers");
  if (!(in >> n_layers)) parse_fail("layer count");
  for (std::size_t l = 0; l < n_layers; ++l) {
    expect_word(in, "layer");
    std::size_t n_gates = 0;
    if (!(in >> n_gates)) parse_fail("gate count");
    std::vector<Gate> layer;
    for (std::size_t gi = 0; gi < n_gates; ++gi) {
      expect_word(in, "gate");
      std::string tag;
      std::size_t n_sites = 0;
      if (!(in >> tag >> n_sites)) parse_fail("gate header");
      if (n_sites == 0 || n_sites > 2) parse_fail("gate site count");
      std::vector<std::size_t> sites(n_sites);
      for (auto& s : sites)
        if (!(in >> s)) parse_fail("gate site");
      const std::size_t dim = n_sites == 1 ? 2 : 4;
      std::vector<Complex> data(dim * dim);
      for (auto& v : data) {
        double re = 0.0, im = 0.0;
        if (!(in >> re >> im)) parse_fail("gate entry");
        v = Complex{re, im};
      }
      layer.push_back(make_gate(
          DenseTensor({dim, dim}, {"o", "i"}, std::move(data)),
          std::move(sites), std::move(tag)));
    }
    c.layers.push_back(std::move(layer));
  }
  validate_circuit(c);
  return c;
}

}  // namespace

void save_circuit(const StaticCircuit& c, const std::string& path) {
  validate_circuit(c);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  write_circuit(out, c);
  if (!out) throw std::runtime_error("write failed: " + path);
}

StaticCircuit load_circuit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return read_circuit(in);
}

void save_ansatz(const DQCAnsatz& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "ansatz v1\n";
  out << "system " << a.n_system << "\n";
  out << "ancillae " << a.r();
  for (std::size_t p : a.ancilla_positions) out << " " << p;
  out << "\n";
  write_circuit(out, a.pre_circuit);
  if (!out) throw std::runtime_error("write failed: " + path);
}

DQCAnsatz load_ansatz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  expect_word(in, "ansatz");
  expect_word(in, "v1");
  std::size_t n_system = 0, r = 0;
  expect_word(in, "system");
  if (!(in >> n_system)) parse_fail("system count");
  expect_word(in, "ancillae");
  if (!(in >> r)) parse_fail("ancilla count");
  std::vector<std::size_t> positions(r);
  for (auto& p : positions)
    if (!(in >> p)) parse_fail("ancilla position");
  StaticCircuit c = read_circuit(in);
  return make_ansatz(n_system, std::move(positions), std::move(c));
}

}  // namespace dqc
