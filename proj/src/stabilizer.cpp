#include "dqc/stabilizer.hpp"

#include <algorithm>
#include <optional>
#include <sstream>

namespace dqc {

namespace {

int mod4(int k) { return ((k % 4) + 4) % 4; }

using BitRow = std::vector<std::uint8_t>;

// Row-echelon solve of A u = rhs over GF(2); free variables are zero.
std::optional<BitRow> gf2_solve(std::vector<BitRow> a, BitRow rhs) {
  const std::size_t n_eq = a.size();
  const std::size_t n_var = n_eq ? a[0].size() : 0;
  std::vector<std::size_t> pivot_col;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n_var && row < n_eq; ++col) {
    std::size_t p = row;
    while (p < n_eq && !a[p][col]) ++p;
    if (p == n_eq) continue;
    std::swap(a[p], a[row]);
    std::swap(rhs[p], rhs[row]);
    for (std::size_t j = 0; j < n_eq; ++j) {
      if (j != row && a[j][col]) {
        for (std::size_t c = col; c < n_var; ++c) a[j][c] ^= a[row][c];
        rhs[j] ^= rhs[row];
      }
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (std::size_t j = row; j < n_eq; ++j)
    if (rhs[j]) return std::nullopt;
  BitRow u(n_var, 0);
  for (std::size_t j = 0; j < row; ++j) u[pivot_col[j]] = rhs[j];
  return u;
}

std::size_t gf2_rank(std::vector<BitRow> a) {
  const std::size_t n_eq = a.size();
  const std::size_t n_var = n_eq ? a[0].size() : 0;
  std::size_t row = 0;
  for (std::size_t col = 0; col < n_var && row < n_eq; ++col) {
    std::size_t p = row;
    while (p < n_eq && !a[p][col]) ++p;
    if (p == n_eq) continue;
    std::swap(a[p], a[row]);
    for (std::size_t j = row + 1; j < n_eq; ++j)
      if (a[j][col])
        for (std::size_t c = col; c < n_var; ++c) a[j][c] ^= a[row][c];
    ++row;
  }
  return row;
}

BitRow bit_vector(const PauliString& p) {
  BitRow v(2 * p.n);
  for (std::size_t m = 0; m < p.n; ++m) {
    v[m] = p.x[m];
    v[p.n + m] = p.z[m];
  }
  return v;
}

void require_same_length(const PauliString& a, const PauliString& b) {
  if (a.n != b.n) throw ShapeError("pauli lengths differ");
}

struct RefUpdate {
  bool deterministic = false;
  int outcome = -1;
  std::vector<PauliString> rows;  // updated set, +Z_k inserted (random case)
  std::size_t zk_row = 0;
};

// Measurement bookkeeping on the outcome-0 track: either Z_k is already in
// the group (deterministic, outcome read off the phase) or one generator is
// traded for +Z_k after absorbing it into the other anticommuting rows.
RefUpdate reference_update(std::size_t n,
                           const std::vector<PauliString>& rows,
                           std::size_t k) {
  RefUpdate out;
  std::size_t pivot = rows.size();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].x[k]) {
      pivot = j;
      break;
    }
  }
  if (pivot == rows.size()) {
    // Z_k commutes with every generator: solve for the member +-Z_k.
    std::vector<BitRow> a(2 * n, BitRow(rows.size(), 0));
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const BitRow v = bit_vector(rows[j]);
      for (std::size_t b = 0; b < 2 * n; ++b) a[b][j] = v[b];
    }
    const BitRow target = bit_vector(PauliString::single(n, k, 'Z'));
    auto coeffs = gf2_solve(std::move(a), target);
    if (!coeffs)
      throw std::logic_error("commuting Z_k must lie in the full group");
    PauliString prod = PauliString::identity(n);
    for (std::size_t j = 0; j < rows.size(); ++j)
      if ((*coeffs)[j]) prod = pauli_product(prod, rows[j]);
    if (prod.phase_power % 2 != 0)
      throw std::logic_error("group member with imaginary phase");
    out.deterministic = true;
    out.outcome = prod.phase_power == 2 ? 1 : 0;
    return out;
  }
  out.rows = rows;
  for (std::size_t j = 0; j < rows.size(); ++j)
    if (j != pivot && rows[j].x[k])
      out.rows[j] = pauli_product(out.rows[j], rows[pivot]);
  out.rows[pivot] = PauliString::single(n, k, 'Z');
  out.zk_row = pivot;
  return out;
}

}  // namespace

PauliString PauliString::identity(std::size_t n) {
  if (n == 0) throw ShapeError("pauli needs at least one site");
  PauliString p;
  p.n = n;
  p.x.assign(n, 0);
  p.z.assign(n, 0);
  return p;
}

PauliString PauliString::single(std::size_t n, std::size_t site, char op) {
  PauliString p = identity(n);
  if (site >= n) throw ShapeError("pauli site out of range");
  switch (op) {
    case 'X':
      p.x[site] = 1;
      break;
    case 'Y':
      p.x[site] = 1;
      p.z[site] = 1;
      p.phase_power = 1;
      break;
    case 'Z':
      p.z[site] = 1;
      break;
    default:
      throw ShapeError("pauli letter must be X, Y, or Z");
  }
  return p;
}

Complex pauli_phase(const PauliString& p) {
  static const Complex table[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return table[mod4(p.phase_power)];
}

PauliString pauli_product(const PauliString& a, const PauliString& b) {
  require_same_length(a, b);
  PauliString p = PauliString::identity(a.n);
  int swaps = 0;
  for (std::size_t m = 0; m < a.n; ++m) {
    swaps += a.z[m] & b.x[m];
    p.x[m] = a.x[m] ^ b.x[m];
    p.z[m] = a.z[m] ^ b.z[m];
  }
  p.phase_power = mod4(a.phase_power + b.phase_power + 2 * swaps);
  return p;
}

int symplectic_product(const PauliString& a, const PauliString& b) {
  require_same_length(a, b);
  int acc = 0;
  for (std::size_t m = 0; m < a.n; ++m)
    acc ^= (a.x[m] & b.z[m]) ^ (a.z[m] & b.x[m]);
  return acc;
}

bool commutes(const PauliString& a, const PauliString& b) {
  return symplectic_product(a, b) == 0;
}

std::string to_text(const PauliString& p) {
  int y_count = 0;
  for (std::size_t m = 0; m < p.n; ++m) y_count += p.x[m] & p.z[m];
  static const char* signs[4] = {"+", "+i", "-", "-i"};
  std::string out = signs[mod4(p.phase_power - y_count)];
  for (std::size_t m = 0; m < p.n; ++m) {
    const int key = p.x[m] * 2 + p.z[m];
    out += "IZXY"[key];
  }
  return out;
}

PauliString parse_pauli(const std::string& text) {
  std::size_t pos = 0;
  int sign_power = 0;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    sign_power = text[pos] == '-' ? 2 : 0;
    ++pos;
  } else {
    throw ShapeError("pauli text must start with + or -");
  }
  if (pos < text.size() && text[pos] == 'i') {
    sign_power += 1;
    ++pos;
  }
  if (pos == text.size()) throw ShapeError("pauli text has no letters");
  PauliString p = PauliString::identity(text.size() - pos);
  int y_count = 0;
  for (std::size_t m = 0; m < p.n; ++m, ++pos) {
    switch (text[pos]) {
      case 'I':
        break;
      case 'X':
        p.x[m] = 1;
        break;
      case 'Y':
        p.x[m] = 1;
        p.z[m] = 1;
        ++y_count;
        break;
      case 'Z':
        p.z[m] = 1;
        break;
      default:
        throw ShapeError("pauli letter must be one of IXYZ");
    }
  }
  p.phase_power = mod4(sign_power + y_count);
  return p;
}

PauliString restrict_pauli(const PauliString& p,
                           const std::vector<std::size_t>& keep) {
  PauliString out = PauliString::identity(keep.size());
  out.phase_power = p.phase_power;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i] >= p.n) throw ShapeError("kept site out of range");
    if (i > 0 && keep[i] <= keep[i - 1])
      throw ShapeError("kept sites must be strictly ascending");
    out.x[i] = p.x[keep[i]];
    out.z[i] = p.z[keep[i]];
  }
  return out;
}

bool independent(const CheckMatrix& r) {
  std::vector<BitRow> a;
  a.reserve(r.rows.size());
  for (const auto& row : r.rows) {
    if (row.n != r.n) throw ShapeError("check matrix row length mismatch");
    a.push_back(bit_vector(row));
  }
  return gf2_rank(std::move(a)) == r.rows.size();
}

PauliString anticommuting_partner(const CheckMatrix& r, std::size_t i) {
  if (i >= r.rows.size()) throw ShapeError("row index out of range");
  if (!independent(r)) throw ShapeError("check matrix rows are dependent");
  const std::size_t n = r.n;
  // Row j of the system: sum_m z_j[m] u_x[m] + x_j[m] u_z[m] = delta_ij.
  std::vector<BitRow> a(r.rows.size(), BitRow(2 * n, 0));
  BitRow rhs(r.rows.size(), 0);
  for (std::size_t j = 0; j < r.rows.size(); ++j) {
    for (std::size_t m = 0; m < n; ++m) {
      a[j][m] = r.rows[j].z[m];
      a[j][n + m] = r.rows[j].x[m];
    }
  }
  rhs[i] = 1;
  auto u = gf2_solve(std::move(a), std::move(rhs));
  if (!u) throw std::logic_error("independent rows guarantee a partner");
  PauliString g = PauliString::identity(n);
  for (std::size_t m = 0; m < n; ++m) {
    g.x[m] = (*u)[m];
    g.z[m] = (*u)[n + m];
  }
  for (std::size_t j = 0; j < r.rows.size(); ++j)
    if (commutes(g, r.rows[j]) != (j != i))
      throw std::logic_error("partner violates its commutation pattern");
  return g;
}

MeasurementCorrection post_measurement_correction(const CheckMatrix& r,
                                                  std::size_t k) {
  if (k >= r.n) throw ShapeError("measured qubit out of range");
  if (r.rows.size() != r.n)
    throw ShapeError("measurement update needs a full generator set");
  RefUpdate u = reference_update(r.n, r.rows, k);
  MeasurementCorrection out;
  if (u.deterministic) {
    out.deterministic = true;
    out.outcome = u.outcome;
    out.correction = PauliString::identity(r.n);
    return out;
  }
  out.correction =
      anticommuting_partner(CheckMatrix{r.n, u.rows}, u.zk_row);
  return out;
}

PauliString trajectory_correction(const CheckMatrix& r,
                                  const std::vector<std::size_t>& qubits,
                                  const std::vector<int>& outcome) {
  if (qubits.size() != outcome.size())
    throw ShapeError("one outcome bit per measured qubit");
  if (r.rows.size() != r.n)
    throw ShapeError("measurement update needs a full generator set");
  std::vector<std::uint8_t> seen(r.n, 0);
  for (std::size_t k : qubits) {
    if (k >= r.n) throw ShapeError("measured qubit out of range");
    if (seen[k]) throw ShapeError("measured qubits must be distinct");
    seen[k] = 1;
  }
  for (int b : outcome)
    if (b != 0 && b != 1) throw ShapeError("outcome bits must be 0 or 1");

  PauliString g = PauliString::identity(r.n);
  std::vector<PauliString> cur = r.rows;
  for (std::size_t t = 0; t < qubits.size(); ++t) {
    const std::size_t k = qubits[t];
    const int effective = outcome[t] ^ g.x[k];
    RefUpdate u = reference_update(r.n, cur, k);
    if (u.deterministic) {
      if (effective != u.outcome)
        throw std::invalid_argument(
            "measurement record has probability zero");
      continue;
    }
    cur = std::move(u.rows);
    if (effective == 1) {
      PauliString piece =
          anticommuting_partner(CheckMatrix{r.n, cur}, u.zk_row);
      g = pauli_product(piece, g);
    }
  }
  return g;
}

StabTableau::StabTableau(std::size_t n) : n_(n) {
  if (n == 0) throw ShapeError("tableau needs at least one qubit");
  rows_.reserve(n);
  for (std::size_t j = 0; j < n; ++j)
    rows_.push_back(PauliString::single(n, j, 'Z'));
}

void StabTableau::apply_h(std::size_t q) {
  if (q >= n_) throw ShapeError("qubit out of range");
  for (auto& row : rows_) {
    row.phase_power = mod4(row.phase_power + 2 * (row.x[q] & row.z[q]));
    std::swap(row.x[q], row.z[q]);
  }
}

void StabTableau::apply_s(std::size_t q) {
  if (q >= n_) throw ShapeError("qubit out of range");
  for (auto& row : rows_) {
    row.phase_power = mod4(row.phase_power + row.x[q]);
    row.z[q] ^= row.x[q];
  }
}

void StabTableau::apply_x(std::size_t q) {
  if (q >= n_) throw ShapeError("qubit out of range");
  for (auto& row : rows_)
    row.phase_power = mod4(row.phase_power + 2 * row.z[q]);
}

void StabTableau::apply_z(std::size_t q) {
  if (q >= n_) throw ShapeError("qubit out of range");
  for (auto& row : rows_)
    row.phase_power = mod4(row.phase_power + 2 * row.x[q]);
}

void StabTableau::apply_cnot(std::size_t control, std::size_t target) {
  if (control >= n_ || target >= n_ || control == target)
    throw ShapeError("cnot wires must be distinct and in range");
  // Sign-free in the X^x Z^z convention.
  for (auto& row : rows_) {
    row.x[target] ^= row.x[control];
    row.z[control] ^= row.z[target];
  }
}

StabTableau::MeasureResult StabTableau::measure(std::size_t q, Rng& rng) {
  if (q >= n_) throw ShapeError("qubit out of range");
  RefUpdate u = reference_update(n_, rows_, q);
  if (u.deterministic) return MeasureResult{u.outcome, 1.0, false};
  const int bit = static_cast<int>(rng.integer(2));
  rows_ = std::move(u.rows);
  rows_[u.zk_row].phase_power = 2 * bit;
  return MeasureResult{bit, 0.5, true};
}

StabTableau::MeasureResult StabTableau::measure_forced(std::size_t q,
                                                       int bit) {
  if (q >= n_) throw ShapeError("qubit out of range");
  if (bit != 0 && bit != 1) throw ShapeError("outcome bit must be 0 or 1");
  RefUpdate u = reference_update(n_, rows_, q);
  if (u.deterministic) {
    if (u.outcome != bit)
      throw std::invalid_argument("forced outcome has probability zero");
    return MeasureResult{bit, 1.0, false};
  }
  rows_ = std::move(u.rows);
  rows_[u.zk_row].phase_power = 2 * bit;
  return MeasureResult{bit, 0.5, true};
}

StabTableau random_stabilizer(std::size_t n, std::size_t gate_count,
                              std::uint64_t seed) {
  StabTableau t(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < gate_count; ++i) {
    const std::uint64_t op = rng.integer(n > 1 ? 3 : 2);
    if (op == 0) {
      t.apply_h(rng.integer(n));
    } else if (op == 1) {
      t.apply_s(rng.integer(n));
    } else {
      const std::size_t c = rng.integer(n);
      std::size_t tg = rng.integer(n - 1);
      if (tg >= c) ++tg;
      t.apply_cnot(c, tg);
    }
  }
  return t;
}

namespace {

bool matrix_matches(const DenseTensor& u, const std::vector<Complex>& ref) {
  if (u.size() != ref.size()) return false;
  for (std::size_t i = 0; i < ref.size(); ++i)
    if (std::abs(u[i] - ref[i]) > 1e-12) return false;
  return true;
}

}  // namespace

void apply_clifford_gate(StabTableau& t, const Gate& g) {
  const double h = 1.0 / std::sqrt(2.0);
  if (g.sites.size() == 1) {
    const std::size_t q = g.sites[0];
    if (matrix_matches(g.unitary, {{h, 0}, {h, 0}, {h, 0}, {-h, 0}})) {
      t.apply_h(q);
    } else if (matrix_matches(g.unitary, {{0, 0}, {1, 0}, {1, 0}, {0, 0}})) {
      t.apply_x(q);
    } else if (matrix_matches(g.unitary,
                              {{1, 0}, {0, 0}, {0, 0}, {-1, 0}})) {
      t.apply_z(q);
    } else if (matrix_matches(g.unitary, {{1, 0}, {0, 0}, {0, 0}, {0, 1}})) {
      t.apply_s(q);
    } else {
      throw std::invalid_argument("gate is outside the supported Clifford set");
    }
    return;
  }
  std::vector<Complex> down(16), up(16);
  down[0 * 4 + 0] = down[1 * 4 + 1] = down[3 * 4 + 2] = down[2 * 4 + 3] = 1.0;
  up[0 * 4 + 0] = up[3 * 4 + 1] = up[2 * 4 + 2] = up[1 * 4 + 3] = 1.0;
  if (matrix_matches(g.unitary, down)) {
    t.apply_cnot(g.sites[0], g.sites[1]);
  } else if (matrix_matches(g.unitary, up)) {
    t.apply_cnot(g.sites[1], g.sites[0]);
  } else {
    throw std::invalid_argument("gate is outside the supported Clifford set");
  }
}

StabTableau tableau_of(const StaticCircuit& c) {
  validate_circuit(c);
  StabTableau t(c.n_qubits);
  for (const auto& layer : c.layers)
    for (const Gate& g : layer) apply_clifford_gate(t, g);
  return t;
}

}  // namespace dqc
