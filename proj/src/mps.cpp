#include "dqc/mps.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dqc {

namespace {

using RowMat =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

const std::vector<std::string> kSiteLabels{"l", "p", "r"};

std::size_t left_dim(const DenseTensor& t) { return t.shape()[0]; }
std::size_t right_dim(const DenseTensor& t) { return t.shape()[2]; }

ConstMapMat mat_lp_r(const DenseTensor& t) {
  return ConstMapMat(t.data().data(), left_dim(t) * 2, right_dim(t));
}

ConstMapMat mat_l_pr(const DenseTensor& t) {
  return ConstMapMat(t.data().data(), left_dim(t), 2 * right_dim(t));
}

DenseTensor site_from_matrix(const RowMat& m, std::size_t l, std::size_t r) {
  DenseTensor t({l, 2, r}, kSiteLabels);
  std::copy(m.data(), m.data() + m.size(), t.data().begin());
  return t;
}

// Thin QR: m = q r with q having orthonormal columns.
void thin_qr(const RowMat& m, RowMat& q, RowMat& r) {
  Eigen::HouseholderQR<RowMat> qr(m);
  const Eigen::Index k = std::min(m.rows(), m.cols());
  q = qr.householderQ() * RowMat::Identity(m.rows(), k);
  r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

void check_gate_tensor(const DenseTensor& u, std::size_t n_sites) {
  const std::size_t dim = n_sites == 1 ? 2 : 4;
  if (u.size() != dim * dim)
    throw ShapeError("gate tensor has wrong element count");
  ConstMapMat m(u.data().data(), dim, dim);
  const double dev = (m * m.adjoint() - RowMat::Identity(dim, dim))
                         .cwiseAbs()
                         .maxCoeff();
  if (dev > 1e-8)
    throw ShapeError("gate is not unitary (deviation " +
                     std::to_string(dev) + ")");
}

}  // namespace

MPS::MPS(std::vector<DenseTensor> sites) : sites_(std::move(sites)) {
  if (sites_.empty()) throw ShapeError("MPS needs at least one site");
  for (std::size_t i = 0; i < sites_.size(); ++i) check_site(sites_[i], i);
}

void MPS::check_site(const DenseTensor& t, std::size_t i) const {
  if (t.rank() != 3 || t.shape()[1] != 2)
    throw ShapeError("MPS site must have shape (l, 2, r)");
  if (t.labels() != kSiteLabels)
    throw ShapeError("MPS site labels must be (l, p, r)");
  if (i == 0 && t.shape()[0] != 1)
    throw ShapeError("left boundary bond must have extent 1");
  if (i + 1 == sites_.size() && t.shape()[2] != 1)
    throw ShapeError("right boundary bond must have extent 1");
  if (i > 0 && sites_[i - 1].shape()[2] != t.shape()[0])
    throw ShapeError("adjacent MPS bonds disagree");
}

MPS MPS::all_zero(std::size_t n_sites) {
  return product_state(std::vector<int>(n_sites, 0));
}

MPS MPS::product_state(const std::vector<int>& bits) {
  if (bits.empty()) throw ShapeError("MPS needs at least one site");
  std::vector<DenseTensor> sites;
  sites.reserve(bits.size());
  for (int b : bits) {
    if (b != 0 && b != 1) throw ShapeError("product state bits must be 0/1");
    DenseTensor t({1, 2, 1}, kSiteLabels);
    t[static_cast<std::size_t>(b)] = 1.0;
    sites.push_back(std::move(t));
  }
  MPS s(std::move(sites));
  s.center_ = 0;
  return s;
}

DenseTensor& MPS::site(std::size_t i) {
  center_.reset();
  return sites_[i];
}

std::size_t MPS::bond_dim(std::size_t bond) const {
  if (bond > sites_.size()) throw ShapeError("bond index out of range");
  if (bond == sites_.size()) return 1;
  return left_dim(sites_[bond]);
}

std::size_t MPS::max_bond_dim() const {
  std::size_t m = 1;
  for (const auto& t : sites_) m = std::max(m, right_dim(t));
  return m;
}

void MPS::canonicalize(std::size_t center) {
  if (center >= sites_.size()) throw ShapeError("center out of range");
  for (std::size_t i = 0; i < center; ++i) {
    RowMat q, r;
    thin_qr(mat_lp_r(sites_[i]), q, r);
    const std::size_t k = static_cast<std::size_t>(q.cols());
    sites_[i] = site_from_matrix(q, left_dim(sites_[i]), k);
    RowMat next = r * mat_l_pr(sites_[i + 1]);
    sites_[i + 1] = site_from_matrix(next, k, right_dim(sites_[i + 1]));
  }
  for (std::size_t i = sites_.size(); i-- > center + 1;) {
    RowMat m = mat_l_pr(sites_[i]);
    RowMat q, r;
    thin_qr(m.adjoint(), q, r);
    const std::size_t k = static_cast<std::size_t>(q.cols());
    RowMat qd = q.adjoint();
    sites_[i] = site_from_matrix(qd, k, right_dim(sites_[i]));
    RowMat prev = mat_lp_r(sites_[i - 1]) * r.adjoint();
    sites_[i - 1] = site_from_matrix(prev, left_dim(sites_[i - 1]), k);
  }
  center_ = center;
}

double MPS::norm() const {
  if (center_) return sites_[*center_].norm();
  return std::sqrt(std::abs(overlap(*this, *this)));
}

void MPS::normalize() {
  if (!center_) canonicalize(0);
  const double n = sites_[*center_].norm();
  if (n == 0.0) throw std::runtime_error("cannot normalize a zero state");
  sites_[*center_] *= Complex{1.0 / n, 0.0};
}

Complex overlap(const MPS& bra, const MPS& ket) {
  if (bra.size() != ket.size())
    throw ShapeError("overlap requires equal site counts");
  RowMat t = RowMat::Ones(1, 1);
  for (std::size_t i = 0; i < ket.size(); ++i) {
    const auto& a = bra.site(i);
    const auto& b = ket.site(i);
    // tmp[alpha, (p, beta')] = sum_beta t[alpha, beta] b[beta, (p, beta')]
    RowMat tmp = t * mat_l_pr(b);
    // view tmp as ((alpha, p), beta') and close with the bra site
    MapMat tmp2(tmp.data(), left_dim(a) * 2, right_dim(b));
    t = mat_lp_r(a).adjoint() * tmp2;
  }
  return t(0, 0);
}

double fidelity(const MPS& a, const MPS& b) {
  const double na = std::norm(overlap(a, a)), nb = std::norm(overlap(b, b));
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::norm(overlap(a, b)) / std::sqrt(na * nb);
}

namespace {

// One overlap transfer step from the left: t'[b', k'] with bra conjugated.
RowMat transfer_left(const RowMat& t, const DenseTensor& bra,
                     const DenseTensor& ket) {
  RowMat tmp = t * mat_l_pr(ket);
  MapMat tmp2(tmp.data(), left_dim(bra) * 2, right_dim(ket));
  return mat_lp_r(bra).adjoint() * tmp2;
}

// One overlap transfer step from the right: t'[b, k] with bra conjugated.
RowMat transfer_right(const RowMat& t, const DenseTensor& bra,
                      const DenseTensor& ket) {
  RowMat tmp = mat_lp_r(ket) * t.transpose();
  MapMat tmp2(tmp.data(), left_dim(ket), 2 * right_dim(bra));
  RowMat kl_bl = tmp2 * mat_l_pr(bra).adjoint();
  return kl_bl.transpose();
}

DenseTensor tensor_from_mat(const RowMat& m, const std::string& row_label,
                            const std::string& col_label) {
  DenseTensor t({static_cast<std::size_t>(m.rows()),
                 static_cast<std::size_t>(m.cols())},
                {row_label, col_label});
  std::copy(m.data(), m.data() + m.size(), t.data().begin());
  return t;
}

}  // namespace

DenseTensor gate_environment(const MPS& bra, const MPS& ket,
                             const std::vector<std::size_t>& sites) {
  if (bra.size() != ket.size())
    throw ShapeError("gate_environment requires equal site counts");
  if (sites.empty() || sites.size() > 2)
    throw ShapeError("gates act on one or two sites");
  if (sites.size() == 2 && sites[1] != sites[0] + 1)
    throw ShapeError("two-site gates act on adjacent sites");
  const std::size_t q = sites[0], last = sites.back();
  if (last >= ket.size()) throw ShapeError("gate site out of range");

  RowMat lt = RowMat::Ones(1, 1);
  for (std::size_t i = 0; i < q; ++i)
    lt = transfer_left(lt, bra.site(i), ket.site(i));
  RowMat rt = RowMat::Ones(1, 1);
  for (std::size_t i = ket.size(); i-- > last + 1;)
    rt = transfer_right(rt, bra.site(i), ket.site(i));

  const DenseTensor lten = tensor_from_mat(lt, "bw", "bf");
  const DenseTensor rten = tensor_from_mat(rt, "dw", "df");
  auto bra_site = [&](std::size_t i, const char* o, const char* l,
                      const char* r) {
    return bra.site(i).conjugated().relabeled({l, o, r});
  };

  if (sites.size() == 1) {
    auto t = contract(lten, bra_site(q, "o0", "bw", "dw"), {{"bw", "bw"}});
    t = contract(t, ket.site(q).relabeled({"bf", "i0", "df"}), {{"bf", "bf"}});
    t = contract(t, rten, {{"dw", "dw"}, {"df", "df"}});
    return DenseTensor(
        {2, 2}, {"o", "i"},
        std::move(t.permuted(std::vector<std::string>{"o0", "i0"}).data()));
  }

  auto t = contract(lten, bra_site(q, "o0", "bw", "cw"), {{"bw", "bw"}});
  t = contract(t, ket.site(q).relabeled({"bf", "i0", "cf"}), {{"bf", "bf"}});
  t = contract(t, bra_site(q + 1, "o1", "cw", "dw"), {{"cw", "cw"}});
  t = contract(t, ket.site(q + 1).relabeled({"cf", "i1", "df"}),
               {{"cf", "cf"}});
  t = contract(t, rten, {{"dw", "dw"}, {"df", "df"}});
  return DenseTensor({4, 4}, {"o", "i"},
                     std::move(t.permuted({"o0", "o1", "i0", "i1"}).data()));
}

MPS with_inserted_bits(const MPS& s, const std::vector<std::size_t>& positions,
                       const std::vector<int>& bits) {
  if (positions.size() != bits.size())
    throw ShapeError("one bit per inserted wire");
  const std::size_t total = s.size() + positions.size();
  for (std::size_t j = 0; j < positions.size(); ++j) {
    if (positions[j] >= total)
      throw ShapeError("inserted wire out of range");
    if (j > 0 && positions[j] <= positions[j - 1])
      throw ShapeError("inserted wires must be strictly ascending");
    if (bits[j] != 0 && bits[j] != 1)
      throw ShapeError("inserted bits must be 0 or 1");
  }

  std::vector<DenseTensor> out;
  out.reserve(total);
  std::size_t next_orig = 0, next_ins = 0;
  for (std::size_t w = 0; w < total; ++w) {
    if (next_ins < positions.size() && positions[next_ins] == w) {
      const std::size_t d = s.bond_dim(next_orig);
      DenseTensor delta({d, 2, d}, kSiteLabels);
      for (std::size_t b = 0; b < d; ++b)
        delta.at({b, static_cast<std::size_t>(bits[next_ins]), b}) =
            Complex{1.0, 0.0};
      out.push_back(std::move(delta));
      ++next_ins;
    } else {
      out.push_back(s.site(next_orig++));
    }
  }
  return MPS(std::move(out));
}

void apply_gate_inplace(MPS& s, const DenseTensor& unitary,
                        const std::vector<std::size_t>& sites,
                        const Truncation& trunc) {
  if (sites.empty() || sites.size() > 2)
    throw ShapeError("gates act on one or two sites");
  for (auto q : sites)
    if (q >= s.size()) throw ShapeError("gate site out of range");
  check_gate_tensor(unitary, sites.size());

  if (sites.size() == 1) {
    // one-site unitaries preserve every isometry condition
    const std::size_t q = sites[0];
    ConstMapMat um(unitary.data().data(), 2, 2);
    DenseTensor& t = s.sites_[q];
    const std::size_t l = left_dim(t), r = right_dim(t);
    for (std::size_t il = 0; il < l; ++il) {
      MapMat block(t.data().data() + il * 2 * r, 2, r);
      block = (um * block).eval();
    }
    return;
  }

  if (sites[1] != sites[0] + 1)
    throw ShapeError("two-site gates act on adjacent sites");
  const std::size_t q = sites[0];
  if (!s.center_ || *s.center_ < q || *s.center_ > q + 1)
    s.canonicalize(q);

  const DenseTensor& a = s.sites_[q];
  const DenseTensor& b = s.sites_[q + 1];
  const std::size_t l = left_dim(a), r = right_dim(b);

  // theta[(l, p0), (p1, r)] merges the pair with the gauge center inside
  RowMat theta = mat_lp_r(a) * mat_l_pr(b);
  const double theta_norm = theta.norm();

  ConstMapMat um(unitary.data().data(), 4, 4);
  RowMat out(theta.rows(), theta.cols());
  for (std::size_t il = 0; il < l; ++il) {
    ConstMapMat block(theta.data() + il * 2 * 2 * r, 4, r);
    MapMat oblock(out.data() + il * 2 * 2 * r, 4, r);
    oblock = um * block;
  }

  DenseTensor merged(
      {l, 2, 2, r}, {"l", "p0", "p1", "r"},
      std::vector<Complex>(out.data(), out.data() + out.size()));
  SvdFactors f = svd_split_truncated(merged, {"l", "p0"}, trunc.max_bond,
                                     trunc.cutoff, "b");
  const std::size_t k = f.singular_values.size();

  // restore the pre-split norm when truncation discarded weight
  double kept = 0.0;
  for (double sv : f.singular_values) kept += sv * sv;
  const double scale = kept > 0.0 ? theta_norm / std::sqrt(kept) : 1.0;

  s.sites_[q] =
      DenseTensor({l, 2, k}, kSiteLabels, std::move(f.left.data()));
  DenseTensor right({k, 2, r}, kSiteLabels, std::move(f.right.data()));
  MapMat rm(right.data().data(), k, 2 * r);
  for (std::size_t i = 0; i < k; ++i)
    rm.row(i) *= f.singular_values[i] * scale;
  s.sites_[q + 1] = std::move(right);
  s.center_ = q + 1;
}

MPS apply_gate(const MPS& s, const DenseTensor& unitary,
               const std::vector<std::size_t>& sites,
               const Truncation& trunc) {
  MPS out = s;
  apply_gate_inplace(out, unitary, sites, trunc);
  return out;
}

ProjectionResult project(const MPS& s, const std::vector<std::size_t>& sites,
                         const std::vector<int>& outcome) {
  if (sites.size() != outcome.size())
    throw ShapeError("projection site and outcome counts differ");
  if (sites.empty()) throw ShapeError("projection needs at least one site");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i] >= s.size()) throw ShapeError("projection site out of range");
    if (i > 0 && sites[i] <= sites[i - 1])
      throw ShapeError("projection sites must be strictly ascending");
    if (outcome[i] != 0 && outcome[i] != 1)
      throw ShapeError("projection outcomes must be 0/1");
  }
  if (sites.size() >= s.size())
    throw ShapeError("projection must leave at least one site");

  std::vector<DenseTensor> kept;
  kept.reserve(s.size() - sites.size());
  RowMat carry = RowMat::Ones(1, 1);
  bool carry_dirty = false;  // measured slices not yet absorbed
  std::size_t next_measured = 0;

  for (std::size_t i = 0; i < s.size(); ++i) {
    const DenseTensor& t = s.site(i);
    const std::size_t l = left_dim(t), r = right_dim(t);
    const bool measured =
        next_measured < sites.size() && sites[next_measured] == i;
    if (measured) {
      const std::size_t bit =
          static_cast<std::size_t>(outcome[next_measured++]);
      // slice fixes the physical index: rows l, cols r
      RowMat slice(l, r);
      for (std::size_t il = 0; il < l; ++il)
        for (std::size_t ir = 0; ir < r; ++ir)
          slice(il, ir) = t.data()[(il * 2 + bit) * r + ir];
      carry = (carry * slice).eval();
      carry_dirty = true;
    } else {
      RowMat absorbed = carry * mat_l_pr(t);
      const std::size_t lout = static_cast<std::size_t>(carry.rows());
      kept.push_back(site_from_matrix(absorbed, lout, r));
      carry = RowMat::Identity(r, r);
      carry_dirty = false;
    }
  }

  if (carry_dirty) {
    // trailing measured sites left carry as a column against the last
    // kept site's right bond
    RowMat last = mat_lp_r(kept.back()) * carry;
    kept.back() = site_from_matrix(last, left_dim(kept.back()),
                                   static_cast<std::size_t>(carry.cols()));
  }

  ProjectionResult res;
  res.state = MPS(std::move(kept));
  const double p = std::abs(overlap(res.state, res.state).real());
  res.probability = p;
  res.degenerate = p < kProbabilityFloor;
  if (!res.degenerate) res.state.normalize();
  return res;
}

SampleResult sample_outcome(const MPS& s,
                            const std::vector<std::size_t>& sites, Rng& rng) {
  for (std::size_t i = 1; i < sites.size(); ++i)
    if (sites[i] <= sites[i - 1])
      throw ShapeError("sample sites must be strictly ascending");
  SampleResult res;
  res.probability = 1.0;
  MPS work = s;
  std::size_t removed = 0;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const std::size_t adj = sites[k] - removed;
    ProjectionResult zero = project(work, {adj}, {0});
    const double u = rng.uniform();
    int bit;
    ProjectionResult* chosen;
    ProjectionResult one;
    if (u < zero.probability) {
      bit = 0;
      chosen = &zero;
    } else {
      one = project(work, {adj}, {1});
      bit = 1;
      chosen = &one;
    }
    if (chosen->degenerate)
      throw std::runtime_error("sampled into a zero-probability branch");
    res.outcome.push_back(bit);
    res.probability *= chosen->probability;
    work = std::move(chosen->state);
    ++removed;
  }
  return res;
}

double entanglement_entropy(const MPS& s, std::size_t cut) {
  if (cut == 0 || cut >= s.size())
    throw ShapeError("cut must split the chain into two nonempty halves");
  MPS work = s;
  work.canonicalize(cut);
  const DenseTensor& c = work.site(cut);
  SvdFactors f = svd_split(c, {"l"});
  double total = 0.0;
  for (double sv : f.singular_values) total += sv * sv;
  if (total <= 0.0) return 0.0;
  double entropy = 0.0;
  for (double sv : f.singular_values) {
    const double q = sv * sv / total;
    if (q > 1e-18) entropy -= q * std::log2(q);
  }
  return entropy;
}

MPS make_ghz(std::size_t n) {
  if (n == 0) throw ShapeError("GHZ needs at least one qubit");
  const double amp = 1.0 / std::sqrt(2.0);
  std::vector<DenseTensor> sites;
  if (n == 1) {
    DenseTensor t({1, 2, 1}, kSiteLabels);
    t[0] = amp;
    t[1] = amp;
    sites.push_back(std::move(t));
  } else {
    DenseTensor first({1, 2, 2}, kSiteLabels);
    first.at({0, 0, 0}) = amp;
    first.at({0, 1, 1}) = amp;
    sites.push_back(std::move(first));
    for (std::size_t i = 1; i + 1 < n; ++i) {
      DenseTensor mid({2, 2, 2}, kSiteLabels);
      mid.at({0, 0, 0}) = 1.0;
      mid.at({1, 1, 1}) = 1.0;
      sites.push_back(std::move(mid));
    }
    DenseTensor last({2, 2, 1}, kSiteLabels);
    last.at({0, 0, 0}) = 1.0;
    last.at({1, 1, 0}) = 1.0;
    sites.push_back(std::move(last));
  }
  MPS s(std::move(sites));
  s.canonicalize(0);
  return s;
}

namespace {

int bit_at(std::uint64_t value, std::size_t site, std::size_t n) {
  return static_cast<int>((value >> (n - 1 - site)) & 1ull);
}

// Right-to-left SVD pass dropping numerically zero Schmidt directions.
void compress(MPS& s, double cutoff) {
  s.canonicalize(s.size() - 1);
  for (std::size_t i = s.size(); i-- > 1;) {
    const std::size_t r = right_dim(s.site(i));
    SvdFactors f = svd_split_truncated(s.site(i), {"l"}, 0, cutoff, "b");
    const std::size_t k = f.singular_values.size();
    const std::size_t l_old = f.left.shape()[0];
    s.site(i) = DenseTensor({k, 2, r}, kSiteLabels,
                            std::move(f.right.data()));
    // absorb (left * diag(s)) into the previous site
    ConstMapMat lmap(f.left.data().data(), l_old, k);
    RowMat scaled = lmap;
    for (std::size_t c = 0; c < k; ++c)
      scaled.col(c) *= f.singular_values[c];
    RowMat prev = mat_lp_r(s.site(i - 1)) * scaled;
    s.site(i - 1) = site_from_matrix(prev, left_dim(s.site(i - 1)), k);
  }
  s.canonicalize(0);
}

}  // namespace

MPS make_subset_state(std::size_t n,
                      const std::vector<std::uint64_t>& basis) {
  if (n == 0 || n > 63) throw ShapeError("subset state needs 1..63 qubits");
  if (basis.empty()) throw ShapeError("subset state needs basis states");
  const std::uint64_t limit = (1ull << n) - 1ull;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis[i] > limit)
      throw ShapeError("subset basis state out of range");
    for (std::size_t j = i + 1; j < basis.size(); ++j)
      if (basis[i] == basis[j])
        throw ShapeError("subset basis states must be distinct");
  }
  const std::size_t k = basis.size();
  const double amp = 1.0 / std::sqrt(static_cast<double>(k));

  std::vector<DenseTensor> sites;
  if (n == 1) {
    DenseTensor t({1, 2, 1}, kSiteLabels);
    for (auto v : basis) t[v & 1ull] = amp;
    sites.push_back(std::move(t));
  } else {
    DenseTensor first({1, 2, k}, kSiteLabels);
    for (std::size_t j = 0; j < k; ++j)
      first.at({0, static_cast<std::size_t>(bit_at(basis[j], 0, n)), j}) =
          amp;
    sites.push_back(std::move(first));
    for (std::size_t s = 1; s + 1 < n; ++s) {
      DenseTensor mid({k, 2, k}, kSiteLabels);
      for (std::size_t j = 0; j < k; ++j)
        mid.at({j, static_cast<std::size_t>(bit_at(basis[j], s, n)), j}) =
            1.0;
      sites.push_back(std::move(mid));
    }
    DenseTensor last({k, 2, 1}, kSiteLabels);
    for (std::size_t j = 0; j < k; ++j)
      last.at({j, static_cast<std::size_t>(bit_at(basis[j], n - 1, n)), 0}) =
          1.0;
    sites.push_back(std::move(last));
  }
  MPS s(std::move(sites));
  compress(s, 1e-28);
  s.normalize();
  return s;
}

MPS make_subset_state(std::size_t n, std::size_t k, Rng& rng) {
  if (n > 62) throw ShapeError("random subset limited to 62 qubits");
  const std::uint64_t space = 1ull << n;
  if (k == 0 || k > space)
    throw ShapeError("subset size must be in [1, 2^n]");
  std::vector<std::uint64_t> picked;
  picked.reserve(k);
  while (picked.size() < k) {
    const std::uint64_t cand = rng.integer(space);
    if (std::find(picked.begin(), picked.end(), cand) == picked.end())
      picked.push_back(cand);
  }
  std::sort(picked.begin(), picked.end());
  return make_subset_state(n, picked);
}

MPS make_random_mps(std::size_t n, std::size_t chi, Rng& rng) {
  if (n == 0) throw ShapeError("MPS needs at least one site");
  if (chi == 0) throw ShapeError("bond dimension must be positive");
  auto bond_cap = [&](std::size_t b) {
    // exact Schmidt-rank cap from either end
    const std::size_t from_ends = std::min(b, n - b);
    if (from_ends >= 40) return chi;
    return std::min(chi, std::size_t{1} << from_ends);
  };
  std::vector<DenseTensor> sites;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t l = bond_cap(i), r = bond_cap(i + 1);
    DenseTensor t({l, 2, r}, kSiteLabels);
    for (auto& x : t.data()) x = rng.complex_normal();
    sites.push_back(std::move(t));
  }
  MPS s(std::move(sites));
  s.canonicalize(0);
  s.normalize();
  return s;
}

MPO::MPO(std::vector<DenseTensor> site_tensors)
    : sites(std::move(site_tensors)) {
  if (sites.empty()) throw ShapeError("MPO needs at least one site");
  const std::vector<std::string> want{"l", "o", "i", "r"};
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& t = sites[i];
    if (t.rank() != 4 || t.shape()[1] != 2 || t.shape()[2] != 2)
      throw ShapeError("MPO site must have shape (l, 2, 2, r)");
    if (t.labels() != want)
      throw ShapeError("MPO site labels must be (l, o, i, r)");
    if (i == 0 && t.shape()[0] != 1)
      throw ShapeError("left MPO boundary bond must have extent 1");
    if (i + 1 == sites.size() && t.shape()[3] != 1)
      throw ShapeError("right MPO boundary bond must have extent 1");
    if (i > 0 && sites[i - 1].shape()[3] != t.shape()[0])
      throw ShapeError("adjacent MPO bonds disagree");
  }
}

Complex expectation(const MPO& op, const MPS& s) {
  if (op.size() != s.size())
    throw ShapeError("operator and state lengths differ");
  // env[b, w, k]: bra bond, operator bond, ket bond
  DenseTensor env({1, 1, 1}, {"b", "w", "k"});
  env[0] = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const DenseTensor ket = s.site(i).relabeled({"k", "pi", "k2"});
    const DenseTensor w = op.sites[i].relabeled({"w", "po", "pi", "w2"});
    const DenseTensor bra =
        s.site(i).conjugated().relabeled({"b", "po", "b2"});
    DenseTensor t = contract(env, ket, {{"k", "k"}});
    t = contract(t, w, {{"w", "w"}, {"pi", "pi"}});
    t = contract(t, bra, {{"b", "b"}, {"po", "po"}});
    env = t.permuted({"b2", "w2", "k2"}).relabeled({"b", "w", "k"});
  }
  return env[0];
}

void save_mps(const MPS& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for write");
  const char magic[8] = {'D', 'Q', 'C', 'M', 'P', 'S', '0', '1'};
  out.write(magic, 8);
  auto write_u64 = [&](std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
  };
  write_u64(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& t = s.site(i);
    write_u64(t.shape()[0]);
    write_u64(t.shape()[2]);
    for (const auto& x : t.data()) {
      const double re = x.real(), im = x.imag();
      out.write(reinterpret_cast<const char*>(&re), 8);
      out.write(reinterpret_cast<const char*>(&im), 8);
    }
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

MPS load_mps(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "DQCMPS01", 8) != 0)
    throw std::runtime_error("'" + path + "' is not an MPS container");
  auto read_u64 = [&]() {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  const std::uint64_t n = read_u64();
  if (!in || n == 0 || n > (1ull << 20))
    throw std::runtime_error("corrupt MPS container header");
  std::vector<DenseTensor> sites;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t l = read_u64(), r = read_u64();
    if (!in || l == 0 || r == 0 || l * r > (1ull << 30))
      throw std::runtime_error("corrupt MPS site header");
    DenseTensor t({static_cast<std::size_t>(l), 2,
                   static_cast<std::size_t>(r)},
                  kSiteLabels);
    for (auto& x : t.data()) {
      double re = 0.0, im = 0.0;
      in.read(reinterpret_cast<char*>(&re), 8);
      in.read(reinterpret_cast<char*>(&im), 8);
      x = {re, im};
    }
    sites.push_back(std::move(t));
  }
  if (!in) throw std::runtime_error("truncated MPS container");
  return MPS(std::move(sites));
}

}  // namespace dqc
