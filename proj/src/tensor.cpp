#include "dqc/tensor.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dqc/parallel.hpp"

namespace dqc {

namespace {

using RowMat =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using ConstMapMat = Eigen::Map<const RowMat>;

std::size_t product(const std::vector<std::size_t>& v) {
  return std::accumulate(v.begin(), v.end(), std::size_t{1},
                         std::multiplies<>());
}

std::vector<std::size_t> row_strides(const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;)
    strides[i - 1] = strides[i] * shape[i];
  return strides;
}

[[noreturn]] void fail(const std::string& what) { throw ShapeError(what); }

struct Svd {
  RowMat u;
  std::vector<double> s;
  RowMat v;  // columns are right singular vectors
};

// Thin SVD with the deterministic phase convention used across the library:
// the largest-magnitude entry of each left singular vector is made real
// positive (ties broken by lowest row index).
Svd thin_svd(const RowMat& m) {
  Svd out;
  Eigen::MatrixXcd u, v;
  Eigen::VectorXd s;
  if (std::min(m.rows(), m.cols()) <= 16) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
        m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(
        m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    s = svd.singularValues();
  }
  const auto k = u.cols();
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::Index best = 0;
    double best_mag = 0.0;
    for (Eigen::Index r = 0; r < u.rows(); ++r) {
      const double mag = std::abs(u(r, c));
      if (mag > best_mag) {
        best_mag = mag;
        best = r;
      }
    }
    if (best_mag > 0.0) {
      const Complex phase = u(best, c) / best_mag;
      u.col(c) *= std::conj(phase);
      v.col(c) *= std::conj(phase);
    }
  }
  out.u = u;
  out.v = v;
  out.s.assign(s.data(), s.data() + s.size());
  return out;
}

}  // namespace

DenseTensor::DenseTensor(std::vector<std::size_t> shape,
                         std::vector<std::string> labels)
    : shape_(std::move(shape)), labels_(std::move(labels)) {
  if (shape_.size() != labels_.size())
    fail("tensor shape and label counts differ");
  for (std::size_t i = 0; i < labels_.size(); ++i)
    for (std::size_t j = i + 1; j < labels_.size(); ++j)
      if (labels_[i] == labels_[j])
        fail("duplicate tensor label '" + labels_[i] + "'");
  for (auto e : shape_)
    if (e == 0) fail("zero extent in tensor shape");
  data_.assign(product(shape_), Complex{0.0, 0.0});
}

DenseTensor::DenseTensor(std::vector<std::size_t> shape,
                         std::vector<std::string> labels,
                         std::vector<Complex> data)
    : DenseTensor(std::move(shape), std::move(labels)) {
  if (data.size() != data_.size())
    fail("tensor data length does not match shape");
  data_ = std::move(data);
}

DenseTensor DenseTensor::scalar(Complex value) {
  DenseTensor t{{}, {}};
  t.data_[0] = value;
  return t;
}

std::size_t DenseTensor::axis(const std::string& label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == label) return i;
  fail("tensor has no index labeled '" + label + "'");
}

bool DenseTensor::has_label(const std::string& label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

Complex& DenseTensor::at(const std::vector<std::size_t>& index) {
  return const_cast<Complex&>(
      static_cast<const DenseTensor*>(this)->at(index));
}

const Complex& DenseTensor::at(const std::vector<std::size_t>& index) const {
  if (index.size() != shape_.size())
    fail("index rank does not match tensor rank");
  std::size_t flat = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= shape_[i]) fail("tensor index out of range");
    flat = flat * shape_[i] + index[i];
  }
  return data_[flat];
}

Complex DenseTensor::value() const {
  if (data_.size() != 1)
    fail("value() requires a scalar (size-1) tensor");
  return data_[0];
}

DenseTensor DenseTensor::relabeled(std::vector<std::string> labels) const {
  DenseTensor out = *this;
  if (labels.size() != labels_.size())
    fail("relabel count does not match tensor rank");
  out.labels_ = std::move(labels);
  for (std::size_t i = 0; i < out.labels_.size(); ++i)
    for (std::size_t j = i + 1; j < out.labels_.size(); ++j)
      if (out.labels_[i] == out.labels_[j])
        fail("duplicate tensor label '" + out.labels_[i] + "'");
  return out;
}

DenseTensor DenseTensor::conjugated() const {
  DenseTensor out = *this;
  for (auto& x : out.data_) x = std::conj(x);
  return out;
}

DenseTensor DenseTensor::permuted(const std::vector<std::size_t>& order) const {
  if (order.size() != shape_.size())
    fail("permutation size does not match tensor rank");
  std::vector<bool> seen(order.size(), false);
  for (auto a : order) {
    if (a >= order.size() || seen[a]) fail("invalid axis permutation");
    seen[a] = true;
  }
  bool identity = true;
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i] != i) identity = false;
  if (identity) return *this;

  std::vector<std::size_t> new_shape(order.size());
  std::vector<std::string> new_labels(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    new_shape[i] = shape_[order[i]];
    new_labels[i] = labels_[order[i]];
  }
  DenseTensor out(new_shape, new_labels);
  const auto in_strides = row_strides(shape_);
  const auto out_shape = out.shape_;
  const std::size_t n = out.data_.size();
  const std::size_t rank = order.size();
  auto* dst = out.data_.data();
  const auto* src = data_.data();
  parallel_for(
      0, n,
      [&](std::size_t flat) {
        std::size_t rem = flat;
        std::size_t in_flat = 0;
        for (std::size_t k = rank; k-- > 0;) {
          const std::size_t idx = rem % out_shape[k];
          rem /= out_shape[k];
          in_flat += idx * in_strides[order[k]];
        }
        dst[flat] = src[in_flat];
      },
      1 << 12);
  return out;
}

DenseTensor DenseTensor::permuted(
    const std::vector<std::string>& label_order) const {
  std::vector<std::size_t> order;
  order.reserve(label_order.size());
  for (const auto& l : label_order) order.push_back(axis(l));
  return permuted(order);
}

double DenseTensor::norm() const {
  double acc = 0.0;
  for (const auto& x : data_) acc += std::norm(x);
  return std::sqrt(acc);
}

DenseTensor& DenseTensor::operator*=(Complex factor) {
  for (auto& x : data_) x *= factor;
  return *this;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& other) {
  if (shape_ != other.shape_ || labels_ != other.labels_)
    fail("tensor sum requires identical shapes and labels");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::pair<std::string, std::string>>&
                         pairs) {
  std::vector<bool> a_used(a.rank(), false), b_used(b.rank(), false);
  std::vector<std::size_t> a_contr, b_contr;
  a_contr.reserve(pairs.size());
  b_contr.reserve(pairs.size());
  for (const auto& [la, lb] : pairs) {
    const std::size_t ia = a.axis(la), ib = b.axis(lb);
    if (a_used[ia]) fail("label '" + la + "' contracted twice");
    if (b_used[ib]) fail("label '" + lb + "' contracted twice");
    if (a.shape()[ia] != b.shape()[ib])
      fail("contracted extents differ for '" + la + "' and '" + lb + "'");
    a_used[ia] = true;
    b_used[ib] = true;
    a_contr.push_back(ia);
    b_contr.push_back(ib);
  }

  std::vector<std::size_t> a_free, b_free;
  for (std::size_t i = 0; i < a.rank(); ++i)
    if (!a_used[i]) a_free.push_back(i);
  for (std::size_t i = 0; i < b.rank(); ++i)
    if (!b_used[i]) b_free.push_back(i);

  std::vector<std::size_t> shape;
  std::vector<std::string> labels;
  for (auto i : a_free) {
    shape.push_back(a.shape()[i]);
    labels.push_back(a.labels()[i]);
  }
  for (auto i : b_free) {
    shape.push_back(b.shape()[i]);
    labels.push_back(b.labels()[i]);
  }
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t j = i + 1; j < labels.size(); ++j)
      if (labels[i] == labels[j])
        fail("contraction result would repeat label '" + labels[i] + "'");

  std::vector<std::size_t> a_order = a_free;
  a_order.insert(a_order.end(), a_contr.begin(), a_contr.end());
  std::vector<std::size_t> b_order = b_contr;
  b_order.insert(b_order.end(), b_free.begin(), b_free.end());

  const DenseTensor ap = a.permuted(a_order);
  const DenseTensor bp = b.permuted(b_order);

  std::size_t m = 1, k = 1, n = 1;
  for (auto i : a_free) m *= a.shape()[i];
  for (auto i : a_contr) k *= a.shape()[i];
  for (auto i : b_free) n *= b.shape()[i];

  DenseTensor out(shape, labels);
  ConstMapMat ma(ap.data().data(), m, k);
  ConstMapMat mb(bp.data().data(), k, n);
  MapMat mo(out.data().data(), m, n);
  mo.noalias() = ma * mb;
  return out;
}

DenseTensor contract_shared(const DenseTensor& a, const DenseTensor& b) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& l : a.labels())
    if (b.has_label(l)) pairs.emplace_back(l, l);
  return contract(a, b, pairs);
}

namespace {

struct SplitPlan {
  std::vector<std::size_t> order;       // row axes then column axes
  std::vector<std::size_t> row_shape;
  std::vector<std::string> row_labels;
  std::vector<std::size_t> col_shape;
  std::vector<std::string> col_labels;
  std::size_t rows = 1, cols = 1;
};

SplitPlan plan_split(const DenseTensor& t,
                     const std::vector<std::string>& row_labels) {
  if (row_labels.empty()) fail("split requires at least one row label");
  SplitPlan plan;
  std::vector<bool> used(t.rank(), false);
  for (const auto& l : row_labels) {
    const std::size_t ax = t.axis(l);
    if (used[ax]) fail("label '" + l + "' listed twice in split");
    used[ax] = true;
    plan.order.push_back(ax);
    plan.row_shape.push_back(t.shape()[ax]);
    plan.row_labels.push_back(l);
    plan.rows *= t.shape()[ax];
  }
  for (std::size_t i = 0; i < t.rank(); ++i) {
    if (used[i]) continue;
    plan.order.push_back(i);
    plan.col_shape.push_back(t.shape()[i]);
    plan.col_labels.push_back(t.labels()[i]);
    plan.cols *= t.shape()[i];
  }
  if (plan.col_labels.empty())
    fail("split must leave at least one column label");
  return plan;
}

SvdFactors svd_split_impl(const DenseTensor& t,
                          const std::vector<std::string>& left_labels,
                          std::size_t max_values, double cutoff,
                          const std::string& bond_label) {
  if (t.has_label(bond_label))
    fail("bond label '" + bond_label + "' already present in tensor");
  const SplitPlan plan = plan_split(t, left_labels);
  const DenseTensor tp = t.permuted(plan.order);
  ConstMapMat m(tp.data().data(), plan.rows, plan.cols);
  Svd svd = thin_svd(m);

  std::size_t keep = svd.s.size();
  if (cutoff > 0.0) {
    double total = 0.0;
    for (double s : svd.s) total += s * s;
    double tail = 0.0;
    while (keep > 1) {
      const double s = svd.s[keep - 1];
      if (tail + s * s > cutoff * total) break;
      tail += s * s;
      --keep;
    }
  }
  keep = std::min(keep, max_values ? max_values : keep);
  if (keep == 0) keep = 1;

  SvdFactors out;
  out.bond_label = bond_label;
  out.singular_values.assign(svd.s.begin(), svd.s.begin() + keep);

  std::vector<std::size_t> lshape = plan.row_shape;
  lshape.push_back(keep);
  std::vector<std::string> llabels = plan.row_labels;
  llabels.push_back(bond_label);
  out.left = DenseTensor(lshape, llabels);
  MapMat(out.left.data().data(), plan.rows, keep) = svd.u.leftCols(keep);

  std::vector<std::size_t> rshape{keep};
  rshape.insert(rshape.end(), plan.col_shape.begin(), plan.col_shape.end());
  std::vector<std::string> rlabels{bond_label};
  rlabels.insert(rlabels.end(), plan.col_labels.begin(),
                 plan.col_labels.end());
  out.right = DenseTensor(rshape, rlabels);
  MapMat(out.right.data().data(), keep, plan.cols) =
      svd.v.leftCols(keep).adjoint();
  return out;
}

}  // namespace

SvdFactors svd_split(const DenseTensor& t,
                     const std::vector<std::string>& left_labels,
                     const std::string& bond_label) {
  return svd_split_impl(t, left_labels, 0, 0.0, bond_label);
}

SvdFactors svd_split_truncated(const DenseTensor& t,
                               const std::vector<std::string>& left_labels,
                               std::size_t max_values, double cutoff,
                               const std::string& bond_label) {
  return svd_split_impl(t, left_labels, max_values, cutoff, bond_label);
}

DenseTensor polar_update(const DenseTensor& env,
                         const std::vector<std::string>& split_labels) {
  const SplitPlan plan = plan_split(env, split_labels);
  if (plan.rows != plan.cols)
    fail("polar update requires a square matricization");
  const DenseTensor ep = env.permuted(plan.order);
  ConstMapMat m(ep.data().data(), plan.rows, plan.cols);
  const Svd svd = thin_svd(m);

  std::vector<std::size_t> shape = plan.col_shape;
  shape.insert(shape.end(), plan.row_shape.begin(), plan.row_shape.end());
  std::vector<std::string> labels = plan.col_labels;
  labels.insert(labels.end(), plan.row_labels.begin(),
                plan.row_labels.end());
  DenseTensor out(shape, labels);
  MapMat(out.data().data(), plan.cols, plan.rows) =
      svd.v * svd.u.adjoint();
  return out;
}

}  // namespace dqc
