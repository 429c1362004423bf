#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dqc {

using Complex = std::complex<double>;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Dense tensor with row-major storage and one string label per index.
// Labels within a tensor are pairwise distinct; every contraction and
// factorization below is phrased in terms of them rather than positions.
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(std::vector<std::size_t> shape, std::vector<std::string> labels);
  DenseTensor(std::vector<std::size_t> shape, std::vector<std::string> labels,
              std::vector<Complex> data);

  static DenseTensor scalar(Complex value);

  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<std::size_t>& shape() const { return shape_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::vector<Complex>& data() { return data_; }
  const std::vector<Complex>& data() const { return data_; }

  std::size_t extent(const std::string& label) const {
    return shape_[axis(label)];
  }

  // Position of a label; throws ShapeError if absent.
  std::size_t axis(const std::string& label) const;
  bool has_label(const std::string& label) const;

  Complex& at(const std::vector<std::size_t>& index);
  const Complex& at(const std::vector<std::size_t>& index) const;

  Complex& operator[](std::size_t flat) { return data_[flat]; }
  const Complex& operator[](std::size_t flat) const { return data_[flat]; }

  // Rank-0 access.
  Complex value() const;

  DenseTensor relabeled(std::vector<std::string> labels) const;
  DenseTensor conjugated() const;
  // Axes reordered as order[k] = old axis at new position k.
  DenseTensor permuted(const std::vector<std::size_t>& order) const;
  // Convenience permutation by label order.
  DenseTensor permuted(const std::vector<std::string>& label_order) const;

  double norm() const;
  DenseTensor& operator*=(Complex factor);
  DenseTensor& operator+=(const DenseTensor& other);

 private:
  std::vector<std::size_t> shape_;
  std::vector<std::string> labels_;
  std::vector<Complex> data_;
};

struct SvdFactors {
  DenseTensor left;                      // left_labels... + bond
  std::vector<double> singular_values;   // descending
  DenseTensor right;                     // bond + remaining labels...
  std::string bond_label;
};

// Pairwise contraction: each pair names one index of a and one of b with
// matching extents. Result carries a's free labels then b's free labels;
// an empty pair list is the outer product, full pairing yields rank 0.
DenseTensor contract(const DenseTensor& a, const DenseTensor& b,
                     const std::vector<std::pair<std::string, std::string>>&
                         pairs);

// Contract over every label the two tensors share, in a's label order.
DenseTensor contract_shared(const DenseTensor& a, const DenseTensor& b);

// Full SVD of t matricized with left_labels (in the given order) as rows.
// Singular vectors are phase-fixed: the largest-magnitude entry of each
// left vector is real positive, so the factorization is deterministic up
// to degenerate spectra.
SvdFactors svd_split(const DenseTensor& t,
                     const std::vector<std::string>& left_labels,
                     const std::string& bond_label = "s");

// Truncated variant: keeps at most max_values singular values and drops
// trailing weight below cutoff (relative discarded weight).
SvdFactors svd_split_truncated(const DenseTensor& t,
                               const std::vector<std::string>& left_labels,
                               std::size_t max_values, double cutoff,
                               const std::string& bond_label = "s");

// Closest unitary to the adjoint of env in the sense of maximizing
// |sum_ij env_ij * u_ij|: matricize env with split_labels as rows (the
// matrix must come out square), SVD it as X S Ydag, return Y Xdag with
// labels ordered so that contract_shared(env, result) equals the trace of
// the matrix product. The maximum equals the sum of singular values and is
// attained with a real nonnegative trace.
DenseTensor polar_update(const DenseTensor& env,
                         const std::vector<std::string>& split_labels);

}  // namespace dqc
