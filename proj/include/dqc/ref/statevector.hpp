#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "dqc/mps.hpp"

namespace dqc::ref {

// Full 2^n amplitude vector, kept deliberately independent of the tensor
// network code paths: all updates are plain index loops. Qubit 0 is the
// most significant bit of the basis index, matching MPS site order.
class Statevector {
 public:
  explicit Statevector(std::size_t n_qubits);
  Statevector(std::size_t n_qubits, std::vector<Complex> amplitudes);

  static Statevector from_mps(const MPS& s);

  std::size_t qubits() const { return n_; }
  const std::vector<Complex>& amplitudes() const { return amp_; }
  std::vector<Complex>& amplitudes() { return amp_; }

  // unitary as a row-major 2x2 (or 4x4 for the adjacent-pair overload)
  void apply_1q(const std::vector<Complex>& u, std::size_t q);
  void apply_2q(const std::vector<Complex>& u, std::size_t q);  // (q, q+1)

  // Born probability of outcome bit at qubit q.
  double probability(std::size_t q, int bit) const;

  // Project qubit q onto bit and remove it; returns the outcome
  // probability and leaves the state normalized (unless p ~ 0).
  double project_out(std::size_t q, int bit);

  Complex inner(const Statevector& other) const;  // <this|other>
  double norm() const;
  void normalize();

 private:
  std::size_t n_;
  std::vector<Complex> amp_;
};

}  // namespace dqc::ref
