#include "dqc/ref/statevector.hpp"

#include <cmath>
#include <stdexcept>

namespace dqc::ref {

Statevector::Statevector(std::size_t n_qubits) : n_(n_qubits) {
  if (n_ == 0 || n_ > 26)
    throw std::invalid_argument("statevector supports 1..26 qubits");
  amp_.assign(std::size_t{1} << n_, Complex{0.0, 0.0});
  amp_[0] = 1.0;
}

Statevector::Statevector(std::size_t n_qubits, std::vector<Complex> amplitudes)
    : n_(n_qubits), amp_(std::move(amplitudes)) {
  if (amp_.size() != (std::size_t{1} << n_))
    throw std::invalid_argument("amplitude count must be 2^n");
}

Statevector Statevector::from_mps(const MPS& s) {
  // grow amplitudes site by site; row index bits accumulate site-major
  std::vector<Complex> cur{1.0};
  std::size_t rows = 1, bond = 1;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& t = s.site(i);
    const std::size_t l = t.shape()[0], r = t.shape()[2];
    std::vector<Complex> next(rows * 2 * r, Complex{0.0, 0.0});
    for (std::size_t row = 0; row < rows; ++row)
      for (std::size_t p = 0; p < 2; ++p)
        for (std::size_t b = 0; b < l; ++b) {
          const Complex c = cur[row * bond + b];
          if (c == Complex{0.0, 0.0}) continue;
          for (std::size_t rr = 0; rr < r; ++rr)
            next[(row * 2 + p) * r + rr] += c * t.data()[(b * 2 + p) * r + rr];
        }
    cur = std::move(next);
    rows *= 2;
    bond = r;
  }
  return Statevector(s.size(), std::move(cur));
}

void Statevector::apply_1q(const std::vector<Complex>& u, std::size_t q) {
  if (u.size() != 4) throw std::invalid_argument("1q gate needs 4 entries");
  if (q >= n_) throw std::invalid_argument("qubit out of range");
  const std::size_t stride = std::size_t{1} << (n_ - 1 - q);
  for (std::size_t base = 0; base < amp_.size(); base += 2 * stride)
    for (std::size_t off = 0; off < stride; ++off) {
      const std::size_t i0 = base + off, i1 = i0 + stride;
      const Complex a0 = amp_[i0], a1 = amp_[i1];
      amp_[i0] = u[0] * a0 + u[1] * a1;
      amp_[i1] = u[2] * a0 + u[3] * a1;
    }
}

void Statevector::apply_2q(const std::vector<Complex>& u, std::size_t q) {
  if (u.size() != 16) throw std::invalid_argument("2q gate needs 16 entries");
  if (q + 1 >= n_) throw std::invalid_argument("pair out of range");
  const std::size_t s0 = std::size_t{1} << (n_ - 1 - q);
  const std::size_t s1 = std::size_t{1} << (n_ - 2 - q);
  for (std::size_t idx = 0; idx < amp_.size(); ++idx) {
    if ((idx & s0) || (idx & s1)) continue;
    const std::size_t i00 = idx, i01 = idx | s1, i10 = idx | s0,
                      i11 = idx | s0 | s1;
    const Complex a00 = amp_[i00], a01 = amp_[i01], a10 = amp_[i10],
                  a11 = amp_[i11];
    amp_[i00] = u[0] * a00 + u[1] * a01 + u[2] * a10 + u[3] * a11;
    amp_[i01] = u[4] * a00 + u[5] * a01 + u[6] * a10 + u[7] * a11;
    amp_[i10] = u[8] * a00 + u[9] * a01 + u[10] * a10 + u[11] * a11;
    amp_[i11] = u[12] * a00 + u[13] * a01 + u[14] * a10 + u[15] * a11;
  }
}

double Statevector::probability(std::size_t q, int bit) const {
  if (q >= n_) throw std::invalid_argument("qubit out of range");
  const std::size_t mask = std::size_t{1} << (n_ - 1 - q);
  double p = 0.0;
  for (std::size_t i = 0; i < amp_.size(); ++i) {
    const bool is_one = (i & mask) != 0;
    if (is_one == (bit == 1)) p += std::norm(amp_[i]);
  }
  return p;
}

double Statevector::project_out(std::size_t q, int bit) {
  if (n_ == 1) throw std::invalid_argument("cannot remove the last qubit");
  const double p = probability(q, bit);
  const std::size_t mask = std::size_t{1} << (n_ - 1 - q);
  std::vector<Complex> next(amp_.size() / 2);
  std::size_t w = 0;
  for (std::size_t i = 0; i < amp_.size(); ++i) {
    const bool is_one = (i & mask) != 0;
    if (is_one != (bit == 1)) continue;
    next[w++] = amp_[i];
  }
  amp_ = std::move(next);
  --n_;
  if (p > 1e-300) {
    const double inv = 1.0 / std::sqrt(p);
    for (auto& a : amp_) a *= inv;
  }
  return p;
}

Complex Statevector::inner(const Statevector& other) const {
  if (other.n_ != n_) throw std::invalid_argument("qubit counts differ");
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < amp_.size(); ++i)
    acc += std::conj(amp_[i]) * other.amp_[i];
  return acc;
}

double Statevector::norm() const {
  double acc = 0.0;
  for (const auto& a : amp_) acc += std::norm(a);
  return std::sqrt(acc);
}

void Statevector::normalize() {
  const double n = norm();
  if (n == 0.0) throw std::runtime_error("cannot normalize a zero vector");
  for (auto& a : amp_) a *= 1.0 / n;
}

}  // namespace dqc::ref
