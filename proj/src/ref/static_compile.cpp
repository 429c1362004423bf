#include "dqc/ref/static_compile.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace dqc::ref {

namespace {

using Mat =
    Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Statevector zero_state(std::size_t n) {
  Statevector s(n);
  return s;
}

Statevector apply_gates(Statevector s, const std::vector<Gate>& gates,
                        bool adjoint) {
  for (std::size_t idx = 0; idx < gates.size(); ++idx) {
    const Gate& g = adjoint ? gates[gates.size() - 1 - idx] : gates[idx];
    const std::size_t dim = g.sites.size() == 1 ? 2 : 4;
    std::vector<Complex> u(g.unitary.data());
    if (adjoint) {
      std::vector<Complex> ua(dim * dim);
      for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j)
          ua[i * dim + j] = std::conj(u[j * dim + i]);
      u = std::move(ua);
    }
    if (dim == 2)
      s.apply_1q(u, g.sites[0]);
    else
      s.apply_2q(u, g.sites[0]);
  }
  return s;
}

// env[o, i] = sum over the other qubits of conj(bra)[o slice] ket[i slice]
// for the pair (q, q+1); o = bit(q) * 2 + bit(q+1).
Mat pair_environment(const Statevector& bra, const Statevector& ket,
                     std::size_t q) {
  const std::size_t n = ket.qubits();
  const std::size_t sh0 = n - 1 - q, sh1 = n - 2 - q;
  const std::uint64_t mask =
      (std::uint64_t{1} << sh0) | (std::uint64_t{1} << sh1);
  Mat env = Mat::Zero(4, 4);
  for (std::uint64_t base = 0; base < (std::uint64_t{1} << n); ++base) {
    if (base & mask) continue;
    for (std::size_t o = 0; o < 4; ++o) {
      const std::uint64_t bo =
          base | (std::uint64_t(o >> 1) << sh0) | (std::uint64_t(o & 1) << sh1);
      for (std::size_t i = 0; i < 4; ++i) {
        const std::uint64_t bi = base | (std::uint64_t(i >> 1) << sh0) |
                                 (std::uint64_t(i & 1) << sh1);
        env(o, i) +=
            std::conj(bra.amplitudes()[bo]) * ket.amplitudes()[bi];
      }
    }
  }
  return env;
}

// Unitary w maximizing Re sum_oi env(o,i) w(o,i).
Mat best_gate(const Mat& env) {
  const Mat mt = env.transpose();
  Eigen::JacobiSVD<Mat> svd(mt, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixV() * svd.matrixU().adjoint();
}

}  // namespace

StaticCompileResult compile_static(StaticCircuit init,
                                   const Statevector& target,
                                   std::size_t sweeps) {
  validate_circuit(init);
  for (const auto& layer : init.layers)
    for (const Gate& g : layer)
      if (g.sites.size() != 2)
        throw std::invalid_argument(
            "the dense compiler handles two-site layers only");
  const std::size_t n = init.n_qubits;
  if (target.qubits() != n)
    throw std::invalid_argument("target size must match the circuit");

  StaticCompileResult res;
  auto fidelity_now = [&]() {
    Statevector psi = zero_state(n);
    for (const auto& layer : init.layers) psi = apply_gates(psi, layer, false);
    return std::norm(target.inner(psi));
  };
  res.fidelity_series.push_back(fidelity_now());

  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    Statevector front = zero_state(n);
    for (std::size_t l = 0; l < init.layers.size(); ++l) {
      auto& layer = init.layers[l];
      for (std::size_t g = 0; g < layer.size(); ++g) {
        // bra: target pulled back through everything after this layer
        Statevector bra = target;
        for (std::size_t l2 = init.layers.size(); l2-- > l + 1;)
          bra = apply_gates(bra, init.layers[l2], true);
        // ket: state entering the layer, other layer gates absorbed
        Statevector ket = front;
        std::vector<Gate> others;
        for (std::size_t g2 = 0; g2 < layer.size(); ++g2)
          if (g2 != g) others.push_back(layer[g2]);
        ket = apply_gates(std::move(ket), others, false);

        const Mat w = best_gate(pair_environment(bra, ket, layer[g].sites[0]));
        DenseTensor u({4, 4}, {"o", "i"});
        for (std::size_t o = 0; o < 4; ++o)
          for (std::size_t i = 0; i < 4; ++i) u.at({o, i}) = w(o, i);
        layer[g] = make_gate(std::move(u), layer[g].sites, layer[g].tag);
      }
      front = apply_gates(std::move(front), layer, false);
    }
    res.fidelity_series.push_back(fidelity_now());
  }

  res.fidelity = res.fidelity_series.back();
  res.circuit = std::move(init);
  return res;
}

}  // namespace dqc::ref
