#include "dqc/ref/exact_diag.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace dqc::ref {

GroundState tfi_ground_dense(std::size_t n, double g, double j) {
  if (n < 2 || n > 14)
    throw std::invalid_argument("dense TFI diagonalization supports n in 2..14");
  const std::size_t dim = std::size_t{1} << n;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);

  auto bit = [&](std::size_t state, std::size_t q) {
    return (state >> (n - 1 - q)) & 1ull;
  };

  for (std::size_t s = 0; s < dim; ++s) {
    double diag = 0.0;
    for (std::size_t q = 0; q + 1 < n; ++q) {
      const double zq = bit(s, q) ? -1.0 : 1.0;
      const double zq1 = bit(s, q + 1) ? -1.0 : 1.0;
      diag += zq * zq1;
    }
    h(s, s) += -j * diag;
    for (std::size_t q = 0; q < n; ++q) {
      const std::size_t flipped = s ^ (std::size_t{1} << (n - 1 - q));
      h(flipped, s) += -j * g;
    }
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  const Eigen::VectorXd& evals = solver.eigenvalues();
  const Eigen::MatrixXd& evecs = solver.eigenvectors();

  GroundState out{evals(0), Statevector(n)};
  std::vector<Complex> amp(dim);
  for (std::size_t i = 0; i < dim; ++i) amp[i] = evecs(i, 0);
  out.state = Statevector(n, std::move(amp));
  return out;
}

}  // namespace dqc::ref
