#include <cmath>
#include <cstdio>

#include "dqc/circuit.hpp"
#include "dqc/mps.hpp"
#include "dqc/nn_decoder.hpp"

using namespace dqc;

int main() {
  const DQCAnsatz a =
      make_ansatz(3, {3}, build_brickwork(4, 3, 5));
  Rng trng(11);
  const MPS target = make_random_mps(3, 4, trng);
  const OutcomeBatch batch = exhaustive_batch(a);
  const RotationLayout layout{3, 1};
  Rng wrng(3);
  const MLPDecoder d0 = random_mlp({1, 4, 9}, wrng);

  const MLPGradients g = backprop(d0, layout, target, batch);
  const double h = 1e-5;
  double worst = 0.0;
  double num = 0.0, den = 0.0;
  for (std::size_t l = 0; l < d0.n_layers(); ++l) {
    for (std::size_t j = 0; j < d0.weights[l].size() + d0.biases[l].size();
         ++j) {
      const bool is_w = j < d0.weights[l].size();
      const std::size_t k = is_w ? j : j - d0.weights[l].size();
      MLPDecoder dp = d0, dm = d0;
      (is_w ? dp.weights[l][k] : dp.biases[l][k]) += h;
      (is_w ? dm.weights[l][k] : dm.biases[l][k]) -= h;
      const double fd = (batch_loss(dp, layout, target, batch) -
                         batch_loss(dm, layout, target, batch)) /
                        (2.0 * h);
      const double an = is_w ? g.weights[l][k] : g.biases[l][k];
      num += (fd - an) * (fd - an);
      den += fd * fd;
      if (std::abs(fd) > 1e-6)
        worst = std::max(worst, std::abs(fd - an) / std::abs(fd));
    }
  }
  std::printf("rel l2 err %.3g  worst coord rel err %.3g  grad norm %.3g\n",
              std::sqrt(num / den), worst, std::sqrt(den));
  return 0;
}
