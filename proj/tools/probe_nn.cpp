#include <cstdio>
#include <vector>

#include "dqc/circuit.hpp"
#include "dqc/mps.hpp"
#include "dqc/nn_decoder.hpp"

using namespace dqc;

int main() {
  const DQCAnsatz a = ghz_patch_precircuit(6);
  const MPS target = make_ghz(6);
  const RotationLayout layout{6, 1};

  for (double lr : {0.05, 0.03}) {
    int pass_final = 0;
    int pass_dom_batch = 0;
    int pass_dom_eval = 0;
    int pass_all = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      NnTrainConfig cfg;
      cfg.epochs = 2500;
      cfg.learning_rate = lr;
      cfg.batch_size = 32;

      std::vector<NnTrainReport> reps;
      for (std::size_t width : {64ul, 8ul}) {
        Rng init(seed);
        MLPDecoder d = random_mlp({2, width, 18}, init);
        Rng batch_rng(seed * 131 + 7);
        reps.push_back(train_decoder(d, a, layout, target, cfg, batch_rng));
      }
      const double final64 = reps[0].epochs.back().eval_infid;
      const double final8 = reps[1].epochs.back().eval_infid;
      std::size_t bad_batch = 0, bad_eval = 0;   // first failing epoch or 0
      std::size_t lastB = 0, lastE = 0;          // last failing epoch or 0
      double worstB = 0.0, worstE = 0.0;
      std::size_t hit64 = 0;  // first epoch with eval64 < 1e-3
      for (std::size_t e = 0; e < cfg.epochs; ++e) {
        if (!hit64 && reps[0].epochs[e].eval_infid < 1e-3) hit64 = e;
        if (e < 20) continue;
        const double dB =
            reps[0].epochs[e].batch_loss - reps[1].epochs[e].batch_loss;
        const double dE =
            reps[0].epochs[e].eval_infid - reps[1].epochs[e].eval_infid;
        if (dB > 0 && !bad_batch) bad_batch = e;
        if (dE > 0 && !bad_eval) bad_eval = e;
        if (dB > 0) lastB = e;
        if (dE > 0) lastE = e;
        if (dB > worstB) worstB = dB;
        if (dE > worstE) worstE = dE;
      }
      const bool f_ok = final64 < 1e-3;
      pass_final += f_ok;
      pass_dom_batch += (bad_batch == 0);
      pass_dom_eval += (bad_eval == 0);
      pass_all += (f_ok && bad_eval == 0);
      std::printf(
          "lr %.2f seed %2llu final64 %.3g final8 %.3g hit64 %4zu badB "
          "%4zu-%-4zu (%.2g) badE %4zu-%-4zu (%.2g)\n",
          lr, (unsigned long long)seed, final64, final8, hit64, bad_batch,
          lastB, worstB, bad_eval, lastE, worstE);
    }
    std::printf(
        "lr %.2f: final<1e-3 %d/10 domBatch %d/10 domEval %d/10 all %d/10\n\n",
        lr, pass_final, pass_dom_batch, pass_dom_eval, pass_all);
  }
  return 0;
}
