#include "dqc/dmrg.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "dqc/rng.hpp"

namespace dqc {

namespace {

void put_op(DenseTensor& w, std::size_t a, std::size_t b, char op,
            double coeff) {
  // 2x2 blocks written at bond coordinates (a, b)
  auto set = [&](std::size_t o, std::size_t i, double v) {
    w.at({a, o, i, b}) = Complex{v * coeff, 0.0};
  };
  switch (op) {
    case 'I':
      set(0, 0, 1.0);
      set(1, 1, 1.0);
      break;
    case 'X':
      set(0, 1, 1.0);
      set(1, 0, 1.0);
      break;
    case 'Z':
      set(0, 0, 1.0);
      set(1, 1, -1.0);
      break;
  }
}

DenseTensor left_env_start() {
  DenseTensor t({1, 1, 1}, {"b", "w", "k"});
  t[0] = 1.0;
  return t;
}

DenseTensor absorb_left(const DenseTensor& env, const DenseTensor& site,
                        const DenseTensor& w) {
  DenseTensor t =
      contract(env, site.relabeled({"k", "pi", "k2"}), {{"k", "k"}});
  t = contract(t, w.relabeled({"w", "po", "pi", "w2"}),
               {{"w", "w"}, {"pi", "pi"}});
  t = contract(t, site.conjugated().relabeled({"b", "po", "b2"}),
               {{"b", "b"}, {"po", "po"}});
  return t.permuted({"b2", "w2", "k2"}).relabeled({"b", "w", "k"});
}

DenseTensor absorb_right(const DenseTensor& env, const DenseTensor& site,
                         const DenseTensor& w) {
  DenseTensor t =
      contract(site.relabeled({"k2", "pi", "k"}), env, {{"k", "k"}});
  t = contract(t, w.relabeled({"w2", "po", "pi", "w"}),
               {{"w", "w"}, {"pi", "pi"}});
  t = contract(t, site.conjugated().relabeled({"b2", "po", "b"}),
               {{"b", "b"}, {"po", "po"}});
  return t.permuted({"b2", "w2", "k2"}).relabeled({"b", "w", "k"});
}

DenseTensor apply_h_eff(const DenseTensor& lenv, const DenseTensor& w0,
                        const DenseTensor& w1, const DenseTensor& renv,
                        const DenseTensor& v) {
  DenseTensor t = contract(lenv, v, {{"k", "kl"}});
  t = contract(t, w0.relabeled({"w", "o0", "p0", "w2"}),
               {{"w", "w"}, {"p0", "p0"}});
  t = contract(t, w1.relabeled({"w2", "o1", "p1", "w3"}),
               {{"w2", "w2"}, {"p1", "p1"}});
  t = contract(t, renv.relabeled({"b2", "w3", "kr"}),
               {{"kr", "kr"}, {"w3", "w3"}});
  return t.permuted({"b", "o0", "o1", "b2"})
      .relabeled({"kl", "p0", "p1", "kr"});
}

Complex dot(const DenseTensor& a, const DenseTensor& b) {
  Complex acc{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += std::conj(a[i]) * b[i];
  return acc;
}

void axpy(DenseTensor& y, Complex alpha, const DenseTensor& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
}

struct LanczosResult {
  double value = 0.0;
  DenseTensor vector;
};

// Ground eigenpair of the two-site effective Hamiltonian, warm-started
// from the current tensor, with full reorthogonalization.
LanczosResult lanczos_ground(const DenseTensor& lenv, const DenseTensor& w0,
                             const DenseTensor& w1, const DenseTensor& renv,
                             DenseTensor v0, std::size_t max_iters,
                             double tol) {
  const double n0 = v0.norm();
  v0 *= Complex{1.0 / n0, 0.0};

  std::vector<DenseTensor> basis{v0};
  std::vector<double> alpha, beta;
  double prev_ritz = 0.0;
  bool have_prev = false;
  Eigen::VectorXd ground_coeffs;

  for (std::size_t j = 0; j < max_iters; ++j) {
    DenseTensor w = apply_h_eff(lenv, w0, w1, renv, basis[j]);
    if (j > 0) axpy(w, Complex{-beta[j - 1], 0.0}, basis[j - 1]);
    const double a = dot(basis[j], w).real();
    alpha.push_back(a);
    axpy(w, Complex{-a, 0.0}, basis[j]);
    for (const auto& q : basis) axpy(w, -dot(q, w), q);

    // Ritz value of the current tridiagonal
    const std::size_t m = alpha.size();
    Eigen::MatrixXd tri = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < m; ++i) {
      tri(i, i) = alpha[i];
      if (i + 1 < m) tri(i, i + 1) = tri(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tri);
    const double ritz = es.eigenvalues()(0);
    ground_coeffs = es.eigenvectors().col(0);

    const double b = w.norm();
    const bool stalled = b < 1e-14;
    const bool settled =
        have_prev && std::abs(ritz - prev_ritz) < tol * std::max(1.0, std::abs(ritz));
    prev_ritz = ritz;
    have_prev = true;
    if (stalled || settled || j + 1 == max_iters) break;
    beta.push_back(b);
    w *= Complex{1.0 / b, 0.0};
    basis.push_back(std::move(w));
  }

  LanczosResult out;
  out.value = prev_ritz;
  out.vector = basis[0];
  out.vector *= Complex{ground_coeffs(0), 0.0};
  for (std::size_t i = 1; i < basis.size(); ++i)
    axpy(out.vector, Complex{ground_coeffs(i), 0.0}, basis[i]);
  const double n = out.vector.norm();
  out.vector *= Complex{1.0 / n, 0.0};
  return out;
}

DenseTensor merge_pair(const MPS& s, std::size_t i) {
  return contract(s.site(i).relabeled({"kl", "p0", "m"}),
                  s.site(i + 1).relabeled({"m", "p1", "kr"}), {{"m", "m"}});
}

// Split the optimized pair; direction right means the singular weights move
// into site i+1.
void split_pair(MPS& s, std::size_t i, const DenseTensor& theta,
                bool move_right, const DmrgParams& params) {
  SvdFactors f = svd_split_truncated(theta, {"kl", "p0"}, params.max_bond,
                                     params.cutoff, "m");
  const std::size_t k = f.singular_values.size();
  const std::size_t l = theta.shape()[0], r = theta.shape()[3];
  double kept = 0.0;
  for (double sv : f.singular_values) kept += sv * sv;
  const double scale = kept > 0.0 ? 1.0 / std::sqrt(kept) : 1.0;

  DenseTensor left({l, 2, k}, {"l", "p", "r"}, std::move(f.left.data()));
  DenseTensor right({k, 2, r}, {"l", "p", "r"}, std::move(f.right.data()));
  if (move_right) {
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < 2 * r; ++b)
        right[a * 2 * r + b] *= f.singular_values[a] * scale;
  } else {
    for (std::size_t a = 0; a < l * 2; ++a)
      for (std::size_t b = 0; b < k; ++b)
        left[a * k + b] *= f.singular_values[b] * scale;
  }
  s.site(i) = std::move(left);
  s.site(i + 1) = std::move(right);
}

}  // namespace

MPO tfi_mpo(std::size_t n, double g, double j) {
  if (n < 2) throw ShapeError("TFI chain needs at least two sites");
  std::vector<DenseTensor> sites;
  sites.reserve(n);

  DenseTensor first({1, 2, 2, 3}, {"l", "o", "i", "r"});
  put_op(first, 0, 0, 'X', -j * g);
  put_op(first, 0, 1, 'Z', -j);
  put_op(first, 0, 2, 'I', 1.0);
  sites.push_back(std::move(first));

  for (std::size_t s = 1; s + 1 < n; ++s) {
    DenseTensor mid({3, 2, 2, 3}, {"l", "o", "i", "r"});
    put_op(mid, 0, 0, 'I', 1.0);
    put_op(mid, 1, 0, 'Z', 1.0);
    put_op(mid, 2, 0, 'X', -j * g);
    put_op(mid, 2, 1, 'Z', -j);
    put_op(mid, 2, 2, 'I', 1.0);
    sites.push_back(std::move(mid));
  }

  DenseTensor last({3, 2, 2, 1}, {"l", "o", "i", "r"});
  put_op(last, 0, 0, 'I', 1.0);
  put_op(last, 1, 0, 'Z', 1.0);
  put_op(last, 2, 0, 'X', -j * g);
  sites.push_back(std::move(last));
  return MPO(std::move(sites));
}

DmrgResult dmrg_ground_state(const MPO& hamiltonian, MPS initial,
                             const DmrgParams& params) {
  const std::size_t n = initial.size();
  if (hamiltonian.size() != n)
    throw ShapeError("operator and state lengths differ");
  if (n < 2) throw ShapeError("two-site sweeps need at least two sites");

  DmrgResult res;
  MPS& s = initial;
  s.canonicalize(0);
  s.normalize();

  // Left and right environments around each site. Only renv needs filling
  // up front: each lenv[i+1] is produced by the sweep right before its use.
  std::vector<DenseTensor> lenv(n), renv(n);
  lenv[0] = left_env_start();
  renv[n - 1] = left_env_start();
  for (std::size_t i = n - 1; i > 0; --i)
    renv[i - 1] = absorb_right(renv[i], s.site(i), hamiltonian.sites[i]);

  double last_energy = 0.0;
  bool have_energy = false;

  for (std::size_t sweep = 0; sweep < params.max_sweeps; ++sweep) {
    double energy = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      LanczosResult lr = lanczos_ground(
          lenv[i], hamiltonian.sites[i], hamiltonian.sites[i + 1],
          renv[i + 1], merge_pair(s, i), params.lanczos_iters,
          params.lanczos_tol);
      split_pair(s, i, lr.vector, true, params);
      lenv[i + 1] = absorb_left(lenv[i], s.site(i), hamiltonian.sites[i]);
      energy = lr.value;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
      LanczosResult lr = lanczos_ground(
          lenv[i], hamiltonian.sites[i], hamiltonian.sites[i + 1],
          renv[i + 1], merge_pair(s, i), params.lanczos_iters,
          params.lanczos_tol);
      split_pair(s, i, lr.vector, false, params);
      renv[i] = absorb_right(renv[i + 1], s.site(i + 1),
                             hamiltonian.sites[i + 1]);
      energy = lr.value;
    }
    res.sweep_energies.push_back(energy);
    if (have_energy && std::abs(energy - last_energy) < params.energy_tol) {
      res.converged = true;
      last_energy = energy;
      break;
    }
    last_energy = energy;
    have_energy = true;
  }

  s.canonicalize(0);
  s.normalize();
  res.state = std::move(s);
  res.energy = last_energy;
  return res;
}

DmrgResult tfi_ground_state_full(std::size_t n, double g,
                                 const DmrgParams& params) {
  const std::uint64_t seed =
      Rng::split_mix(0xD31C0000u + 131u * n) ^ std::bit_cast<std::uint64_t>(g);
  Rng rng(seed);
  MPS init = make_random_mps(n, 2, rng);
  return dmrg_ground_state(tfi_mpo(n, g), std::move(init), params);
}

MPS tfi_ground_state(std::size_t n, double g, const DmrgParams& params) {
  DmrgResult res = tfi_ground_state_full(n, g, params);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "ground-state search did not converge; energy trace:";
    for (double e : res.sweep_energies) msg << " " << e;
    throw std::runtime_error(msg.str());
  }
  return std::move(res.state);
}

}  // namespace dqc
