#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dqc/rng.hpp"
#include "dqc/tensor.hpp"

namespace dqc {

// Truncation policy for gate application and canonicalization moves.
struct Truncation {
  std::size_t max_bond = 256;
  double cutoff = 1e-12;
};

// Matrix product state for a chain of qubits. Site tensors carry labels
// ("l", "p", "r") with physical extent 2; boundary bond extents are 1.
// When ortho_center() holds a site, every site left of it is a left
// isometry and every site right of it a right isometry.
class MPS {
 public:
  MPS() = default;
  explicit MPS(std::vector<DenseTensor> sites);

  static MPS all_zero(std::size_t n_sites);
  static MPS product_state(const std::vector<int>& bits);

  std::size_t size() const { return sites_.size(); }
  const DenseTensor& site(std::size_t i) const { return sites_[i]; }
  // Mutable access drops gauge tracking; re-canonicalize when done.
  DenseTensor& site(std::size_t i);

  // Bond b sits between sites b-1 and b; bonds 0 and size() are the
  // trivial boundary bonds.
  std::size_t bond_dim(std::size_t bond) const;
  std::size_t max_bond_dim() const;

  std::optional<std::size_t> ortho_center() const { return center_; }

  void canonicalize(std::size_t center);
  double norm() const;
  void normalize();

  friend void apply_gate_inplace(MPS& s, const DenseTensor& unitary,
                                 const std::vector<std::size_t>& sites,
                                 const Truncation& trunc);

 private:
  std::vector<DenseTensor> sites_;
  std::optional<std::size_t> center_;

  void check_site(const DenseTensor& t, std::size_t i) const;
};

// <bra|ket>, conjugating bra.
Complex overlap(const MPS& bra, const MPS& ket);

double fidelity(const MPS& a, const MPS& b);

// Apply a unitary gate on one site or two adjacent sites. The unitary is
// checked (within 1e-8) before use; two-site results are split with the
// given truncation and renormalized if weight was discarded.
MPS apply_gate(const MPS& s, const DenseTensor& unitary,
               const std::vector<std::size_t>& sites,
               const Truncation& trunc = {});
void apply_gate_inplace(MPS& s, const DenseTensor& unitary,
                        const std::vector<std::size_t>& sites,
                        const Truncation& trunc = {});

struct ProjectionResult {
  MPS state;           // remaining sites, normalized (unless degenerate)
  double probability;  // Born probability of the requested outcome
  bool degenerate;     // probability fell below the degeneracy floor
};

inline constexpr double kProbabilityFloor = 1e-12;

// Project the listed sites onto computational outcomes and remove them.
// sites must be strictly ascending; at least one site must remain.
ProjectionResult project(const MPS& s, const std::vector<std::size_t>& sites,
                         const std::vector<int>& outcome);

struct SampleResult {
  std::vector<int> outcome;
  double probability;
};

// Born-rule sample of the listed sites via sequential conditionals.
// The returned probability is the joint probability of the outcome drawn.
SampleResult sample_outcome(const MPS& s,
                            const std::vector<std::size_t>& sites, Rng& rng);

// Von Neumann entropy (base 2) across bond `cut`, cut in [1, size()-1].
double entanglement_entropy(const MPS& s, std::size_t cut);

// Derivative of <bra|G|ket> with respect to a gate G on the listed
// adjacent sites: the overlap network with the gate tensor left out.
// Result carries labels ("o", "i") with o the bra-side legs, so
// <bra|G|ket> = contract_shared(result, G) for any gate tensor G.
DenseTensor gate_environment(const MPS& bra, const MPS& ket,
                             const std::vector<std::size_t>& sites);

// Extend the chain with fresh wires carrying fixed computational bits.
// positions are wire indices in the extended chain, strictly ascending.
// Inserted sites pass the neighboring bond through unchanged, so the
// result represents |s> with the given bits spliced in at those wires.
MPS with_inserted_bits(const MPS& s, const std::vector<std::size_t>& positions,
                       const std::vector<int>& bits);

MPS make_ghz(std::size_t n);

// Equal superposition of the given distinct computational basis states
// (site 0 is the most significant bit). Bond dimension is at most the
// number of states.
MPS make_subset_state(std::size_t n, const std::vector<std::uint64_t>& basis);
MPS make_subset_state(std::size_t n, std::size_t k, Rng& rng);

// Gaussian random site tensors, canonicalized and normalized.
MPS make_random_mps(std::size_t n, std::size_t chi, Rng& rng);

// Binary container round-trip, format documented in README.
void save_mps(const MPS& s, const std::string& path);
MPS load_mps(const std::string& path);

// Matrix product operator over the same chain layout. Site tensors carry
// labels ("l", "o", "i", "r") with extents (D, 2, 2, D'); boundary bond
// extents are 1.
struct MPO {
  std::vector<DenseTensor> sites;

  explicit MPO(std::vector<DenseTensor> site_tensors);
  std::size_t size() const { return sites.size(); }
};

// <s|op|s> for a normalized state.
Complex expectation(const MPO& op, const MPS& s);

}  // namespace dqc
