#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sflow/operators.hpp"

namespace sflow {

// finite-range interaction: a self-adjoint term for each finite site set
class Interaction {
 public:
  explicit Interaction(int range = 2);

  // support sites are the term's region; throws on non-Hermitian terms or
  // diameter >= range; same-region terms accumulate
  void add_term(const LocalOperator& term);

  int range() const { return range_; }
  const std::map<std::pair<int, int>, LocalOperator>& terms() const { return terms_; }
  double max_term_norm() const;

  // transverse-field Ising: -J sum Z_i Z_{i+1} - h sum X_i over the chain
  static Interaction tfi(const Region& chain, double j_coupling, double h_field);

  std::string to_json() const;
  static Interaction from_json(const std::string& text);

 private:
  int range_;
  std::map<std::pair<int, int>, LocalOperator> terms_;  // keyed by (lo, hi)
};

// sum of all terms supported inside the window
LocalOperator local_hamiltonian(const Interaction& psi, const Region& window);

// Estimates the best commutator constant eps = max |[A,B]| / |B| over Pauli
// strings B of weight <= 2 outside the radius-n ball (a deterministic
// single-site sweep plus probe_count seeded random strings), and checks the
// locality bound |A - E_n(A)| <= 2 eps.
struct LocalityCheck {
  double epsilon = 0.0;
  double deviation = 0.0;
  bool bound_holds = true;
};
LocalityCheck locality_from_commutators(const LocalOperator& a, int n, int probe_count,
                                        uint64_t seed = 7);

}  // namespace sflow
