#pragma once
#include <functional>
#include <vector>

#include "sflow/filter.hpp"
#include "sflow/interaction.hpp"
#include "sflow/operators.hpp"
#include "sflow/spectral.hpp"

namespace sflow {

// s in [0,1] family of finite-range interactions with its declared s-derivative
class InteractionPath {
 public:
  InteractionPath(std::function<Interaction(double)> phi,
                  std::function<Interaction(double)> phi_dot,
                  std::vector<double> smoothness_grid = {});

  Interaction at(double s) const;   // s outside [0,1] rejected
  Interaction dot(double s) const;
  int range() const { return range_; }
  const std::vector<double>& smoothness_grid() const { return grid_; }

  // max over the grid and terms X of ||Phi(X;s)|| + |X| ||Phidot(X;s)||
  double strength_bound() const;

  // max over the grid, term-wise, of ||(Phi(s+eps) - Phi(s))/eps - Phidot(s)||;
  // a decreasing trend in eps certifies the declared derivative
  double derivative_consistency(double eps) const;

 private:
  std::function<Interaction(double)> phi_, dot_;
  std::vector<double> grid_;
  int range_ = 2;
};

// (1-s) start + s end; the derivative is the constant term-wise difference
InteractionPath linear_path(const Interaction& start, const Interaction& end);

// -sum Z_i Z_{i+1} - h(s) sum X_i with h(s) = (1-s) h0 + s h1.  Rejects field
// paths crossing 1, where the infinite-chain gap closes.
InteractionPath build_tfi_path(const Region& chain, double h0, double h1);

LocalOperator dH_ds(const InteractionPath& p, const Region& chain, double s);

// D(s) with eigenbasis elements K_gamma(E_m - E_n) (dH/ds)_{mn}; self-adjoint
LocalOperator generator(const InteractionPath& p, const Region& chain, double s,
                        const FilterFunction& f);

struct FlowConfig {
  int s_steps = 200;
  double gamma = 0.0;  // required > 0
  FilterParams filter;
  int reunitarize_every = 10;
  Region chain{0, 1};
  double gap_threshold = 1e-9;  // abort when a sampled gap dips below
  int store_every = 0;          // keep U every so many steps; 0 = endpoint only

  void validate() const;  // throws std::invalid_argument
};

struct FlowResult {
  std::vector<double> s_grid;
  std::vector<double> fidelity;         // |<psi_s | U(s) psi_0>| per grid point
  std::vector<double> gap_curve;
  std::vector<double> generator_norms;  // ||D(s)|| per grid point
  std::vector<double> unitary_s;        // positions of the stored unitaries
  std::vector<Matrix> unitaries;
  Matrix final_unitary;
  double unitarity_drift = 0.0;  // max ||U*U - I|| seen before re-projection
};

// integrates dU/ds = i D(s) U with classical RK4, the generator refreshed at
// stage midpoints, re-unitarizing by polar projection every
// reunitarize_every steps; throws std::runtime_error naming the offending s
// if a sampled gap falls below the threshold
FlowResult solve_flow(const InteractionPath& p, const FlowConfig& config);

LocalOperator alpha_apply(const LocalOperator& a, const Matrix& u, const Region& chain);

double min_gap(const InteractionPath& p, const Region& chain, int samples);

// || (I_{s+ds}(A) - I_{s-ds}(A)) / (2 ds) - V_s(A) || / ||A|| where V_s(A) is
// the kernel form of d/ds I_s(A); central-difference order O(ds^2)
double v_s_derivative_check(const LocalOperator& a, const InteractionPath& p,
                            const Region& chain, double s, double ds,
                            const FilterFunction& f);

}  // namespace sflow
