#pragma once
#include <functional>
#include <vector>

#include "sflow/flow.hpp"
#include "sflow/interaction.hpp"
#include "sflow/operators.hpp"
#include "sflow/spectral.hpp"

namespace sflow {

// x / ln^2(x), held flat at its minimum e^2/4 below x = e^2 so the weight is
// continuous and nondecreasing.  Negative distances are rejected.
double h_weight(double x);

// scaled weight eta1 * h(a_tilde * x)
struct WeightH {
  double eta1 = 1.0;
  double a_tilde = 1.0;

  void validate() const;  // both scales must be positive
  double operator()(double x) const;
};

// measured decay data over a strictly increasing abscissa (separation N - M
// between a cutoff and the probe's support radius), with an attached
// least-squares fit
struct DecayProfile {
  std::vector<double> abscissa;
  std::vector<double> values;  // norms, >= 0
  double fit_c = 0.0;
  double fit_rate = 0.0;
  double fit_quality = 0.0;  // R^2 of the log-space fit
};

enum class DecayModel {
  pure_exp,  // C e^{-rate x}
  hhat_exp,  // C e^{-eta1 h(a_tilde x)}
};

struct FitResult {
  double prefactor = 0.0;
  double rate = 0.0;     // pure_exp: exponential rate; hhat_exp: eta1
  double a_tilde = 0.0;  // hhat_exp only
  double quality = 0.0;
  bool envelope_ok = false;  // every usable point <= 1.05 x fitted envelope
};

// Least squares on the log of the values.  Points below 1e-14 of the largest
// value are treated as exact zeros and skipped; at least 3 must survive.
FitResult fit_exponential_decay(const DecayProfile& p, DecayModel model);

// ||tau^t(A) - E_N(tau^t(A))|| over the cutoffs in n_grid.  The fit fields
// hold the pure-exponential fit in N - M.
DecayProfile tau_locality_profile(const LocalOperator& a, double t, const SpectralData& s,
                                  const std::vector<int>& n_grid);

// Same tail for the flow automorphism alpha_s(A) = U(s)* A U(s), with U(s)
// looked up among the stored unitaries (s = 1 means the final one).  The fit
// fields hold the weighted-exponential model e^{-eta1 h(a_tilde (N-M))}.
DecayProfile alpha_locality_profile(const LocalOperator& a, const FlowResult& flow,
                                    double s, const Region& chain,
                                    const std::vector<int>& n_grid);

// ||tau^t_{ball(n)}(A) - tau^t_{ball(n_max)}(A)|| over increasing radii, the
// largest ball standing in for the thermodynamic limit; the last entry is 0
// by construction
DecayProfile finite_volume_convergence(const LocalOperator& a, const Interaction& psi,
                                       double t, const std::vector<int>& sizes);

// same comparison for the inverse flow automorphism U A U*, re-running the
// flow on every ball (path_for builds the interaction path for a given ball;
// base.gamma is used unchanged across sizes so the filters are comparable)
DecayProfile finite_volume_convergence(
    const LocalOperator& a, const std::function<InteractionPath(const Region&)>& path_for,
    const FlowConfig& base, const std::vector<int>& sizes);

struct ApproximateIdentity {
  LocalOperator u;             // 0 <= u <= 1, built on the diagonalized region
  double a_one_minus_u = 0.0;  // ||A (1 - u)||
  double phi_u = 0.0;          // <psi0| u |psi0>
  double u_psi_norm = 0.0;     // ||u psi0||
};

// u = g(e^{n^{beta_prime}} E_n(A*A)) with g(x) = x / (1 + x) applied to the
// spectrum through a log-space logistic, so the conjugation never overflows
// and spec(u) stays inside [0,1].  A must nearly annihilate the ground state
// (||A psi0|| <= ideal_tol); E_n(A*A) must be positive semidefinite up to
// roundoff or the construction aborts.
ApproximateIdentity approximate_identity(const LocalOperator& a, const SpectralData& s,
                                         int n, double beta_prime = 0.7,
                                         double ideal_tol = 1e-6);

}  // namespace sflow
