#pragma once
#include <vector>

#include "sflow/filter.hpp"
#include "sflow/operators.hpp"

namespace sflow {

// full Hermitian eigendecomposition of a local Hamiltonian
struct SpectralData {
  Region region{0, 0};
  std::vector<double> eigenvalues;  // ascending
  Matrix eigenvectors;              // columns, unitary
  int ground_index = 0;
  double gap = 0.0;              // first level above the ground cluster
  double degeneracy_tol = 0.0;   // clustering tolerance behind the gap
  int ground_multiplicity = 1;   // size of the ground cluster
  double norm = 0.0;             // max |eigenvalue|

  long dim() const { return static_cast<long>(eigenvalues.size()); }
};

struct GroundState {
  Vector vector;  // unit
  double energy = 0.0;
};

// rejects input with ||H - H*|| > 1e-10 ||H||
SpectralData diagonalize(const LocalOperator& h);

GroundState ground_state(const SpectralData& s);

// tau^t(A) = e^{itH} A e^{-itH}
LocalOperator heisenberg(const LocalOperator& a, double t, const SpectralData& s);

enum class FilterPath { spectral, time_quadrature };

// Eigenbasis matrix of filter weights w(E_m - E_n).  The spectral path reads
// the tabulated transform; the time path sums the quadrature of
// omega_gamma(t) cos(t dE) node by node and serves as a cross-check oracle.
Eigen::MatrixXd filter_weights(const SpectralData& s, const FilterFunction& f,
                               FilterPath path);

// I(A) = int dt omega_gamma(t) tau^t(A), i.e. A filtered by the weights above
LocalOperator filtered_average(const LocalOperator& a, const SpectralData& s,
                               const FilterFunction& f,
                               FilterPath path = FilterPath::spectral);

// residual plus a flag recording whether the filter width fit under the gap
struct ResidualReport {
  double value = 0.0;
  bool gap_ok = true;
};

// || I(A) psi0 - <psi0|A|psi0> psi0 || / ||A||.  Near zero whenever the
// transform of the filter vanishes across the spectral gap.
ResidualReport ground_action_residual(const LocalOperator& a, const SpectralData& s,
                                      const FilterFunction& f);

// | <psi0| B* I(A) |psi0> - <psi0|B*|psi0><psi0|A|psi0> | / (||A|| ||B||)
ResidualReport decoupling_residual(const LocalOperator& a, const LocalOperator& b,
                                   const SpectralData& s, const FilterFunction& f);

// || A - tau^t(A) - int_0^t du (-delta)(tau^u(A)) || / ||A|| with
// delta(B) = i[H, B].  The u-integral runs over composite two-point
// Gauss-Legendre panels (about u_nodes nodes in total), so the returned
// residual is pure quadrature error and shrinks at the rule's order.
double duhamel_residual(const LocalOperator& a, const SpectralData& s, double t,
                        int u_nodes);

// ||[tau^t(A), B_d]|| over a time grid and increasing separations d, with a
// light-cone envelope fit  values <= C exp(v t - d)
struct CommutatorProfile {
  std::vector<double> times;
  std::vector<double> distances;
  std::vector<std::vector<double>> norms;  // [time][distance]
  double fit_amplitude = 0.0;      // C of the least-squares fit in log space
  double fit_velocity = 0.0;       // v
  double fit_quality = 0.0;        // R^2 of the log-space fit
  double envelope_amplitude = 0.0; // smallest C putting every sample under the bound
};

// B is translated away from A one site at a time for as long as it stays
// inside the diagonalized region; overlapping supports are rejected
CommutatorProfile lr_commutator_profile(const LocalOperator& a, const LocalOperator& b,
                                        const std::vector<double>& t_grid,
                                        const SpectralData& s);

// reference decay weight (1+r)^{-(nu+1)} e^{-r}
double lr_reference_weight(double r, int nu);

}  // namespace sflow
