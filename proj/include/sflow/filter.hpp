#pragma once
#include <complex>
#include <vector>

namespace sflow {

// a1 such that sum_{n>=1} a_n = 1/2 with a_n = a1/(n ln^2 n) for n >= 2.
// Absolute error of the result is below tail_tol. min_terms forces a larger
// summation cutoff (used to test cutoff independence).
double compute_a1(double tail_tol, long min_terms = 0);

double a_n(double a1, long n);

struct FilterParams {
  double a1 = 0.0;       // 0 means: compute with tail_tol 1e-12 at construction
  int n_terms = 10000;   // product truncation
  double t_cut = 1.0e4;  // hard cap on the time-integration domain (units 1/gamma)
  int quad_nodes = 40;   // quadrature nodes per unit interval at gamma = 1

  void validate() const;  // throws std::invalid_argument
};

// The filter function omega_gamma(t) = gamma*omega1(gamma*t) where
//   omega1(t) = c * prod_{n=1}^{n_terms} (sin(a_n t)/(a_n t))^2
// and c normalizes the integral over R to 1.  All time integrals run over
// [-T, T] with T chosen so a certified bound on the remaining tail mass is
// below norm_tol; construction fails if t_cut is too small for that.
class FilterFunction {
 public:
  FilterFunction(const FilterParams& params, double gamma,
                 double kmax_over_gamma = 64.0, double norm_tol = 2e-10);

  double omega1(double t) const;       // includes the normalization c
  double omega_gamma(double t) const;  // gamma * omega1(gamma t)

  // Tail integrals W1(x) = int_x^inf omega1, W_gamma(x) = W1(gamma x); x >= 0.
  double w1(double x) const;
  double w_gamma(double x) const;

  // int omega_gamma(t) e^{ikt} dt.  Real up to quadrature noise.  Certified
  // accurate for |k| <= kmax_over_gamma * gamma (slower fallback beyond).
  std::complex<double> fourier_omega(double k) const;

  // Table-backed fourier_omega for O(dim^2) spectral weighting.  Beyond the
  // tabulated range (|k| > 1.32 gamma, past the transform's support) the
  // value is below the leak tolerance and reported as 0.
  double fourier_omega_fast(double k) const;

  // K_gamma(dE) = int omega_gamma(t) (e^{it dE} - 1)/(i dE) dt, via the exact
  // reduction K = i(1 - fourier_omega(dE))/dE; purely imaginary and odd.
  std::complex<double> flow_kernel(double delta_e) const;

  // Same kernel from the precomputed Fourier table (cubic interpolation);
  // used in O(dim^2) generator builds.
  std::complex<double> flow_kernel_fast(double delta_e) const;

  // K2(a, b) = int dt omega_gamma(t) e^{iat} int_0^t du e^{iub}
  //          = (fourier(a+b) - fourier(a)) / (ib), table-backed.
  std::complex<double> k2_kernel(double a, double b) const;

  // Positive-time quadrature nodes carrying weight * omega_gamma(t); callers
  // fold in t < 0 by symmetry.  Truncation error is below norm_tol.
  struct TimeNode {
    double t;
    double w_omega;
  };
  std::vector<TimeNode> time_nodes() const;

  double c() const { return c_; }
  double gamma() const { return gamma_; }
  const FilterParams& params() const { return params_; }

  // Certified upper bound on int_T^inf omega1 (normalized units).
  double tail_mass_bound(double t) const;
  double support_edge() const { return support_edge_; }    // 2 sum a_n (truncated)
  double second_moment() const { return m2_; }             // int t^2 omega1 dt
  double quad_domain() const { return t_q_; }              // effective half-domain
  double norm_defect() const { return norm_defect_; }      // 1 - truncated mass
  double envelope_c1() const;                              // (27/14) c e^4
  double eta() const { return 2.0 * params_.a1; }

 private:
  double omega1_unnormalized(double t) const;
  double tail_bound_unnormalized(double t) const;
  double fourier_x(double kappa) const;        // int omega1(x) e^{i kappa x} dx
  double table_value(double kappa) const;
  double table_slope(double kappa) const;

  FilterParams params_;
  double gamma_ = 1.0;
  double kmax_ = 64.0;  // in units of gamma
  double norm_tol_ = 2e-10;

  std::vector<double> a_;        // a_1..a_{n_terms}
  std::vector<double> s2_, s4_;  // suffix sums of a_n^2, a_n^4
  double support_edge_ = 0.0;

  // quadrature grid on [0, t_q_], panel width 1/4, shared by all integrals
  std::vector<double> node_x_, node_w_, node_f_;  // node_f_ = unnormalized omega1
  std::vector<double> panel_boundary_, panel_mass_;
  int nodes_per_panel_ = 8;
  double panel_width_ = 0.25;
  double t_q_ = 0.0;
  double half_mass_ = 0.0;  // int_0^{t_q} of the unnormalized product
  double tail_at_tq_ = 0.0;
  double c_ = 0.0;
  double norm_defect_ = 0.0;
  double m2_ = 0.0;

  // Fourier transform with its first and second kappa-derivatives, tabulated
  // on [0, table_max_]; the derivatives supply exact Hermite tangents
  std::vector<double> table_, table_d_, table_d2_;
  double table_max_ = 1.32;
  double table_dk_ = 0.0;
};

}  // namespace sflow
