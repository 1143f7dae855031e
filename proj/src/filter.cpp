#include "sflow/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sflow/quad.hpp"

namespace sflow {

namespace {

constexpr double kSincSeriesCut = 1e-4;  // |x| below this: sin(x)/x = 1 - x^2/6

double sinc(double x) {
  if (std::abs(x) < kSincSeriesCut) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

}  // namespace

double compute_a1(double tail_tol, long min_terms) {
  if (!(tail_tol > 0.0)) throw std::invalid_argument("compute_a1: tail_tol must be positive");
  // S(N) = sum_{n=2}^{N} 1/(n ln^2 n), tail approximated by the integral from
  // N + 1/2, which equals 1/ln(N + 1/2).  The midpoint rule on a convex
  // integrand keeps the combined error well under 1/(N^2 ln^2 N).
  long n_terms = 1 << 14;
  while (1.0 / (static_cast<double>(n_terms) * n_terms * std::pow(std::log(static_cast<double>(n_terms)), 2)) > 7.0 * tail_tol)
    n_terms *= 2;
  n_terms = std::max(n_terms, min_terms);
  double s = 0.0;
  for (long n = n_terms; n >= 2; --n) {  // ascending magnitude
    double ln = std::log(static_cast<double>(n));
    s += 1.0 / (static_cast<double>(n) * ln * ln);
  }
  s += 1.0 / std::log(static_cast<double>(n_terms) + 0.5);
  return 0.5 / (1.0 + s);
}

double a_n(double a1, long n) {
  if (n < 1) throw std::invalid_argument("a_n: n must be >= 1");
  if (n == 1) return a1;
  double ln = std::log(static_cast<double>(n));
  return a1 / (static_cast<double>(n) * ln * ln);
}

void FilterParams::validate() const {
  if (!(a1 >= 0.0) || a1 > 0.5) throw std::invalid_argument("FilterParams: a1 out of range");
  if (n_terms < 2) throw std::invalid_argument("FilterParams: n_terms must be >= 2");
  if (!(t_cut > 1.0)) throw std::invalid_argument("FilterParams: t_cut must exceed 1");
  if (quad_nodes < 4) throw std::invalid_argument("FilterParams: quad_nodes must be >= 4");
}

FilterFunction::FilterFunction(const FilterParams& params, double gamma,
                               double kmax_over_gamma, double norm_tol)
    : params_(params), gamma_(gamma), kmax_(kmax_over_gamma), norm_tol_(norm_tol) {
  if (params_.a1 == 0.0) params_.a1 = compute_a1(1e-12);
  params_.validate();
  if (!(gamma_ > 0.0)) throw std::invalid_argument("FilterFunction: gamma must be positive");
  if (!(kmax_ >= 2.0)) throw std::invalid_argument("FilterFunction: kmax_over_gamma must be >= 2");
  if (!(norm_tol_ > 0.0 && norm_tol_ < 1e-3))
    throw std::invalid_argument("FilterFunction: norm_tol out of range");

  const int n = params_.n_terms;
  a_.resize(n);
  for (int i = 0; i < n; ++i) a_[i] = a_n(params_.a1, i + 1);
  s2_.assign(n + 1, 0.0);
  s4_.assign(n + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    s2_[i] = s2_[i + 1] + a_[i] * a_[i];
    s4_[i] = s4_[i + 1] + a_[i] * a_[i] * a_[i] * a_[i];
  }
  double edge = 0.0;
  for (int i = n - 1; i >= 0; --i) edge += 2.0 * a_[i];
  support_edge_ = edge;

  // Nodes per panel: enough for the bare integrand plus the most oscillatory
  // Fourier factor we certify (phase kmax * width per panel, ~2 digits per
  // node beyond phase/2).
  nodes_per_panel_ = std::max({2, static_cast<int>(std::ceil(params_.quad_nodes * panel_width_)),
                               static_cast<int>(std::ceil(0.5 * kmax_ * panel_width_)) + 8});

  // March panels until the certified tail bound is negligible.
  const auto& rule = quad::gauss_rule(nodes_per_panel_);
  panel_boundary_.push_back(0.0);
  double acc = 0.0;
  while (true) {
    double a = panel_boundary_.back();
    double b = a + panel_width_;
    if (b > params_.t_cut * (1.0 + 1e-12)) {
      throw std::runtime_error("FilterFunction: t_cut too small for requested norm_tol");
    }
    double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    double mass = 0.0;
    for (size_t j = 0; j < rule.x.size(); ++j) {
      double x = mid + half * rule.x[j];
      double w = half * rule.w[j];
      double f = omega1_unnormalized(x);
      node_x_.push_back(x);
      node_w_.push_back(w);
      node_f_.push_back(f);
      mass += w * f;
    }
    panel_boundary_.push_back(b);
    panel_mass_.push_back(mass);
    acc += mass;
    double tb = tail_bound_unnormalized(b);
    if (tb <= 0.25 * norm_tol_ * acc) {
      t_q_ = b;
      half_mass_ = acc;
      tail_at_tq_ = tb;
      break;
    }
  }

  c_ = 1.0 / (2.0 * (half_mass_ + tail_at_tq_));
  norm_defect_ = 2.0 * c_ * tail_at_tq_;

  double m2 = 0.0;
  for (size_t j = 0; j < node_x_.size(); ++j)
    m2 += node_w_[j] * node_f_[j] * node_x_[j] * node_x_[j];
  m2_ = 2.0 * c_ * m2;

  // Fourier table.  Past the truncated support edge the transform is pure
  // leakage; 1.32 > edge + margin covers every lookup the kernels make.
  table_max_ = std::max(1.32, support_edge_ * 1.3);
  int n_tab = static_cast<int>(std::ceil(table_max_ / 5e-4)) + 1;
  table_dk_ = table_max_ / (n_tab - 1);
  table_.resize(n_tab);
  table_d_.resize(n_tab);
  table_d2_.resize(n_tab);
  for (int i = 0; i < n_tab; ++i) {
    double kappa = i * table_dk_;
    double sc = 0.0, ss = 0.0, sc2 = 0.0;
    for (size_t j = 0; j < node_x_.size(); ++j) {
      double wf = node_w_[j] * node_f_[j];
      double x = node_x_[j];
      double co = std::cos(kappa * x);
      sc += wf * co;
      ss += wf * x * std::sin(kappa * x);
      sc2 += wf * x * x * co;
    }
    table_[i] = 2.0 * c_ * sc;
    table_d_[i] = -2.0 * c_ * ss;
    table_d2_[i] = -2.0 * c_ * sc2;
  }
}

double FilterFunction::omega1_unnormalized(double t) const {
  t = std::abs(t);
  if (t == 0.0) return 1.0;
  const int n = params_.n_terms;
  double prod = 1.0;
  int i = 0;
  // a_2 > a_3 > ... but a_1 sits between; handle the head exactly until the
  // arguments drop below the series cut, then close with suffix sums of
  // 2 log(1 - x^2/6) ~ -x^2/3 - x^4/36.
  for (; i < n; ++i) {
    double x = a_[i] * t;
    if (i >= 2 && x < kSincSeriesCut) break;
    double s = sinc(x);
    prod *= s * s;
    if (prod == 0.0) return 0.0;
  }
  if (i < n) {
    double log_tail = -(t * t) * s2_[i] / 3.0 - (t * t) * (t * t) * s4_[i] / 36.0;
    prod *= std::exp(log_tail);
  }
  return prod;
}

double FilterFunction::tail_bound_unnormalized(double t) const {
  // Bound each factor with sin^2 <= 1 for the m smallest n with a_n t >= 1,
  // and by 1 otherwise:  prod <= (prod_front a_n^-2) t^-2m, which integrates
  // to (prod a_n^-2) t^(1-2m)/(2m-1).  Compared with the closed-form bound
  // (27/14) e^4 (t/ln^2 t)^2 exp(-2 a1 t/ln^2 t) valid for t > e^9 (both in
  // unnormalized units) and the smaller one is returned.
  if (!(t > 0.0)) return std::numeric_limits<double>::infinity();
  double best = std::numeric_limits<double>::infinity();
  double log_prod = 0.0;
  int m = 0;
  for (int i = 0; i < std::min<int>(params_.n_terms, 64); ++i) {
    if (a_[i] * t < 1.0) {
      if (i >= 2) break;  // a_1 may fail while a_2 qualifies
      continue;
    }
    ++m;
    log_prod += -2.0 * std::log(a_[i]);
    double lb = log_prod + (1.0 - 2.0 * m) * std::log(t) - std::log(2.0 * m - 1.0);
    best = std::min(best, lb > 700.0 ? std::numeric_limits<double>::infinity() : std::exp(lb));
    if (m >= 24) break;
  }
  if (t > std::exp(9.0)) {
    double lt = std::log(t);
    double h = t / (lt * lt);
    double lb = std::log(27.0 / 14.0) + 4.0 + 2.0 * std::log(h) - 2.0 * params_.a1 * h;
    if (lb < 700.0) best = std::min(best, std::exp(lb));
  }
  return best;
}

double FilterFunction::omega1(double t) const { return c_ * omega1_unnormalized(t); }

double FilterFunction::omega_gamma(double t) const { return gamma_ * omega1(gamma_ * t); }

double FilterFunction::tail_mass_bound(double t) const {
  return c_ * tail_bound_unnormalized(t);
}

double FilterFunction::w1(double x) const {
  if (x < 0.0) throw std::invalid_argument("w1: x must be >= 0");
  if (x >= t_q_) return std::min(1.0, c_ * tail_bound_unnormalized(x));
  size_t k = static_cast<size_t>(std::floor(x / panel_width_));
  k = std::min(k, panel_mass_.size() - 1);
  double b = panel_boundary_[k + 1];
  double acc = tail_at_tq_;
  for (size_t j = k + 1; j < panel_mass_.size(); ++j) acc += panel_mass_[j];
  if (b > x) {
    const auto& rule = quad::gauss_rule(nodes_per_panel_);
    double half = 0.5 * (b - x), mid = 0.5 * (b + x);
    for (size_t j = 0; j < rule.x.size(); ++j)
      acc += half * rule.w[j] * omega1_unnormalized(mid + half * rule.x[j]);
  }
  return c_ * acc;
}

double FilterFunction::w_gamma(double x) const { return w1(gamma_ * x); }

double FilterFunction::fourier_x(double kappa) const {
  double s = 0.0;
  for (size_t j = 0; j < node_x_.size(); ++j)
    s += node_w_[j] * node_f_[j] * std::cos(kappa * node_x_[j]);
  return 2.0 * c_ * s;
}

std::complex<double> FilterFunction::fourier_omega(double k) const {
  double kappa = std::abs(k) / gamma_;
  if (kappa <= kmax_) return {fourier_x(kappa), 0.0};
  // Beyond the certified band: refine per-panel resolution for the faster
  // phase.  Rarely hit; kept exact rather than fast.
  int p = static_cast<int>(std::ceil(0.5 * kappa * panel_width_)) + 8;
  const auto& rule = quad::gauss_rule(p);
  double s = 0.0;
  for (size_t k2 = 0; k2 + 1 < panel_boundary_.size(); ++k2) {
    double a = panel_boundary_[k2], b = panel_boundary_[k2 + 1];
    double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (size_t j = 0; j < rule.x.size(); ++j) {
      double x = mid + half * rule.x[j];
      s += half * rule.w[j] * omega1_unnormalized(x) * std::cos(kappa * x);
    }
  }
  return {2.0 * c_ * s, 0.0};
}

namespace {

// cubic Hermite on a uniform grid, with exact tangent values supplied
double hermite(const std::vector<double>& val, const std::vector<double>& der,
               double dk, double kappa) {
  double u = kappa / dk;
  long i = static_cast<long>(std::floor(u));
  i = std::clamp(i, 0L, static_cast<long>(val.size()) - 2);
  double f = u - i;
  double f2 = f * f, f3 = f2 * f;
  return (2 * f3 - 3 * f2 + 1) * val[i] + (f3 - 2 * f2 + f) * dk * der[i] +
         (-2 * f3 + 3 * f2) * val[i + 1] + (f3 - f2) * dk * der[i + 1];
}

}  // namespace

double FilterFunction::table_value(double kappa) const {
  kappa = std::abs(kappa);
  if (kappa >= table_max_) return 0.0;
  return hermite(table_, table_d_, table_dk_, kappa);
}

double FilterFunction::table_slope(double kappa) const {
  double s = kappa < 0.0 ? -1.0 : 1.0;
  kappa = std::abs(kappa);
  if (kappa >= table_max_) return 0.0;
  return s * hermite(table_d_, table_d2_, table_dk_, kappa);
}

double FilterFunction::fourier_omega_fast(double k) const {
  double kappa = std::abs(k) / gamma_;
  if (kappa >= table_max_) return 0.0;
  return table_value(kappa);
}

std::complex<double> FilterFunction::flow_kernel(double delta_e) const {
  // i (mass - fourier(dE)) / dE with both terms from the same node sum, i.e.
  // i * int omega (1 - cos(t dE)) dt / dE.  Writing 1 - cos as 2 sin^2(./2)
  // keeps the evaluation stable all the way to dE -> 0 (no cancellation
  // against the truncated-tail norm defect).
  if (delta_e == 0.0) return {0.0, 0.0};
  double kappa = delta_e / gamma_;
  double s = 0.0;
  for (size_t j = 0; j < node_x_.size(); ++j) {
    double h = std::sin(0.5 * kappa * node_x_[j]);
    s += node_w_[j] * node_f_[j] * h * h;
  }
  return {0.0, 4.0 * c_ * s / delta_e};
}

std::complex<double> FilterFunction::flow_kernel_fast(double delta_e) const {
  if (delta_e == 0.0) return {0.0, 0.0};
  double kappa = std::abs(delta_e) / gamma_;
  if (kappa < 1e-6) return {0.0, delta_e * m2_ / (2.0 * gamma_ * gamma_)};
  double w = table_value(kappa);
  return {0.0, (table_[0] - w) / delta_e};
}

std::complex<double> FilterFunction::k2_kernel(double a, double b) const {
  double ka = a / gamma_, kb = b / gamma_;
  if (std::abs(kb) < 0.125 * table_dk_) {
    // Midpoint-slope form of the divided difference: differencing the value
    // interpolant inside one table cell would pick up its local wiggle, the
    // tabulated derivative does not.  Exact in the b -> 0 limit, where
    // K2(a, 0) = int t omega_gamma(t) e^{iat} dt = -i d/dk fourier at a.
    return {0.0, -table_slope(ka + 0.5 * kb) / gamma_};
  }
  double num = table_value(ka + kb) - table_value(ka);
  // (num)/(i b) = -i num / b
  return {0.0, -num / b};
}

std::vector<FilterFunction::TimeNode> FilterFunction::time_nodes() const {
  std::vector<TimeNode> out(node_x_.size());
  for (size_t j = 0; j < node_x_.size(); ++j)
    out[j] = {node_x_[j] / gamma_, node_w_[j] * c_ * node_f_[j]};
  return out;
}

double FilterFunction::envelope_c1() const {
  return (27.0 / 14.0) * c_ * std::exp(4.0);
}

}  // namespace sflow
