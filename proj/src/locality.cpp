#include "sflow/locality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace sflow {

namespace {

int ball_radius(const Region& r) { return std::max(std::abs(r.lo), std::abs(r.hi)); }

void check_grid(const std::vector<int>& grid, int m, int radius, const char* who) {
  if (grid.empty()) throw std::invalid_argument(std::string(who) + ": empty cutoff grid");
  int prev = m - 1;
  for (int n : grid) {
    if (n <= prev) throw std::invalid_argument(std::string(who) + ": grid must increase");
    prev = n;
  }
  if (grid.front() < m || grid.back() > radius)
    throw std::invalid_argument(std::string(who) + ": grid leaves [support radius, chain radius]");
}

// tail norms ||op - E_n(op)|| over the grid, abscissa shifted to n - m
DecayProfile tail_profile(const LocalOperator& op, const std::vector<int>& grid, int m) {
  DecayProfile prof;
  for (int n : grid) {
    prof.abscissa.push_back(n - m);
    prof.values.push_back(operator_norm(op - conditional_expectation(op, n)));
  }
  return prof;
}

void attach_fit(DecayProfile& prof, DecayModel model) {
  try {
    FitResult fit = fit_exponential_decay(prof, model);
    prof.fit_c = fit.prefactor;
    prof.fit_rate = fit.rate;
    prof.fit_quality = fit.quality;
  } catch (const std::invalid_argument&) {
    // too few usable points; leave the fit fields at zero
  }
}

double logistic(double z) {
  return z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

double h_weight(double x) {
  if (x < 0.0) throw std::invalid_argument("h_weight: negative distance");
  const double e2 = std::exp(2.0);
  if (x <= e2) return e2 / 4.0;
  double lx = std::log(x);
  return x / (lx * lx);
}

void WeightH::validate() const {
  if (!(eta1 > 0.0) || !(a_tilde > 0.0))
    throw std::invalid_argument("WeightH: scales must be positive");
}

double WeightH::operator()(double x) const { return eta1 * h_weight(a_tilde * x); }

FitResult fit_exponential_decay(const DecayProfile& p, DecayModel model) {
  if (p.abscissa.size() != p.values.size())
    throw std::invalid_argument("fit_exponential_decay: abscissa/value size mismatch");
  double top = 0.0;
  for (size_t i = 0; i < p.values.size(); ++i) {
    if (p.values[i] < 0.0)
      throw std::invalid_argument("fit_exponential_decay: negative value");
    if (i > 0 && p.abscissa[i] <= p.abscissa[i - 1])
      throw std::invalid_argument("fit_exponential_decay: abscissa must increase");
    top = std::max(top, p.values[i]);
  }

  std::vector<double> x, y;
  for (size_t i = 0; i < p.values.size(); ++i)
    if (p.values[i] > 1e-14 * top) {
      x.push_back(p.abscissa[i]);
      y.push_back(std::log(p.values[i]));
    }
  if (x.size() < 3)
    throw std::invalid_argument("fit_exponential_decay: need at least 3 nonzero points");
  size_t n = x.size();

  // intercept a and coefficient b of  y = a - b * g(x)
  auto solve = [&](const std::vector<double>& g, double& a, double& b, double& r2) {
    double sg = 0, sy = 0, sgg = 0, sgy = 0;
    for (size_t i = 0; i < n; ++i) {
      sg += g[i];
      sy += y[i];
      sgg += g[i] * g[i];
      sgy += g[i] * y[i];
    }
    double det = n * sgg - sg * sg;
    if (std::abs(det) < 1e-12 * (n * sgg + sg * sg + 1e-300)) return false;
    b = -(n * sgy - sg * sy) / det;
    a = (sy + b * sg) / n;
    double sse = 0, sst = 0, ybar = sy / n;
    for (size_t i = 0; i < n; ++i) {
      double e = y[i] - (a - b * g[i]);
      sse += e * e;
      sst += (y[i] - ybar) * (y[i] - ybar);
    }
    r2 = sst > 0.0 ? 1.0 - sse / sst : (sse < 1e-20 ? 1.0 : 0.0);
    return true;
  };

  FitResult out;
  double a = 0, b = 0, r2 = 0;
  std::vector<double> g(n);
  if (model == DecayModel::pure_exp) {
    if (!solve(x, a, b, r2))
      throw std::invalid_argument("fit_exponential_decay: degenerate abscissa");
    out.rate = b;
  } else {
    // the weighted model is linear in (a, eta1) once a_tilde is fixed; scan it
    double best_sse = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 80; ++k) {
      double at = 0.05 * std::pow(400.0, k / 80.0);  // log-spaced in [0.05, 20]
      for (size_t i = 0; i < n; ++i) g[i] = h_weight(at * x[i]);
      double ak, bk, rk;
      if (!solve(g, ak, bk, rk)) continue;
      double sse = (1.0 - rk);
      if (sse < best_sse) {
        best_sse = sse;
        a = ak;
        b = bk;
        r2 = rk;
        out.a_tilde = at;
        out.rate = bk;
      }
    }
    if (!std::isfinite(best_sse))
      throw std::invalid_argument("fit_exponential_decay: weighted model is degenerate");
    for (size_t i = 0; i < n; ++i) g[i] = h_weight(out.a_tilde * x[i]);
  }
  out.prefactor = std::exp(a);
  out.quality = r2;

  out.envelope_ok = true;
  for (size_t i = 0; i < n; ++i) {
    double model_log = model == DecayModel::pure_exp ? a - b * x[i] : a - b * g[i];
    if (y[i] > std::log(1.05) + model_log) out.envelope_ok = false;
  }
  return out;
}

DecayProfile tau_locality_profile(const LocalOperator& a, double t, const SpectralData& s,
                                  const std::vector<int>& n_grid) {
  int m = ball_radius(a.support());
  check_grid(n_grid, m, ball_radius(s.region), "tau_locality_profile");
  DecayProfile prof = tail_profile(heisenberg(a, t, s), n_grid, m);
  attach_fit(prof, DecayModel::pure_exp);
  return prof;
}

DecayProfile alpha_locality_profile(const LocalOperator& a, const FlowResult& flow,
                                    double s, const Region& chain,
                                    const std::vector<int>& n_grid) {
  int m = ball_radius(a.support());
  check_grid(n_grid, m, ball_radius(chain), "alpha_locality_profile");

  const Matrix* u = nullptr;
  if (std::abs(s - 1.0) < 1e-9) u = &flow.final_unitary;
  for (size_t k = 0; !u && k < flow.unitary_s.size(); ++k)
    if (std::abs(flow.unitary_s[k] - s) < 1e-9) u = &flow.unitaries[k];
  if (!u) throw std::invalid_argument("alpha_locality_profile: no stored unitary at s");

  DecayProfile prof = tail_profile(alpha_apply(a, *u, chain), n_grid, m);
  attach_fit(prof, DecayModel::hhat_exp);
  return prof;
}

namespace {

DecayProfile volume_comparison(const std::vector<LocalOperator>& snapshots,
                               const std::vector<int>& sizes, int m) {
  DecayProfile prof;
  const LocalOperator& ref = snapshots.back();
  for (size_t k = 0; k < snapshots.size(); ++k) {
    prof.abscissa.push_back(sizes[k] - m);
    prof.values.push_back(k + 1 == snapshots.size() ? 0.0
                                                    : operator_norm(snapshots[k] - ref));
  }
  attach_fit(prof, DecayModel::pure_exp);
  return prof;
}

}  // namespace

DecayProfile finite_volume_convergence(const LocalOperator& a, const Interaction& psi,
                                       double t, const std::vector<int>& sizes) {
  int m = ball_radius(a.support());
  check_grid(sizes, m, sizes.empty() ? m : sizes.back(), "finite_volume_convergence");
  Region big = Region::ball(sizes.back());
  std::vector<LocalOperator> snapshots;
  for (int n : sizes) {
    SpectralData sd = diagonalize(local_hamiltonian(psi, Region::ball(n)));
    snapshots.push_back(embed(heisenberg(a, t, sd), big));
  }
  return volume_comparison(snapshots, sizes, m);
}

DecayProfile finite_volume_convergence(
    const LocalOperator& a, const std::function<InteractionPath(const Region&)>& path_for,
    const FlowConfig& base, const std::vector<int>& sizes) {
  int m = ball_radius(a.support());
  check_grid(sizes, m, sizes.empty() ? m : sizes.back(), "finite_volume_convergence");
  Region big = Region::ball(sizes.back());
  std::vector<LocalOperator> snapshots;
  for (int n : sizes) {
    Region lam = Region::ball(n);
    FlowConfig cfg = base;
    cfg.chain = lam;
    FlowResult res = solve_flow(path_for(lam), cfg);
    Matrix inv = res.final_unitary * embed(a, lam).matrix() * res.final_unitary.adjoint();
    snapshots.push_back(embed(LocalOperator(lam, inv), big));
  }
  return volume_comparison(snapshots, sizes, m);
}

ApproximateIdentity approximate_identity(const LocalOperator& a, const SpectralData& s,
                                         int n, double beta_prime, double ideal_tol) {
  if (n < 0) throw std::invalid_argument("approximate_identity: cutoff must be >= 0");
  if (!(beta_prime > 0.0) || !(beta_prime < 1.0))
    throw std::invalid_argument("approximate_identity: beta_prime must sit in (0,1)");

  Matrix am = embed(a, s.region).matrix();
  Vector psi0 = s.eigenvectors.col(0);
  double ideal_dev = (am * psi0).norm();
  if (ideal_dev > ideal_tol)
    throw std::invalid_argument("approximate_identity: A does not annihilate psi0");

  Matrix sq = embed(conditional_expectation(a.adjoint() * a, n), s.region).matrix();
  Eigen::VectorXd ev;
  Matrix v;
  hermitian_eig(sq, ev, &v);
  long dim = ev.size();
  double scale = std::max(1.0, std::abs(ev(dim - 1)));
  if (ev(0) < -1e-12 * scale)
    throw std::runtime_error("approximate_identity: E_n(A*A) lost positivity");

  // g(h lambda) with g(x) = x/(1+x) is the logistic of n^{beta'} + ln lambda
  double log_h = std::pow(static_cast<double>(n), beta_prime);
  Vector mu(dim);
  for (long i = 0; i < dim; ++i)
    mu(i) = ev(i) > 0.0 ? logistic(log_h + std::log(ev(i))) : 0.0;
  Matrix u = v * mu.asDiagonal() * v.adjoint();

  ApproximateIdentity out{LocalOperator(s.region, u)};
  long d = u.rows();
  out.a_one_minus_u = spectral_norm(am * (Matrix::Identity(d, d) - u));
  out.phi_u = std::real(psi0.dot(u * psi0));
  out.u_psi_norm = (u * psi0).norm();
  return out;
}

}  // namespace sflow
