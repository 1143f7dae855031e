#include "sflow/flow.hpp"

#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace sflow {

namespace {

std::vector<double> default_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 10; ++i) g.push_back(0.1 * i);
  return g;
}

std::set<std::pair<int, int>> term_keys(const Interaction& a, const Interaction& b) {
  std::set<std::pair<int, int>> keys;
  for (auto& [k, t] : a.terms()) keys.insert(k);
  for (auto& [k, t] : b.terms()) keys.insert(k);
  return keys;
}

LocalOperator term_or_zero(const Interaction& p, std::pair<int, int> key) {
  auto it = p.terms().find(key);
  if (it != p.terms().end()) return it->second;
  return LocalOperator::zero(Region(key.first, key.second));
}

Matrix rotate_in(const LocalOperator& a, const SpectralData& s) {
  return s.eigenvectors.adjoint() * embed(a, s.region).matrix() * s.eigenvectors;
}

// D in the computational basis together with its norm (read off the
// eigenbasis form, where D is Hermitian with kernel-weighted entries)
struct GeneratorSample {
  Matrix d;
  double norm = 0.0;
};

GeneratorSample generator_sample(const SpectralData& sd, const LocalOperator& dh,
                                 const FilterFunction& f) {
  Matrix g = rotate_in(dh, sd);
  long n = sd.dim();
  for (long m = 0; m < n; ++m)
    for (long l = 0; l < n; ++l)
      g(m, l) *= f.flow_kernel_fast(sd.eigenvalues[m] - sd.eigenvalues[l]);
  GeneratorSample out;
  Eigen::VectorXd ev;
  hermitian_eig(g, ev, nullptr);
  out.norm = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
  out.d = sd.eigenvectors * g * sd.eigenvectors.adjoint();
  return out;
}

Matrix polar_factor(const Matrix& u) {
  Matrix gram = u.adjoint() * u;
  Eigen::VectorXd ev;
  Matrix v;
  hermitian_eig(gram, ev, &v);
  Vector inv_sqrt(ev.size());
  for (long i = 0; i < ev.size(); ++i)
    inv_sqrt(i) = 1.0 / std::sqrt(std::max(ev(i), 1e-300));
  return u * (v * inv_sqrt.asDiagonal() * v.adjoint());
}

}  // namespace

InteractionPath::InteractionPath(std::function<Interaction(double)> phi,
                                 std::function<Interaction(double)> phi_dot,
                                 std::vector<double> smoothness_grid)
    : phi_(std::move(phi)), dot_(std::move(phi_dot)), grid_(std::move(smoothness_grid)) {
  if (grid_.empty()) grid_ = default_grid();
  for (double s : grid_)
    if (s < 0.0 || s > 1.0)
      throw std::invalid_argument("InteractionPath: smoothness grid leaves [0,1]");
  range_ = phi_(grid_.front()).range();
}

Interaction InteractionPath::at(double s) const {
  if (s < 0.0 || s > 1.0) throw std::invalid_argument("InteractionPath: s outside [0,1]");
  return phi_(s);
}

Interaction InteractionPath::dot(double s) const {
  if (s < 0.0 || s > 1.0) throw std::invalid_argument("InteractionPath: s outside [0,1]");
  return dot_(s);
}

double InteractionPath::strength_bound() const {
  double bound = 0.0;
  for (double s : grid_) {
    Interaction ph = phi_(s), pd = dot_(s);
    for (auto& key : term_keys(ph, pd)) {
      double sites = key.second - key.first + 1;
      double v = operator_norm(term_or_zero(ph, key)) +
                 sites * operator_norm(term_or_zero(pd, key));
      bound = std::max(bound, v);
    }
  }
  return bound;
}

double InteractionPath::derivative_consistency(double eps) const {
  if (eps <= 0.0) throw std::invalid_argument("derivative_consistency: eps must be > 0");
  double worst = 0.0;
  for (double s : grid_) {
    if (s + eps > 1.0) continue;
    Interaction lo = phi_(s), hi = phi_(s + eps), pd = dot_(s);
    for (auto& key : term_keys(lo, pd)) {
      LocalOperator fd = (1.0 / eps) * (term_or_zero(hi, key) - term_or_zero(lo, key));
      worst = std::max(worst, operator_norm(fd - term_or_zero(pd, key)));
    }
  }
  return worst;
}

InteractionPath linear_path(const Interaction& start, const Interaction& end) {
  int range = std::max(start.range(), end.range());
  auto blend = [range](const Interaction& a, const Interaction& b, double wa, double wb) {
    Interaction out(range);
    for (auto& key : term_keys(a, b))
      out.add_term(Cplx(wa) * term_or_zero(a, key) + Cplx(wb) * term_or_zero(b, key));
    return out;
  };
  auto phi = [=](double s) { return blend(start, end, 1.0 - s, s); };
  auto dot = [=](double) { return blend(start, end, -1.0, 1.0); };
  return InteractionPath(phi, dot);
}

InteractionPath build_tfi_path(const Region& chain, double h0, double h1) {
  if ((h0 - 1.0) * (h1 - 1.0) <= 0.0)
    throw std::invalid_argument("build_tfi_path: field path crosses the critical point");
  auto phi = [chain, h0, h1](double s) {
    return Interaction::tfi(chain, 1.0, (1.0 - s) * h0 + s * h1);
  };
  auto dot = [chain, h0, h1](double) { return Interaction::tfi(chain, 0.0, h1 - h0); };
  return InteractionPath(phi, dot);
}

LocalOperator dH_ds(const InteractionPath& p, const Region& chain, double s) {
  return local_hamiltonian(p.dot(s), chain);
}

LocalOperator generator(const InteractionPath& p, const Region& chain, double s,
                        const FilterFunction& f) {
  SpectralData sd = diagonalize(local_hamiltonian(p.at(s), chain));
  GeneratorSample g = generator_sample(sd, dH_ds(p, chain, s), f);
  return LocalOperator(chain, std::move(g.d));
}

void FlowConfig::validate() const {
  if (s_steps < 2) throw std::invalid_argument("FlowConfig: s_steps must be >= 2");
  if (!(gamma > 0.0)) throw std::invalid_argument("FlowConfig: gamma must be > 0");
  if (reunitarize_every < 1)
    throw std::invalid_argument("FlowConfig: reunitarize_every must be >= 1");
  if (gap_threshold < 0.0)
    throw std::invalid_argument("FlowConfig: gap_threshold must be >= 0");
  if (store_every < 0) throw std::invalid_argument("FlowConfig: store_every must be >= 0");
  filter.validate();
}

FlowResult solve_flow(const InteractionPath& p, const FlowConfig& config) {
  config.validate();
  FilterFunction f(config.filter, config.gamma);
  const Region chain = config.chain;
  const double h = 1.0 / config.s_steps;

  auto spectral_at = [&](double s) {
    SpectralData sd = diagonalize(local_hamiltonian(p.at(s), chain));
    if (sd.gap < config.gap_threshold) {
      std::ostringstream msg;
      msg << "solve_flow: gap " << sd.gap << " below threshold " << config.gap_threshold
          << " at s = " << s;
      throw std::runtime_error(msg.str());
    }
    return sd;
  };

  SpectralData sd_lo = spectral_at(0.0);
  const Vector psi0 = sd_lo.eigenvectors.col(0);
  const long n = sd_lo.dim();
  GeneratorSample gen_lo = generator_sample(sd_lo, dH_ds(p, chain, 0.0), f);

  FlowResult res;
  res.s_grid.push_back(0.0);
  res.fidelity.push_back(1.0);
  res.gap_curve.push_back(sd_lo.gap);
  res.generator_norms.push_back(gen_lo.norm);

  Matrix u = Matrix::Identity(n, n);
  const Cplx im(0.0, 1.0);

  for (int j = 0; j < config.s_steps; ++j) {
    double s_lo = j * h, s_mid = s_lo + 0.5 * h, s_hi = s_lo + h;
    SpectralData sd_mid = spectral_at(s_mid);
    GeneratorSample gen_mid = generator_sample(sd_mid, dH_ds(p, chain, s_mid), f);
    SpectralData sd_hi = spectral_at(s_hi);
    GeneratorSample gen_hi = generator_sample(sd_hi, dH_ds(p, chain, s_hi), f);

    Matrix k1 = im * (gen_lo.d * u);
    Matrix k2 = im * (gen_mid.d * (u + 0.5 * h * k1));
    Matrix k3 = im * (gen_mid.d * (u + 0.5 * h * k2));
    Matrix k4 = im * (gen_hi.d * (u + h * k3));
    u += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

    if ((j + 1) % config.reunitarize_every == 0 || j + 1 == config.s_steps) {
      Matrix gram = u.adjoint() * u;
      Eigen::VectorXd ev;
      Matrix v;
      hermitian_eig(gram, ev, &v);
      double drift = 0.0;
      for (long i = 0; i < ev.size(); ++i) drift = std::max(drift, std::abs(ev(i) - 1.0));
      res.unitarity_drift = std::max(res.unitarity_drift, drift);
      Vector inv_sqrt(ev.size());
      for (long i = 0; i < ev.size(); ++i)
        inv_sqrt(i) = 1.0 / std::sqrt(std::max(ev(i), 1e-300));
      u = u * (v * inv_sqrt.asDiagonal() * v.adjoint());
    }

    res.s_grid.push_back(s_hi);
    res.fidelity.push_back(std::abs(sd_hi.eigenvectors.col(0).dot(u * psi0)));
    res.gap_curve.push_back(sd_hi.gap);
    res.generator_norms.push_back(gen_hi.norm);
    if (config.store_every > 0 && (j + 1) % config.store_every == 0) {
      res.unitary_s.push_back(s_hi);
      res.unitaries.push_back(u);
    }

    sd_lo = std::move(sd_hi);
    gen_lo = std::move(gen_hi);
  }

  res.final_unitary = u;
  return res;
}

LocalOperator alpha_apply(const LocalOperator& a, const Matrix& u, const Region& chain) {
  Matrix am = embed(a, chain).matrix();
  if (am.rows() != u.rows())
    throw std::invalid_argument("alpha_apply: dimension mismatch");
  return LocalOperator(chain, u.adjoint() * am * u);
}

double min_gap(const InteractionPath& p, const Region& chain, int samples) {
  if (samples < 2) throw std::invalid_argument("min_gap: samples must be >= 2");
  double g = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    double s = static_cast<double>(i) / (samples - 1);
    g = std::min(g, diagonalize(local_hamiltonian(p.at(s), chain)).gap);
  }
  return g;
}

double v_s_derivative_check(const LocalOperator& a, const InteractionPath& p,
                            const Region& chain, double s, double ds,
                            const FilterFunction& f) {
  if (ds <= 0.0 || s - ds < 0.0 || s + ds > 1.0)
    throw std::invalid_argument("v_s_derivative_check: need [s-ds, s+ds] inside [0,1]");

  SpectralData sc = diagonalize(local_hamiltonian(p.at(s), chain));
  Matrix at = rotate_in(a, sc);
  Matrix gt = rotate_in(dH_ds(p, chain, s), sc);
  long n = sc.dim();
  const auto& e = sc.eigenvalues;

  // V_ml = i sum_k [ K2(dE_ml, E_k - E_m) G_mk A_kl - K2(dE_ml, E_l - E_k) A_mk G_kl ]
  Matrix v = Matrix::Zero(n, n);
  for (long m = 0; m < n; ++m)
    for (long l = 0; l < n; ++l) {
      double de = e[m] - e[l];
      Cplx acc = 0.0;
      for (long k = 0; k < n; ++k)
        acc += f.k2_kernel(de, e[k] - e[m]) * gt(m, k) * at(k, l) -
               f.k2_kernel(de, e[l] - e[k]) * at(m, k) * gt(k, l);
      v(m, l) = Cplx(0.0, 1.0) * acc;
    }
  Matrix v_comp = sc.eigenvectors * v * sc.eigenvectors.adjoint();

  LocalOperator aw = embed(a, chain);
  SpectralData sp = diagonalize(local_hamiltonian(p.at(s + ds), chain));
  SpectralData sm = diagonalize(local_hamiltonian(p.at(s - ds), chain));
  Matrix fd = (filtered_average(aw, sp, f).matrix() -
               filtered_average(aw, sm, f).matrix()) /
              (2.0 * ds);

  double na = spectral_norm(aw.matrix());
  return na > 0.0 ? spectral_norm(fd - v_comp) / na : 0.0;
}

}  // namespace sflow
