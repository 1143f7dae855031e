#include "sflow/spectral.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "sflow/quad.hpp"

namespace sflow {

namespace {

Matrix to_eigenbasis(const LocalOperator& a, const SpectralData& s) {
  if (!s.region.contains(a.support()))
    throw std::invalid_argument("operator support exceeds the diagonalized region");
  return s.eigenvectors.adjoint() * embed(a, s.region).matrix() * s.eigenvectors;
}

LocalOperator from_eigenbasis(const Matrix& m, const SpectralData& s) {
  return LocalOperator(s.region, s.eigenvectors * m * s.eigenvectors.adjoint());
}

Vector phase_vector(const SpectralData& s, double t) {
  Vector p(s.dim());
  for (long m = 0; m < s.dim(); ++m) p(m) = std::exp(Cplx(0.0, t * s.eigenvalues[m]));
  return p;
}

}  // namespace

SpectralData diagonalize(const LocalOperator& h) {
  const Matrix& m = h.matrix();
  double scale = std::max(m.norm(), 1e-300);
  if ((m - m.adjoint()).norm() > 1e-10 * scale)
    throw std::invalid_argument("diagonalize: operator is not self-adjoint");

  SpectralData s;
  s.region = h.support();
  Matrix sym = 0.5 * (m + m.adjoint());
  Eigen::VectorXd ev;
  hermitian_eig(sym, ev, &s.eigenvectors);
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  s.ground_index = 0;
  s.norm = std::max(std::abs(s.eigenvalues.front()), std::abs(s.eigenvalues.back()));
  s.degeneracy_tol = 1e-8 * s.norm;

  size_t i = 1;
  while (i < s.eigenvalues.size() &&
         s.eigenvalues[i] - s.eigenvalues[i - 1] <= s.degeneracy_tol)
    ++i;
  s.ground_multiplicity = static_cast<int>(i);
  s.gap = i < s.eigenvalues.size() ? s.eigenvalues[i] - s.eigenvalues[0] : 0.0;
  return s;
}

GroundState ground_state(const SpectralData& s) {
  GroundState g;
  g.vector = s.eigenvectors.col(s.ground_index);
  g.energy = s.eigenvalues[s.ground_index];
  return g;
}

LocalOperator heisenberg(const LocalOperator& a, double t, const SpectralData& s) {
  Matrix am = to_eigenbasis(a, s);
  Vector p = phase_vector(s, t);
  am = p.asDiagonal() * am * p.conjugate().asDiagonal();
  return from_eigenbasis(am, s);
}

Eigen::MatrixXd filter_weights(const SpectralData& s, const FilterFunction& f,
                               FilterPath path) {
  long n = s.dim();
  Eigen::MatrixXd w(n, n);
  if (path == FilterPath::spectral) {
    for (long m = 0; m < n; ++m)
      for (long l = 0; l < n; ++l)
        w(m, l) = f.fourier_omega_fast(s.eigenvalues[m] - s.eigenvalues[l]);
    return w;
  }

  // sum_j 2 w_j cos(t_j dE) accumulated as rank-2 updates per node, blocked
  // through BLAS
  auto nodes = f.time_nodes();
  w.setZero();
  Eigen::VectorXd e = Eigen::Map<const Eigen::VectorXd>(s.eigenvalues.data(), n);
  const size_t block = 2048;
  for (size_t j0 = 0; j0 < nodes.size(); j0 += block) {
    size_t j1 = std::min(nodes.size(), j0 + block);
    Eigen::MatrixXd cb(n, static_cast<long>(j1 - j0));
    Eigen::MatrixXd sb(n, static_cast<long>(j1 - j0));
    for (size_t j = j0; j < j1; ++j) {
      double amp = std::sqrt(2.0 * nodes[j].w_omega);
      Eigen::ArrayXd arg = nodes[j].t * e.array();
      cb.col(static_cast<long>(j - j0)) = amp * arg.cos();
      sb.col(static_cast<long>(j - j0)) = amp * arg.sin();
    }
    w.noalias() += cb * cb.transpose();
    w.noalias() += sb * sb.transpose();
  }
  return w;
}

LocalOperator filtered_average(const LocalOperator& a, const SpectralData& s,
                               const FilterFunction& f, FilterPath path) {
  Matrix am = to_eigenbasis(a, s);
  Eigen::MatrixXd w = filter_weights(s, f, path);
  am = am.cwiseProduct(w.cast<Cplx>());
  return from_eigenbasis(am, s);
}

ResidualReport ground_action_residual(const LocalOperator& a, const SpectralData& s,
                                      const FilterFunction& f) {
  Matrix am = to_eigenbasis(a, s);
  long n = s.dim();
  // I(A) psi0 in the eigenbasis is the weighted ground column of A
  Vector col(n);
  for (long m = 0; m < n; ++m) {
    double we = f.fourier_omega(s.eigenvalues[m] - s.eigenvalues[0]).real();
    col(m) = we * am(m, 0);
  }
  col(0) -= am(0, 0);
  ResidualReport r;
  r.gap_ok = s.gap >= f.gamma();
  double na = spectral_norm(am);
  r.value = na > 0.0 ? col.norm() / na : 0.0;
  return r;
}

ResidualReport decoupling_residual(const LocalOperator& a, const LocalOperator& b,
                                   const SpectralData& s, const FilterFunction& f) {
  Matrix am = to_eigenbasis(a, s);
  Matrix bm = to_eigenbasis(b, s);
  long n = s.dim();
  Cplx cross = 0.0;
  for (long m = 0; m < n; ++m) {
    double we = f.fourier_omega(s.eigenvalues[m] - s.eigenvalues[0]).real();
    cross += std::conj(bm(m, 0)) * we * am(m, 0);
  }
  Cplx split = std::conj(bm(0, 0)) * am(0, 0);
  ResidualReport r;
  r.gap_ok = s.gap >= f.gamma();
  double na = spectral_norm(am), nb = spectral_norm(bm);
  r.value = na > 0.0 && nb > 0.0 ? std::abs(cross - split) / (na * nb) : 0.0;
  return r;
}

double duhamel_residual(const LocalOperator& a, const SpectralData& s, double t,
                        int u_nodes) {
  if (u_nodes < 2) throw std::invalid_argument("duhamel_residual: u_nodes must be >= 2");
  Matrix am = to_eigenbasis(a, s);
  long n = s.dim();
  double na = spectral_norm(am);
  if (na == 0.0) return 0.0;

  Vector p = phase_vector(s, t);
  Matrix res = am - Matrix(p.asDiagonal() * am * p.conjugate().asDiagonal());

  // + int_0^t du i[H, tau^u(A)]: entrywise i dE e^{iu dE} A_{ml}
  int panels = std::max(1, u_nodes / 2);
  const quad::GaussRule& rule = quad::gauss_rule(2);
  double width = t / panels;
  for (int pnl = 0; pnl < panels; ++pnl) {
    double u0 = pnl * width;
    for (size_t q = 0; q < rule.x.size(); ++q) {
      double u = u0 + 0.5 * width * (rule.x[q] + 1.0);
      double w = 0.5 * width * rule.w[q];
      for (long m = 0; m < n; ++m)
        for (long l = 0; l < n; ++l) {
          double de = s.eigenvalues[m] - s.eigenvalues[l];
          res(m, l) += w * Cplx(0.0, de) * std::exp(Cplx(0.0, u * de)) * am(m, l);
        }
    }
  }
  return spectral_norm(res) / na;
}

CommutatorProfile lr_commutator_profile(const LocalOperator& a, const LocalOperator& b,
                                        const std::vector<double>& t_grid,
                                        const SpectralData& s) {
  if (a.support().intersects(b.support()))
    throw std::invalid_argument("lr_commutator_profile: supports must be disjoint");
  if (!s.region.contains(a.support()) || !s.region.contains(b.support()))
    throw std::invalid_argument("lr_commutator_profile: supports exceed the region");

  bool rightward = b.support().lo > a.support().hi;
  auto separation = [&](const Region& y) {
    return rightward ? y.lo - a.support().hi : a.support().lo - y.hi;
  };

  CommutatorProfile prof;
  prof.times = t_grid;
  std::vector<Matrix> btil;
  for (int shift = 0;; ++shift) {
    Region target = b.support().shifted(rightward ? shift : -shift);
    if (!s.region.contains(target)) break;
    LocalOperator bk = translate(b, rightward ? shift : -shift);
    prof.distances.push_back(static_cast<double>(separation(target)));
    btil.push_back(to_eigenbasis(bk, s));
  }

  Matrix am = to_eigenbasis(a, s);
  // i[X, Y] of self-adjoint X, Y is self-adjoint, allowing a direct
  // eigenvalue read of the norm
  bool herm = a.is_hermitian(1e-12) && b.is_hermitian(1e-12);
  double floor_norm = 1e-13 * 2.0 * spectral_norm(am) * spectral_norm(btil.empty() ? am : btil[0]);

  prof.norms.resize(t_grid.size());
  for (size_t i = 0; i < t_grid.size(); ++i) {
    prof.norms[i].resize(btil.size());
    if (t_grid[i] == 0.0) {
      // tau^0(A) = A commutes with every translate outright
      for (size_t k = 0; k < btil.size(); ++k) prof.norms[i][k] = 0.0;
      continue;
    }
    Vector p = phase_vector(s, t_grid[i]);
    Matrix tau = p.asDiagonal() * am * p.conjugate().asDiagonal();
    for (size_t k = 0; k < btil.size(); ++k) {
      Matrix c = tau * btil[k] - btil[k] * tau;
      if (herm) {
        Eigen::VectorXd ev;
        Matrix ic = Cplx(0.0, 1.0) * c;
        hermitian_eig(ic, ev, nullptr);
        prof.norms[i][k] = std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
      } else {
        prof.norms[i][k] = spectral_norm(c);
      }
    }
  }

  // Least squares for log v = log C + v t - d, weighted by the values
  // themselves: samples deep below the light cone decay faster than the
  // envelope and would otherwise drag the fit away from the cone edge.
  double sw = 0, st = 0, stt = 0, sy = 0, sty = 0;
  std::vector<std::array<double, 3>> pts;
  for (size_t i = 0; i < t_grid.size(); ++i)
    for (size_t k = 0; k < btil.size(); ++k) {
      double v = prof.norms[i][k];
      if (v <= floor_norm) continue;
      double y = std::log(v) + prof.distances[k];
      pts.push_back({t_grid[i], prof.distances[k], v});
      sw += v; st += v * t_grid[i]; stt += v * t_grid[i] * t_grid[i];
      sy += v * y; sty += v * t_grid[i] * y;
    }
  double det = sw * stt - st * st;
  if (pts.size() >= 2 && std::abs(det) > 1e-12 * std::max(1.0, sw * stt)) {
    double logc = (stt * sy - st * sty) / det;
    prof.fit_velocity = (sw * sty - st * sy) / det;
    prof.fit_amplitude = std::exp(logc);
    double ss_res = 0, ss_tot = 0, mean = sy / sw;
    for (auto& pt : pts) {
      double y = std::log(pt[2]) + pt[1];
      double fit = logc + prof.fit_velocity * pt[0];
      ss_res += pt[2] * (y - fit) * (y - fit);
      ss_tot += pt[2] * (y - mean) * (y - mean);
    }
    prof.fit_quality = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  }
  double env = 0.0;
  for (auto& pt : pts)
    env = std::max(env, pt[2] * std::exp(pt[1] - prof.fit_velocity * pt[0]));
  prof.envelope_amplitude = env;
  return prof;
}

double lr_reference_weight(double r, int nu) {
  return std::pow(1.0 + r, -(nu + 1)) * std::exp(-r);
}

}  // namespace sflow
