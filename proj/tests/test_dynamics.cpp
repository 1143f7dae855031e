#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "sflow/filter.hpp"
#include "sflow/interaction.hpp"
#include "sflow/operators.hpp"
#include "sflow/spectral.hpp"
#include "support/random_ops.hpp"

using namespace sflow;
using testsupport::random_hermitian;
using testsupport::random_local;

namespace {

LocalOperator tfi_hamiltonian(const Region& chain, double h) {
  return local_hamiltonian(Interaction::tfi(chain, 1.0, h), chain);
}

FilterFunction make_filter(double gamma) { return FilterFunction(FilterParams{}, gamma); }

double rel_diff(const LocalOperator& a, const LocalOperator& b) {
  double na = operator_norm(a);
  return operator_norm(a - b) / (na > 0 ? na : 1.0);
}

}  // namespace

TEST_CASE("diagonalize resolves a two-level operator") {
  Matrix m = Matrix::Zero(2, 2);
  m(1, 1) = 3.0;
  SpectralData s = diagonalize(LocalOperator(Region(0, 0), m));
  CHECK(s.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(s.eigenvalues[1] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(s.gap == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(s.ground_index == 0);
  CHECK(s.ground_multiplicity == 1);
}

TEST_CASE("two-site transverse-field chain matches the closed-form spectrum") {
  // -Z0 Z1 - X0 - X1 diagonalizes to {-sqrt 5, -1, 1, sqrt 5}
  SpectralData s = diagonalize(tfi_hamiltonian(Region(0, 1), 1.0));
  const double r5 = std::sqrt(5.0);
  REQUIRE(s.eigenvalues.size() == 4);
  CHECK(std::abs(s.eigenvalues[0] + r5) < 1e-12);
  CHECK(std::abs(s.eigenvalues[1] + 1.0) < 1e-12);
  CHECK(std::abs(s.eigenvalues[2] - 1.0) < 1e-12);
  CHECK(std::abs(s.eigenvalues[3] - r5) < 1e-12);
  CHECK(std::abs(s.gap - (r5 - 1.0)) < 1e-12);
}

TEST_CASE("eigendecomposition reconstructs random operators") {
  std::mt19937_64 rng(401);
  for (int rep = 0; rep < 5; ++rep) {
    LocalOperator h = random_hermitian(Region(-1, 1), rng);
    SpectralData s = diagonalize(h);
    double scale = spectral_norm(h.matrix());

    Eigen::VectorXd ev = Eigen::Map<const Eigen::VectorXd>(s.eigenvalues.data(), s.dim());
    Matrix rebuilt = s.eigenvectors * ev.cast<Cplx>().asDiagonal() * s.eigenvectors.adjoint();
    CHECK(spectral_norm(rebuilt - h.matrix()) <= 1e-10 * scale);
    Matrix gram = s.eigenvectors.adjoint() * s.eigenvectors;
    CHECK(spectral_norm(gram - Matrix::Identity(s.dim(), s.dim())) <= 1e-10);
    for (long i = 1; i < s.dim(); ++i) CHECK(s.eigenvalues[i] >= s.eigenvalues[i - 1]);
  }

  LocalOperator skew = random_local(Region(0, 1), rng);
  skew.matrix()(0, 1) += Cplx(0.5, 0.5);  // ensure a visible asymmetry
  CHECK_THROWS_AS(diagonalize(skew), std::invalid_argument);
}

TEST_CASE("ground vector is a unit eigenvector") {
  LocalOperator h = tfi_hamiltonian(Region(0, 3), 2.0);
  SpectralData s = diagonalize(h);
  GroundState g = ground_state(s);
  CHECK(std::abs(g.vector.norm() - 1.0) <= 1e-12);
  double scale = spectral_norm(h.matrix());
  CHECK((h.matrix() * g.vector - g.energy * g.vector).norm() <= 1e-9 * scale);
  CHECK(g.energy == doctest::Approx(s.eigenvalues[0]));
}

TEST_CASE("heisenberg evolution is an isometric automorphism group") {
  std::mt19937_64 rng(402);
  Region chain(0, 3);
  LocalOperator h = tfi_hamiltonian(chain, 1.3);
  SpectralData s = diagonalize(h);

  LocalOperator a = random_local(Region(0, 1), rng);
  LocalOperator b = random_local(Region(2, 3), rng);

  CHECK(rel_diff(heisenberg(a, 0.0, s), embed(a, chain)) <= 1e-12);
  CHECK(rel_diff(heisenberg(h, 0.7, s), h) <= 1e-12);  // [H, H] = 0

  double t = 0.9, u = -0.4;
  LocalOperator at = heisenberg(a, t, s);
  CHECK(std::abs(operator_norm(at) - operator_norm(a)) <= 1e-9 * operator_norm(a));
  CHECK(rel_diff(heisenberg(a, t + u, s), heisenberg(at, u, s)) <= 1e-9);
  CHECK(rel_diff(heisenberg(a * b, t, s), heisenberg(a, t, s) * heisenberg(b, t, s)) <= 1e-9);
  CHECK(rel_diff(heisenberg(a.adjoint(), t, s), heisenberg(a, t, s).adjoint()) <= 1e-9);

  LocalOperator wide = LocalOperator::identity(Region(-2, 5));
  CHECK_THROWS_AS(heisenberg(wide, 1.0, s), std::invalid_argument);
}

TEST_CASE("filtered average: identity, support kill, and path agreement") {
  std::mt19937_64 rng(403);
  Region chain(0, 3);
  SpectralData s = diagonalize(tfi_hamiltonian(chain, 2.0));
  FilterFunction f = make_filter(0.45 * s.gap);

  // integral normalization carries straight through to the identity
  LocalOperator id = LocalOperator::identity(chain);
  CHECK(operator_norm(filtered_average(id, s, f) - id) <= 1e-9);

  // a transition sitting at 3 gamma is outside the transform's support
  {
    double gamma = 0.7;
    FilterFunction f2 = make_filter(gamma);
    Matrix hm = Matrix::Zero(2, 2);
    hm(1, 1) = 3.0 * gamma;
    SpectralData two = diagonalize(LocalOperator(Region(0, 0), hm));
    Matrix am = Matrix::Zero(2, 2);
    am(0, 1) = 1.0;
    am(1, 0) = 1.0;
    LocalOperator filtered = filtered_average(LocalOperator(Region(0, 0), am), two, f2);
    CHECK(operator_norm(filtered) <= 1e-9);
  }

  // spectral weights against the direct time quadrature, entrywise and on
  // random observables
  Eigen::MatrixXd ws = filter_weights(s, f, FilterPath::spectral);
  Eigen::MatrixXd wt = filter_weights(s, f, FilterPath::time_quadrature);
  CHECK((ws - wt).cwiseAbs().maxCoeff() <= 1e-9);

  for (int rep = 0; rep < 20; ++rep) {
    int lo = uniform_int(rng, 3);
    LocalOperator a = random_local(Region(lo, lo + 1), rng);
    LocalOperator is = filtered_average(a, s, f, FilterPath::spectral);
    LocalOperator it = filtered_average(a, s, f, FilterPath::time_quadrature);
    CHECK(rel_diff(is, it) <= 1e-6);
    CHECK(rel_diff(filtered_average(a.adjoint(), s, f), is.adjoint()) <= 1e-9);
  }
}

TEST_CASE("filtered ground action collapses to the ground expectation") {
  std::mt19937_64 rng(404);

  // two-level closed form: the only surviving term is the transition weight
  {
    double gamma = 0.7;
    FilterFunction f = make_filter(gamma);
    Matrix hm = Matrix::Zero(2, 2);
    hm(1, 1) = 3.0 * gamma;
    SpectralData two = diagonalize(LocalOperator(Region(0, 0), hm));
    LocalOperator a = random_local(Region(0, 0), rng);

    ResidualReport r = ground_action_residual(a, two, f);
    CHECK(r.gap_ok);
    CHECK(r.value <= 1e-9);

    double mass = f.fourier_omega(0.0).real();
    double leak = f.fourier_omega(3.0 * gamma).real();
    Cplx a00 = a.matrix()(0, 0), a10 = a.matrix()(1, 0);
    double expected = std::hypot(std::abs((mass - 1.0) * a00), std::abs(leak * a10)) /
                      spectral_norm(a.matrix());
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-10));
  }

  Region chain(0, 5);
  SpectralData s = diagonalize(tfi_hamiltonian(chain, 2.0));
  FilterFunction f = make_filter(0.45 * s.gap);
  LocalOperator id = LocalOperator::identity(chain);
  CHECK(ground_action_residual(id, s, f).value <= 2e-9);

  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    int lo = uniform_int(rng, 4);
    LocalOperator a = random_local(Region(lo, lo + 1), rng);
    ResidualReport r = ground_action_residual(a, s, f);
    CHECK(r.gap_ok);
    CHECK(r.value <= 1e-3);
    worst = std::max(worst, r.value);
  }

  // negative control: a filter wider than the gap lets transitions through
  FilterFunction wide = make_filter(1.5 * s.gap);
  FilterFunction wider = make_filter(8.0 * s.gap);
  double degraded = 0.0, swamped = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    int lo = uniform_int(rng, 4);
    LocalOperator a = random_local(Region(lo, lo + 1), rng);
    ResidualReport rw = ground_action_residual(a, s, wide);
    CHECK_FALSE(rw.gap_ok);
    degraded = std::max(degraded, rw.value);
    swamped = std::max(swamped, ground_action_residual(a, s, wider).value);
  }
  CHECK(degraded > 1e3 * worst);
  CHECK(swamped >= 1e-1);
  MESSAGE("residuals: in-gap ", worst, ", g = 1.5 gap ", degraded, ", g = 8 gap ", swamped);
}

TEST_CASE("expectation decoupling across the filter") {
  std::mt19937_64 rng(405);
  Region chain(0, 5);
  SpectralData s = diagonalize(tfi_hamiltonian(chain, 2.0));
  FilterFunction f = make_filter(0.45 * s.gap);

  LocalOperator id = LocalOperator::identity(chain);
  LocalOperator b0 = random_local(Region(4, 5), rng);
  CHECK(decoupling_residual(id, b0, s, f).value <= 2e-9);

  // with B = identity this reduces to the ground-action residual
  LocalOperator a0 = random_local(Region(0, 1), rng);
  CHECK(decoupling_residual(a0, id, s, f).value <=
        ground_action_residual(a0, s, f).value + 1e-15);

  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    int lo = uniform_int(rng, 2);
    LocalOperator a = random_local(Region(lo, lo + 1), rng);
    LocalOperator b = random_local(Region(3, 4), rng);
    ResidualReport r = decoupling_residual(a, b, s, f);
    CHECK(r.gap_ok);
    CHECK(r.value <= 1e-3);
    worst = std::max(worst, r.value);
  }

  FilterFunction wide = make_filter(8.0 * s.gap);
  double swamped = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    LocalOperator a = random_local(Region(0, 1), rng);
    LocalOperator b = random_local(Region(3, 4), rng);
    swamped = std::max(swamped, decoupling_residual(a, b, s, wide).value);
  }
  CHECK(swamped > 1e3 * worst);
  MESSAGE("decoupling residuals: in-gap ", worst, ", g = 8 gap ", swamped);
}

TEST_CASE("duhamel identity closes under quadrature refinement") {
  std::mt19937_64 rng(406);
  Region chain(0, 1);
  LocalOperator h = tfi_hamiltonian(chain, 1.0);
  SpectralData s = diagonalize(h);
  LocalOperator a = random_local(chain, rng);

  CHECK(duhamel_residual(a, s, 0.0, 4) <= 1e-15);
  CHECK(duhamel_residual(h, s, 1.0, 2) <= 1e-13);
  CHECK(duhamel_residual(LocalOperator::identity(chain), s, 1.0, 2) <= 1e-13);
  CHECK_THROWS_AS(duhamel_residual(a, s, 1.0, 1), std::invalid_argument);

  double r8 = duhamel_residual(a, s, 1.0, 8);
  double r16 = duhamel_residual(a, s, 1.0, 16);
  double r32 = duhamel_residual(a, s, 1.0, 32);
  CHECK(r16 > 1e-14);  // above the noise floor, so the ratios are meaningful
  CHECK(r8 / r16 >= 4.0);
  CHECK(r16 / r32 >= 4.0);
}

TEST_CASE("commutator spread respects a light cone") {
  Region chain(0, 7);
  SpectralData s = diagonalize(tfi_hamiltonian(chain, 2.0));

  LocalOperator a = pauli_string({{0, Pauli::X}}, 1.0);
  LocalOperator b = pauli_string({{2, Pauli::X}}, 1.0);

  CHECK_THROWS_AS(
      lr_commutator_profile(a, pauli_string({{0, Pauli::Z}}, 1.0), {0.5}, s),
      std::invalid_argument);

  CommutatorProfile prof = lr_commutator_profile(a, b, {0.0, 0.4, 0.8}, s);
  REQUIRE(prof.distances.size() == 6);  // separations 2..7
  CHECK(prof.distances.front() == 2.0);
  CHECK(prof.distances.back() == 7.0);

  for (double v : prof.norms[0]) CHECK(v == 0.0);  // t = 0, disjoint supports
  for (auto& row : prof.norms)
    for (double v : row) CHECK(v <= 2.0 + 1e-9);  // |A| = |B| = 1

  for (size_t i = 1; i < prof.times.size(); ++i)
    for (size_t k = 1; k < prof.distances.size(); ++k)
      CHECK(prof.norms[i][k] <= prof.norms[i][k - 1] * (1.0 + 1e-9));

  CHECK(prof.fit_velocity > 0.0);
  CHECK(prof.envelope_amplitude > 0.0);
  for (size_t i = 0; i < prof.times.size(); ++i)
    for (size_t k = 0; k < prof.distances.size(); ++k)
      CHECK(prof.norms[i][k] <=
            prof.envelope_amplitude *
                    std::exp(prof.fit_velocity * prof.times[i] - prof.distances[k]) +
                1e-12);

  CHECK(lr_reference_weight(0.0, 1) == 1.0);
  CHECK(lr_reference_weight(2.0, 1) == doctest::Approx(std::exp(-2.0) / 9.0));
}

TEST_CASE("light cone on the ten-site chain") {
  Region chain(0, 9);
  SpectralData s = diagonalize(tfi_hamiltonian(chain, 2.0));
  LocalOperator a = pauli_string({{0, Pauli::X}}, 1.0);
  LocalOperator b = pauli_string({{3, Pauli::Z}}, 1.0);

  CommutatorProfile prof = lr_commutator_profile(a, b, {0.5, 1.0}, s);
  REQUIRE(prof.distances.size() == 7);  // separations 3..9
  for (size_t i = 0; i < prof.times.size(); ++i)
    for (size_t k = 1; k < prof.distances.size(); ++k)
      CHECK(prof.norms[i][k] <= prof.norms[i][k - 1] * (1.0 + 1e-9));
  CHECK(prof.fit_velocity > 0.0);
  CHECK(prof.fit_quality > 0.5);
}
