#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "sflow/flow.hpp"
#include "sflow/quad.hpp"
#include "sflow/rng.hpp"
#include "support/random_ops.hpp"

using namespace sflow;
using testsupport::random_hermitian;

namespace {

const Region kChain4{0, 3};
const Region kChain6{0, 5};

double gamma_for(const InteractionPath& p, const Region& chain, double fraction) {
  return fraction * min_gap(p, chain, 21);
}

// Independent kernel oracle: the double time integral
//   K(dE) = int dt omega_gamma(t) e^{i dE t} int_0^t du ...
// collapses, after folding t < 0 by symmetry and taking the inner u-integral
// in closed form, to
//   K(dE) = (2i / dE) int_0^inf omega1(x) (1 - cos(x dE / gamma)) dx.
// The outer integral here runs over a fresh 6-point Gauss-Legendre grid with
// omega1 evaluated directly, sharing nothing with the tabulated kernel path.
struct KernelOracle {
  std::vector<double> x, w;  // nodes and omega1(x) * weight
  double gamma = 1.0;

  KernelOracle(const FilterFunction& f, double kappa_max) : gamma(f.gamma()) {
    quad::GaussRule rule = quad::gauss_rule(6);
    double width = std::min(0.5, 1.8 / kappa_max);
    double t_max = 150.0;
    int panels = static_cast<int>(std::ceil(t_max / width));
    for (int p = 0; p < panels; ++p) {
      double lo = p * width, hi = std::min(t_max, lo + width);
      double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
      for (size_t j = 0; j < rule.x.size(); ++j) {
        double t = mid + half * rule.x[j];
        x.push_back(t);
        w.push_back(half * rule.w[j] * f.omega1(t));
      }
    }
  }

  std::complex<double> operator()(double de) const {
    if (de == 0.0) return 0.0;
    double kappa = de / gamma;
    double acc = 0.0;
    for (size_t j = 0; j < x.size(); ++j) acc += w[j] * (1.0 - std::cos(x[j] * kappa));
    return std::complex<double>(0.0, 2.0 * acc / de);
  }
};

}  // namespace

TEST_CASE("config validation") {
  FlowConfig cfg;
  cfg.gamma = 0.5;
  cfg.chain = kChain4;
  CHECK_NOTHROW(cfg.validate());

  FlowConfig bad = cfg;
  bad.s_steps = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = cfg;
  bad.reunitarize_every = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("transverse-field path: terms, derivative, bounds") {
  CHECK_THROWS_AS(build_tfi_path(kChain4, 3.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(build_tfi_path(kChain4, 1.0, 2.0), std::invalid_argument);

  InteractionPath p = build_tfi_path(kChain4, 3.0, 1.5);
  CHECK(p.range() == 2);
  CHECK_THROWS_AS(p.at(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(p.dot(1.1), std::invalid_argument);

  Interaction mid = p.at(0.7);
  LocalOperator bond = pauli_string({{1, Pauli::Z}, {2, Pauli::Z}}, -1.0);
  auto it = mid.terms().find({1, 2});
  REQUIRE(it != mid.terms().end());
  CHECK(operator_norm(it->second - bond) <= 1e-12);

  double h_mid = 0.3 * 3.0 + 0.7 * 1.5;
  auto field = mid.terms().find({2, 2});
  REQUIRE(field != mid.terms().end());
  CHECK(operator_norm(field->second - pauli_string({{2, Pauli::X}}, -h_mid)) <= 1e-12);

  // dH/ds collects the constant field derivative on every site
  LocalOperator expected = pauli_string({{0, Pauli::X}}, 1.5);
  for (int i = 1; i <= 3; ++i)
    expected = expected + pauli_string({{i, Pauli::X}}, 1.5);
  CHECK(operator_norm(dH_ds(p, kChain4, 0.3) - expected) <= 1e-12);

  // strongest grid point is s = 0: |field| + 1 site * |field rate|
  CHECK(p.strength_bound() == doctest::Approx(4.5).epsilon(1e-12));

  // the declared derivative is exact for a linear field
  CHECK(p.derivative_consistency(1e-3) <= 1e-10);

  CHECK(min_gap(p, kChain4, 21) > 0.5);
}

TEST_CASE("derivative consistency trend on a curved path") {
  Region chain = kChain4;
  auto phi = [chain](double s) {
    return Interaction::tfi(chain, 1.0, 2.0 + 0.5 * std::sin(s));
  };
  auto dot = [chain](double s) {
    return Interaction::tfi(chain, 0.0, 0.5 * std::cos(s));
  };
  InteractionPath p(phi, dot);
  double coarse = p.derivative_consistency(1e-2);
  double fine = p.derivative_consistency(1e-3);
  CHECK(fine > 0.0);
  CHECK(coarse / fine >= 5.0);  // first-order difference: ratio near 10
}

TEST_CASE("linear path blends term-wise") {
  Interaction a = Interaction::tfi(kChain4, 1.0, 3.0);
  Interaction b = Interaction::tfi(kChain4, 1.0, 1.5);
  InteractionPath p = linear_path(a, b);
  LocalOperator h_mid = local_hamiltonian(p.at(0.5), kChain4);
  LocalOperator h_ref = local_hamiltonian(Interaction::tfi(kChain4, 1.0, 2.25), kChain4);
  CHECK(operator_norm(h_mid - h_ref) <= 1e-12);
  CHECK(p.derivative_consistency(1e-3) <= 1e-10);
}

TEST_CASE("generator: self-adjoint, kernel against the double time integral") {
  InteractionPath p = build_tfi_path(kChain4, 3.0, 1.5);
  double g = gamma_for(p, kChain4, 0.45);
  FilterFunction f(FilterParams{}, g);

  SpectralData sd = diagonalize(local_hamiltonian(p.at(0.4), kChain4));
  Matrix d_lib = generator(p, kChain4, 0.4, f).matrix();
  CHECK(spectral_norm(Matrix(d_lib - d_lib.adjoint())) <= 1e-9 * spectral_norm(d_lib));

  Matrix gt = sd.eigenvectors.adjoint() *
              embed(dH_ds(p, kChain4, 0.4), kChain4).matrix() * sd.eigenvectors;
  double kappa_max = 2.0 * sd.norm / g;
  KernelOracle oracle(f, kappa_max);
  long n = sd.dim();
  Matrix d_orc(n, n);
  for (long m = 0; m < n; ++m)
    for (long l = 0; l < n; ++l)
      d_orc(m, l) = oracle(sd.eigenvalues[m] - sd.eigenvalues[l]) * gt(m, l);
  d_orc = sd.eigenvectors * d_orc * sd.eigenvectors.adjoint();

  double rel = spectral_norm(Matrix(d_lib - d_orc)) / spectral_norm(d_lib);
  MESSAGE("generator vs double time integral, relative: ", rel);
  CHECK(rel <= 1e-6);
}

TEST_CASE("generator vanishes when dH/ds commutes with H") {
  Region chain{0, 2};
  std::mt19937_64 rng(501);
  LocalOperator m = random_hermitian(chain, rng);
  auto phi = [=](double s) {
    Interaction p(3);
    p.add_term(Cplx(1.0 + s) * m);
    return p;
  };
  auto dot = [=](double) {
    Interaction p(3);
    p.add_term(m);
    return p;
  };
  InteractionPath path(phi, dot);
  double g = gamma_for(path, chain, 0.45);
  FilterFunction f(FilterParams{}, g);
  double dn = spectral_norm(generator(path, chain, 0.0, f).matrix());
  CHECK(dn <= 1e-10 * operator_norm(m));
}

TEST_CASE("constant path: zero generator, identity flow") {
  Interaction fixed = Interaction::tfi(kChain4, 1.0, 2.0);
  InteractionPath p = linear_path(fixed, fixed);

  FlowConfig cfg;
  cfg.chain = kChain4;
  cfg.s_steps = 20;
  cfg.gamma = 0.45 * diagonalize(local_hamiltonian(fixed, kChain4)).gap;
  FilterFunction f(cfg.filter, cfg.gamma);
  CHECK(spectral_norm(generator(p, kChain4, 0.3, f).matrix()) <= 1e-14);

  FlowResult res = solve_flow(p, cfg);
  REQUIRE(res.s_grid.size() == 21);
  CHECK(res.s_grid.front() == 0.0);
  CHECK(res.s_grid.back() == doctest::Approx(1.0).epsilon(1e-12));
  long n = res.final_unitary.rows();
  CHECK(spectral_norm(Matrix(res.final_unitary - Matrix::Identity(n, n))) <= 1e-12);
  CHECK(res.unitarity_drift <= 1e-12);
  for (double fid : res.fidelity) CHECK(fid == doctest::Approx(1.0).epsilon(1e-12));
  for (double dn : res.generator_norms) CHECK(dn <= 1e-14);
}

TEST_CASE("flow transports the ground state across the phase") {
  InteractionPath p = build_tfi_path(kChain6, 3.0, 1.5);
  FlowConfig cfg;
  cfg.chain = kChain6;
  cfg.s_steps = 100;
  cfg.gamma = gamma_for(p, kChain6, 0.45);

  FlowResult res = solve_flow(p, cfg);
  double min_fid = 1.0;
  for (double fid : res.fidelity) {
    CHECK(fid <= 1.0 + 1e-9);
    min_fid = std::min(min_fid, fid);
  }
  MESSAGE("six-site flow: min fidelity ", min_fid, ", drift ", res.unitarity_drift);
  CHECK(min_fid >= 0.99);
  CHECK(res.unitarity_drift <= 1e-8);
  for (double g : res.gap_curve) CHECK(g > 0.5);

  // a filter too wide for the gap lets excited weight through
  FlowConfig wide = cfg;
  wide.gamma = gamma_for(p, kChain6, 4.0);
  FlowResult res_wide = solve_flow(p, wide);
  double min_fid_wide = 1.0;
  for (double fid : res_wide.fidelity) min_fid_wide = std::min(min_fid_wide, fid);
  MESSAGE("wide-filter control: min fidelity ", min_fid_wide);
  CHECK(1.0 - min_fid_wide >= 100.0 * (1.0 - min_fid));
}

TEST_CASE("step halving: fourth-order convergence to a fine reference") {
  InteractionPath p = build_tfi_path(kChain4, 3.0, 1.5);
  FlowConfig cfg;
  cfg.chain = kChain4;
  cfg.gamma = gamma_for(p, kChain4, 0.45);
  cfg.reunitarize_every = 1 << 20;  // endpoint only, same projection everywhere

  cfg.s_steps = 400;
  Matrix ref = solve_flow(p, cfg).final_unitary;
  auto err = [&](int steps) {
    FlowConfig c = cfg;
    c.s_steps = steps;
    return spectral_norm(Matrix(solve_flow(p, c).final_unitary - ref));
  };
  double e25 = err(25), e50 = err(50), e100 = err(100);
  MESSAGE("step errors: ", e25, " ", e50, " ", e100);
  CHECK(e100 > 1e-13);  // above the noise floor, the ratios mean something
  CHECK(e25 / e50 >= 8.0);
  CHECK(e50 / e100 >= 8.0);
}

TEST_CASE("gap guard aborts and names the offending point") {
  InteractionPath p = build_tfi_path(kChain4, 3.0, 1.5);
  FlowConfig cfg;
  cfg.chain = kChain4;
  cfg.gamma = 0.5;
  cfg.gap_threshold = 10.0;  // nothing on this chain clears it
  try {
    solve_flow(p, cfg);
    FAIL("expected the gap guard to fire");
  } catch (const std::runtime_error& e) {
    std::string msg = e.what();
    CHECK(msg.find("below threshold") != std::string::npos);
    CHECK(msg.find("s = ") != std::string::npos);
  }
}

TEST_CASE("transported observables track the instantaneous ground state") {
  InteractionPath p = build_tfi_path(kChain4, 3.0, 1.5);
  FlowConfig cfg;
  cfg.chain = kChain4;
  cfg.s_steps = 100;
  cfg.store_every = 25;
  cfg.gamma = gamma_for(p, kChain4, 0.45);
  FlowResult res = solve_flow(p, cfg);
  REQUIRE(res.unitaries.size() == 4);

  std::mt19937_64 rng(502);
  LocalOperator a = random_hermitian(Region(1, 2), rng);
  double na = operator_norm(a);

  long n = res.final_unitary.rows();
  LocalOperator same = alpha_apply(a, Matrix::Identity(n, n), kChain4);
  CHECK(operator_norm(same - embed(a, kChain4)) <= 1e-14);

  Vector psi0 = ground_state(diagonalize(local_hamiltonian(p.at(0.0), kChain4))).vector;
  for (size_t k = 0; k < res.unitaries.size(); ++k) {
    double s = res.unitary_s[k];
    LocalOperator moved = alpha_apply(a, res.unitaries[k], kChain4);
    CHECK(operator_norm(moved) == doctest::Approx(na).epsilon(1e-9));

    SpectralData sd = diagonalize(local_hamiltonian(p.at(s), kChain4));
    Vector psi_s = ground_state(sd).vector;
    Cplx before = psi0.dot(moved.matrix() * psi0);
    Cplx after = psi_s.dot(embed(a, kChain4).matrix() * psi_s);
    int idx = static_cast<int>(std::lround(s * cfg.s_steps));
    double slack = 2.0 * na * std::sqrt(std::max(0.0, 2.0 * (1.0 - res.fidelity[idx])));
    CHECK(std::abs(before - after) <= slack + 1e-9);
  }
}

TEST_CASE("kernel form of the s-derivative of the filtered average") {
  Interaction fixed = Interaction::tfi(kChain4, 1.0, 2.0);
  InteractionPath still = linear_path(fixed, fixed);
  FilterFunction f_still(FilterParams{},
                         0.45 * diagonalize(local_hamiltonian(fixed, kChain4)).gap);
  std::mt19937_64 rng(503);
  LocalOperator a = random_hermitian(Region(1, 2), rng);
  CHECK(v_s_derivative_check(a, still, kChain4, 0.5, 1e-3, f_still) <= 1e-9);

  InteractionPath p = build_tfi_path(kChain4, 3.0, 1.5);
  FilterFunction f(FilterParams{}, gamma_for(p, kChain4, 0.45));
  double r1 = v_s_derivative_check(a, p, kChain4, 0.5, 1e-3, f);
  double r2 = v_s_derivative_check(a, p, kChain4, 0.5, 2e-3, f);
  MESSAGE("derivative residuals: ds=1e-3 -> ", r1, ", ds=2e-3 -> ", r2);
  CHECK(r1 <= 1e-4);
  CHECK(r1 > 1e-12);
  CHECK(r2 / r1 >= 3.0);  // central difference: ratio near 4
}
