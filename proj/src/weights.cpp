#include "sflow/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace sflow {

void WeightFunction::validate() const {
  double prev = 1.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < prev)) throw std::invalid_argument("WeightFunction: need 0 < b5 < ... < b1 < 1");
    prev = b;
  }
  if (!(nu >= 1.0)) throw std::invalid_argument("WeightFunction: nu must be >= 1");
}

double WeightFunction::operator()(double t) const {
  if (!(t > 0.0)) throw std::invalid_argument("WeightFunction: t must be positive");
  switch (kind) {
    case WeightKind::f:
      return std::exp(-std::pow(t, betas[0])) / t;
    case WeightKind::f0:
      return std::exp(-std::pow(t, betas[0]));
    case WeightKind::f1:
      return std::exp(-std::pow(t, betas[1]));
    case WeightKind::f2:
      return std::pow(t, -2.0 * (nu + 2.0)) * std::exp(-std::pow(t, betas[2]));
    case WeightKind::g:
      return std::exp(-std::pow(t, betas[3]));
    case WeightKind::zeta:
      return std::exp(-std::pow(t, betas[4]));
  }
  throw std::logic_error("WeightFunction: unknown kind");
}

NormReport f_norm(const LocalOperator& a, const WeightFunction& f, int n_max) {
  if (n_max < 1) throw std::invalid_argument("f_norm: n_max must be >= 1");
  f.validate();
  NormReport rep;
  rep.plain_norm = operator_norm(a);
  rep.n_max = n_max;
  for (int n = 1; n <= n_max; ++n) {
    double dev = operator_norm(a - conditional_expectation(a, n));
    rep.sup_ratio = std::max(rep.sup_ratio, dev / f(static_cast<double>(n)));
    if (Region::ball(n).contains(a.support())) break;  // later deviations vanish
  }
  rep.f_norm = rep.plain_norm + rep.sup_ratio;
  return rep;
}

}  // namespace sflow
