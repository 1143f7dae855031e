#pragma once
#include <array>

#include "sflow/operators.hpp"

namespace sflow {

// The six-member family of decreasing weight functions used by the
// quasi-local norms, distinguished by which stretching exponent they carry:
//   f  (t) = t^{-1} exp(-t^{b1})        f0 (t) = exp(-t^{b1})
//   f1 (t) = exp(-t^{b2})               f2 (t) = t^{-2(nu+2)} exp(-t^{b3})
//   g  (t) = exp(-t^{b4})               zeta(t) = exp(-t^{b5})
// with 0 < b5 < b4 < b3 < b2 < b1 < 1.
enum class WeightKind { f, f0, f1, f2, g, zeta };

struct WeightFunction {
  WeightKind kind = WeightKind::f;
  std::array<double, 5> betas{0.9, 0.8, 0.7, 0.6, 0.5};
  double nu = 1.0;  // spatial dimension entering the f2 prefactor

  void validate() const;             // throws on a broken exponent chain
  double operator()(double t) const;  // t > 0 required
};

struct NormReport {
  double plain_norm = 0.0;  // operator norm
  double sup_ratio = 0.0;   // max_N |A - E_N(A)| / f(N)
  double f_norm = 0.0;      // their sum
  int n_max = 0;            // largest N probed
};

// |A|_f = |A| + max_{1 <= N <= n_max} |A - E_N(A)| / f(N).  On a finite
// chain the deviations vanish once the ball covers the support, so the
// maximum is attained.
NormReport f_norm(const LocalOperator& a, const WeightFunction& f, int n_max);

}  // namespace sflow
