#pragma once
#include <vector>
#include <functional>

namespace sflow::quad {

// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> x;
  std::vector<double> w;
};

const GaussRule& gauss_rule(int n);

// Composite Gauss-Legendre over [a, b] with panels of the given width.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double panel_width, int nodes_per_panel);

}  // namespace sflow::quad
