#include "sflow/quad.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace sflow::quad {

// Newton iteration on the Legendre polynomial roots, exploiting root symmetry.
static GaussRule make_rule(int n) {
  if (n < 1) throw std::invalid_argument("gauss_rule: need n >= 1");
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
      }
      pp = n * (z * p1 - p2) / (z * z - 1.0);
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) < 1e-15) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    r.w[n - 1 - i] = r.w[i];
  }
  return r;
}

const GaussRule& gauss_rule(int n) {
  static std::map<int, GaussRule> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double panel_width, int nodes_per_panel) {
  if (b <= a) return 0.0;
  if (panel_width <= 0) throw std::invalid_argument("integrate: panel_width <= 0");
  const GaussRule& g = gauss_rule(nodes_per_panel);
  long npanel = (long)std::ceil((b - a) / panel_width - 1e-12);
  if (npanel < 1) npanel = 1;
  double h = (b - a) / (double)npanel;
  double total = 0.0;
  for (long p = 0; p < npanel; ++p) {
    double lo = a + p * h, hi = lo + h;
    double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    double acc = 0.0;
    for (size_t j = 0; j < g.x.size(); ++j) acc += g.w[j] * f(mid + half * g.x[j]);
    total += half * acc;
  }
  return total;
}

}  // namespace sflow::quad
