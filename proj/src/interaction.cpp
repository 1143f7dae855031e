#include "sflow/interaction.hpp"

#include <json.hpp>
#include <stdexcept>

#include "sflow/rng.hpp"

namespace sflow {

Interaction::Interaction(int range) : range_(range) {
  if (range < 1) throw std::invalid_argument("Interaction: range must be >= 1");
}

void Interaction::add_term(const LocalOperator& term) {
  if (!term.is_hermitian()) throw std::invalid_argument("Interaction: term is not self-adjoint");
  int diam = term.support().hi - term.support().lo;
  if (diam >= range_) throw std::invalid_argument("Interaction: term diameter exceeds the range");
  auto key = std::make_pair(term.support().lo, term.support().hi);
  auto it = terms_.find(key);
  if (it == terms_.end()) {
    terms_.emplace(key, term);
  } else {
    it->second.matrix() += term.matrix();
  }
}

double Interaction::max_term_norm() const {
  double m = 0.0;
  for (auto& [key, op] : terms_) m = std::max(m, operator_norm(op));
  return m;
}

Interaction Interaction::tfi(const Region& chain, double j_coupling, double h_field) {
  Interaction psi(2);
  for (int i = chain.lo; i < chain.hi; ++i)
    if (j_coupling != 0.0)
      psi.add_term(pauli_string({{i, Pauli::Z}, {i + 1, Pauli::Z}}, -j_coupling));
  for (int i = chain.lo; i <= chain.hi; ++i)
    if (h_field != 0.0) psi.add_term(pauli_string({{i, Pauli::X}}, -h_field));
  return psi;
}

std::string Interaction::to_json() const {
  nlohmann::json j;
  j["range"] = range_;
  j["terms"] = nlohmann::json::array();
  for (auto& [key, op] : terms_) {
    nlohmann::json t;
    t["sites"] = {key.first, key.second};
    nlohmann::json rows = nlohmann::json::array();
    for (long r = 0; r < op.dim(); ++r) {
      nlohmann::json row = nlohmann::json::array();
      for (long c = 0; c < op.dim(); ++c)
        row.push_back({op.matrix()(r, c).real(), op.matrix()(r, c).imag()});
      rows.push_back(row);
    }
    t["matrix"] = rows;
    j["terms"].push_back(t);
  }
  return j.dump(2);
}

Interaction Interaction::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  Interaction psi(j.at("range").get<int>());
  for (auto& t : j.at("terms")) {
    auto sites = t.at("sites");
    Region support(sites.at(0).get<int>(), sites.at(1).get<int>());
    long dim = 1L << support.size();
    auto& rows = t.at("matrix");
    if (static_cast<long>(rows.size()) != dim)
      throw std::invalid_argument("Interaction: matrix does not match the site window");
    Matrix m(dim, dim);
    for (long r = 0; r < dim; ++r)
      for (long c = 0; c < dim; ++c) {
        auto& e = rows.at(r).at(c);
        m(r, c) = Cplx(e.at(0).get<double>(), e.at(1).get<double>());
      }
    psi.add_term(LocalOperator(support, std::move(m)));
  }
  return psi;
}

LocalOperator local_hamiltonian(const Interaction& psi, const Region& window) {
  LocalOperator h = LocalOperator::zero(window);
  for (auto& [key, op] : psi.terms()) {
    if (window.contains(op.support())) h.matrix() += embed(op, window).matrix();
  }
  return h;
}

LocalityCheck locality_from_commutators(const LocalOperator& a, int n, int probe_count,
                                        uint64_t seed) {
  if (probe_count < 1) throw std::invalid_argument("locality_from_commutators: need probes");
  Region ball = Region::ball(n);
  const Region& s = a.support();
  LocalityCheck out;
  out.deviation = operator_norm(a - conditional_expectation(a, n));

  std::vector<int> outside;  // only sites under the support can matter
  for (int site = s.lo; site <= s.hi; ++site)
    if (!ball.contains(site)) outside.push_back(site);
  if (outside.empty()) {
    out.bound_holds = out.deviation <= 1e-12;
    return out;
  }

  auto probe = [&](const LocalOperator& b) {
    double nb = operator_norm(b);
    if (nb == 0.0) return;
    out.epsilon = std::max(out.epsilon, operator_norm(commutator(a, b)) / nb);
  };
  const Pauli labels[3] = {Pauli::X, Pauli::Y, Pauli::Z};
  for (int site : outside)
    for (Pauli p : labels) probe(pauli_string({{site, p}}, 1.0));

  std::mt19937_64 rng(seed);
  for (int k = 0; k < probe_count; ++k) {
    int weight = (outside.size() >= 2 && uniform_int(rng, 2) == 1) ? 2 : 1;
    int i1 = uniform_int(rng, static_cast<int>(outside.size()));
    std::vector<std::pair<int, Pauli>> sites{{outside[i1], labels[uniform_int(rng, 3)]}};
    if (weight == 2) {
      int i2;
      do {
        i2 = uniform_int(rng, static_cast<int>(outside.size()));
      } while (i2 == i1);
      sites.push_back({outside[i2], labels[uniform_int(rng, 3)]});
    }
    probe(pauli_string(sites, 1.0));
  }
  out.bound_holds = out.deviation <= 2.0 * out.epsilon + 1e-12;
  return out;
}

}  // namespace sflow
