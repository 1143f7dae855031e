// Configuration-driven experiment runner.  Reads a JSON config describing a
// spin chain, a filter, and a pipeline; writes CSV/JSON artifacts plus a
// manifest.json that records every derived constant and a pass/fail check
// list that `summarize` renders later.
//
// Exit codes: 0 run complete (check failures are content, not errors),
// 2 precondition/config failure, 1 internal error.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sflow/filter.hpp"
#include "sflow/flow.hpp"
#include "sflow/interaction.hpp"
#include "sflow/locality.hpp"
#include "sflow/operators.hpp"
#include "sflow/rng.hpp"
#include "sflow/spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace sflow;

namespace {

constexpr int kConfigVersion = 1;
constexpr const char* kToolVersion = "1.0.0";

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + p.string());
  out << body;
}

ordered_json load_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::invalid_argument("cannot open " + p.string());
  try {
    return ordered_json::parse(in);
  } catch (const ordered_json::exception& e) {
    throw std::invalid_argument(p.string() + ": " + e.what());
  }
}

template <class T>
T get_or(const ordered_json& j, const std::string& key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

const ordered_json kEmpty = ordered_json::object();

const ordered_json& section(const ordered_json& j, const std::string& key) {
  return j.contains(key) ? j.at(key) : kEmpty;
}

// ---------------------------------------------------------------- config ---

void check_version(const ordered_json& cfg) {
  if (!cfg.contains("version"))
    throw std::invalid_argument("config: missing version field");
  if (cfg.at("version").get<int>() != kConfigVersion)
    throw std::invalid_argument("config: unsupported version " + cfg.at("version").dump());
}

Region chain_region(const ordered_json& cfg) {
  if (!cfg.contains("chain")) throw std::invalid_argument("config: missing chain");
  const ordered_json& c = cfg.at("chain");
  int radius = c.at("radius").get<int>();
  int d = get_or(c, "d", 1);
  if (radius < 0) throw std::invalid_argument("chain.radius must be >= 0");
  if (d != 1) throw std::invalid_argument("only d = 1 chains are supported");
  return Region::ball(radius);
}

Pauli pauli_from(const std::string& s) {
  if (s == "X") return Pauli::X;
  if (s == "Y") return Pauli::Y;
  if (s == "Z") return Pauli::Z;
  throw std::invalid_argument("unknown pauli letter: " + s);
}

// interaction file: {"range": r, "terms": [{sites, paulis, coeff: [re, im]}]}
Interaction interaction_from_file(const fs::path& p) {
  ordered_json j = load_json_file(p);
  Interaction psi(j.at("range").get<int>());
  for (const ordered_json& t : j.at("terms")) {
    const ordered_json& sites = t.at("sites");
    const ordered_json& paulis = t.at("paulis");
    if (sites.size() != paulis.size())
      throw std::invalid_argument(p.string() + ": sites and paulis differ in length");
    std::vector<std::pair<int, Pauli>> ops;
    for (size_t k = 0; k < sites.size(); ++k)
      ops.emplace_back(sites.at(k).get<int>(), pauli_from(paulis.at(k).get<std::string>()));
    const ordered_json& c = t.at("coeff");
    psi.add_term(pauli_string(ops, Cplx(c.at(0).get<double>(), c.at(1).get<double>())));
  }
  return psi;
}

double tfi_field_at(const ordered_json& p, const char* key, const char* alias) {
  if (p.contains(key)) return p.at(key).get<double>();
  if (p.contains(alias)) return p.at(alias).get<double>();
  throw std::invalid_argument(std::string("path: missing field ") + key);
}

// fixed Hamiltonian for the static pipelines (the s = 0 end of a path config)
Interaction static_interaction(const ordered_json& cfg, const Region& chain) {
  if (!cfg.contains("path")) throw std::invalid_argument("config: missing path");
  const ordered_json& p = cfg.at("path");
  std::string kind = p.at("kind").get<std::string>();
  if (kind == "tfi")
    return Interaction::tfi(chain, get_or(p, "j", 1.0), tfi_field_at(p, "h0", "h"));
  if (kind == "file") return interaction_from_file(p.at("start").get<std::string>());
  throw std::invalid_argument("unknown path.kind: " + kind);
}

InteractionPath path_from(const ordered_json& cfg, const Region& chain) {
  if (!cfg.contains("path")) throw std::invalid_argument("config: missing path");
  const ordered_json& p = cfg.at("path");
  std::string kind = p.at("kind").get<std::string>();
  if (kind == "tfi") {
    if (get_or(p, "j", 1.0) != 1.0)
      throw std::invalid_argument("the built-in field path fixes the coupling at 1");
    double h0 = tfi_field_at(p, "h0", "h");
    return build_tfi_path(chain, h0, get_or(p, "h1", h0));
  }
  if (kind == "file") {
    Interaction start = interaction_from_file(p.at("start").get<std::string>());
    Interaction end =
        p.contains("end") ? interaction_from_file(p.at("end").get<std::string>()) : start;
    return linear_path(start, end);
  }
  throw std::invalid_argument("unknown path.kind: " + kind);
}

FilterParams filter_params(const ordered_json& cfg) {
  const ordered_json& f = section(cfg, "filter");
  FilterParams fp;
  fp.a1 = get_or(f, "a1", fp.a1);
  fp.n_terms = get_or(f, "n_terms", fp.n_terms);
  fp.t_cut = get_or(f, "t_cut", fp.t_cut);
  fp.quad_nodes = get_or(f, "quad_nodes", fp.quad_nodes);
  return fp;
}

struct GammaChoice {
  double gamma = 0.0;
  std::string policy;
  double value = 0.0;
};

// policy "fixed" takes the value as is; "fraction-of-gap" scales the measured
// gap (NaN gap means no model was configured and only "fixed" works)
GammaChoice resolve_gamma(const ordered_json& cfg, double measured_gap) {
  ordered_json g = {{"policy", "fraction-of-gap"}, {"value", 0.45}};
  const ordered_json& f = section(cfg, "filter");
  if (f.contains("gamma")) g = f.at("gamma");
  GammaChoice out;
  out.policy = g.at("policy").get<std::string>();
  out.value = g.at("value").get<double>();
  if (!(out.value > 0.0)) throw std::invalid_argument("gamma value must be positive");
  if (out.policy == "fixed") {
    out.gamma = out.value;
  } else if (out.policy == "fraction-of-gap") {
    if (!(measured_gap > 0.0))
      throw std::invalid_argument(
          "fraction-of-gap gamma needs a configured model with a positive gap; "
          "use {\"policy\": \"fixed\"}");
    out.gamma = out.value * measured_gap;
  } else {
    throw std::invalid_argument("unknown gamma policy: " + out.policy);
  }
  return out;
}

LocalOperator observable_from(const ordered_json& cfg, const char* key, int default_site,
                              const std::string& default_pauli) {
  const ordered_json& o = section(cfg, key);
  int site = get_or(o, "site", default_site);
  std::string pauli = get_or<std::string>(o, "pauli", default_pauli);
  return pauli_string({{site, pauli_from(pauli)}}, 1.0);
}

LocalOperator random_hermitian_pair_site(const Region& chain, std::mt19937_64& rng) {
  int len = 1 + uniform_int(rng, 2);
  int lo = chain.lo + uniform_int(rng, chain.size());
  Region r(lo, std::min(lo + len - 1, chain.hi));
  long dim = 1L << r.size();
  Matrix m(dim, dim);
  for (long i = 0; i < dim; ++i)
    for (long j = 0; j < dim; ++j) m(i, j) = Cplx(normal01(rng), normal01(rng));
  Matrix h = 0.5 * (m + m.adjoint());
  return LocalOperator(r, std::move(h));
}

// ------------------------------------------------------------- manifest ---

void add_check(ordered_json& checks, const std::string& name, double measured,
               const std::string& op, double threshold) {
  bool pass = op == "<=" ? measured <= threshold
              : op == ">=" ? measured >= threshold
                           : throw std::logic_error("unknown check op");
  checks.push_back({{"name", name},
                    {"measured", measured},
                    {"op", op},
                    {"threshold", threshold},
                    {"pass", pass}});
}

ordered_json manifest_skeleton(const std::string& command, const ordered_json& cfg,
                               uint64_t seed) {
  return {{"format_version", 1},
          {"tool_version", kToolVersion},
          {"command", command},
          {"seed", seed},
          {"config", cfg},
          {"constants", ordered_json::object()},
          {"results", ordered_json::object()},
          {"checks", ordered_json::array()},
          {"artifacts", ordered_json::array()}};
}

void finish_manifest(ordered_json& manifest, const fs::path& outdir) {
  write_text(outdir / "manifest.json", manifest.dump(2) + "\n");
}

void filter_constants(ordered_json& constants, const FilterFunction& f) {
  constants["a1"] = f.params().a1;
  constants["c"] = f.c();
  constants["gamma"] = f.gamma();
  constants["eta"] = f.eta();
  constants["envelope_c1"] = f.envelope_c1();
  constants["support_edge"] = f.support_edge() * f.gamma();
  constants["n_terms"] = f.params().n_terms;
  constants["quad_domain"] = f.quad_domain();
}

// ------------------------------------------------------------- commands ---

int run_filter_table(const ordered_json& cfg, const fs::path& outdir, uint64_t seed) {
  FilterParams fp = filter_params(cfg);
  fp.validate();
  double gap = std::numeric_limits<double>::quiet_NaN();
  if (cfg.contains("chain") && cfg.contains("path")) {
    Region chain = chain_region(cfg);
    gap = diagonalize(local_hamiltonian(static_interaction(cfg, chain), chain)).gap;
  }
  GammaChoice gc = resolve_gamma(cfg, gap);
  FilterFunction f(fp, gc.gamma);

  int points = get_or(cfg, "table_points", 400);
  if (points < 2) throw std::invalid_argument("table_points must be >= 2");

  std::string omega = "t,omega_gamma,W_gamma\n";
  double t_max = f.quad_domain() / f.gamma();
  for (int i = 0; i < points; ++i) {
    double t = t_max * i / (points - 1);
    omega += fmt17(t) + "," + fmt17(f.omega_gamma(t)) + "," + fmt17(f.w_gamma(t)) + "\n";
  }
  write_text(outdir / "omega.csv", omega);

  std::string fourier = "k,re_fourier,im_fourier\n";
  double k_max = get_or(cfg, "fourier_k_over_gamma", 1.5) * f.gamma();
  for (int i = 0; i < points; ++i) {
    double k = k_max * i / (points - 1);
    std::complex<double> v = f.fourier_omega(k);
    fourier += fmt17(k) + "," + fmt17(v.real()) + "," + fmt17(v.imag()) + "\n";
  }
  write_text(outdir / "fourier.csv", fourier);

  double w0 = f.fourier_omega(0.0).real();
  double leak = 0.0;
  for (int i = 0; i < 64; ++i) {
    double k = (1.05 + (2.0 - 1.05) * i / 63.0) * f.gamma();
    leak = std::max(leak, std::abs(f.fourier_omega(k)) / w0);
  }
  double normalization = 1.0 - f.norm_defect();

  ordered_json manifest = manifest_skeleton("filter-table", cfg, seed);
  filter_constants(manifest["constants"], f);
  if (!std::isnan(gap)) manifest["constants"]["gap"] = gap;
  manifest["results"] = {{"normalization", normalization},
                         {"support_leak", leak},
                         {"t_max", t_max},
                         {"k_max", k_max}};
  add_check(manifest["checks"], "normalization_lower", normalization, ">=",
            1.0 - get_or(cfg, "norm_tol", 1e-6));
  add_check(manifest["checks"], "normalization_upper", normalization, "<=", 1.0);
  add_check(manifest["checks"], "support_leak", leak, "<=",
            get_or(cfg, "support_leak_tol", 1e-3));
  manifest["artifacts"] = {"omega.csv", "fourier.csv"};
  finish_manifest(manifest, outdir);
  return 0;
}

int run_flow_run(const ordered_json& cfg, const fs::path& outdir, uint64_t seed) {
  Region chain = chain_region(cfg);
  InteractionPath path = path_from(cfg, chain);
  double mg = min_gap(path, chain, get_or(cfg, "gap_samples", 21));
  GammaChoice gc = resolve_gamma(cfg, mg);
  if (!get_or(cfg, "allow_wide_filter", false) && !(gc.gamma < mg))
    throw std::invalid_argument(
        "filter width gamma = " + fmt17(gc.gamma) +
        " is not below the smallest sampled gap = " + fmt17(mg) +
        "; set allow_wide_filter to force the run");

  FlowConfig fc;
  fc.chain = chain;
  fc.gamma = gc.gamma;
  fc.filter = filter_params(cfg);
  const ordered_json& flow = section(cfg, "flow");
  fc.s_steps = get_or(flow, "s_steps", fc.s_steps);
  fc.reunitarize_every = get_or(flow, "reunitarize_every", fc.reunitarize_every);
  fc.store_every = get_or(flow, "store_every", fc.store_every);
  fc.gap_threshold = get_or(flow, "gap_threshold", fc.gap_threshold);
  fc.validate();

  FilterFunction f(fc.filter, fc.gamma);  // constants for the manifest
  FlowResult r = solve_flow(path, fc);

  std::string csv = "s,fidelity,gap,generator_norm\n";
  for (size_t i = 0; i < r.s_grid.size(); ++i)
    csv += fmt17(r.s_grid[i]) + "," + fmt17(r.fidelity[i]) + "," + fmt17(r.gap_curve[i]) +
           "," + fmt17(r.generator_norms[i]) + "\n";
  write_text(outdir / "flow.csv", csv);

  ordered_json fj = {{"s", r.s_grid},
                     {"fidelity", r.fidelity},
                     {"gap", r.gap_curve},
                     {"generator_norm", r.generator_norms},
                     {"unitarity_drift", r.unitarity_drift}};
  write_text(outdir / "flow.json", fj.dump(2) + "\n");

  double min_fid = *std::min_element(r.fidelity.begin(), r.fidelity.end());
  double min_gap_seen = *std::min_element(r.gap_curve.begin(), r.gap_curve.end());

  ordered_json manifest = manifest_skeleton("flow-run", cfg, seed);
  filter_constants(manifest["constants"], f);
  manifest["constants"]["gap"] = mg;
  manifest["constants"]["s_steps"] = fc.s_steps;
  manifest["constants"]["path_strength_bound"] = path.strength_bound();
  manifest["results"] = {{"min_fidelity", min_fid},
                         {"final_fidelity", r.fidelity.back()},
                         {"min_gap_seen", min_gap_seen},
                         {"unitarity_drift", r.unitarity_drift}};
  add_check(manifest["checks"], "min_fidelity", min_fid, ">=",
            get_or(cfg, "fidelity_floor", 0.99));
  add_check(manifest["checks"], "unitarity_drift", r.unitarity_drift, "<=",
            get_or(cfg, "drift_tol", 1e-8));
  manifest["artifacts"] = {"flow.csv", "flow.json"};
  finish_manifest(manifest, outdir);
  return 0;
}

int run_lr_scan(const ordered_json& cfg, const fs::path& outdir, uint64_t seed) {
  Region chain = chain_region(cfg);
  SpectralData sd = diagonalize(local_hamiltonian(static_interaction(cfg, chain), chain));
  LocalOperator a = observable_from(cfg, "observable", chain.lo, "X");
  LocalOperator b = observable_from(cfg, "probe", chain.lo + 1, "Z");
  std::vector<double> t_grid =
      get_or<std::vector<double>>(cfg, "t_grid", {0.25, 0.5, 0.75, 1.0});

  CommutatorProfile p = lr_commutator_profile(a, b, t_grid, sd);

  std::string csv = "t,distance,norm\n";
  for (size_t i = 0; i < p.times.size(); ++i)
    for (size_t j = 0; j < p.distances.size(); ++j)
      csv += fmt17(p.times[i]) + "," + fmt17(p.distances[j]) + "," + fmt17(p.norms[i][j]) +
             "\n";
  write_text(outdir / "lr.csv", csv);
  ordered_json fit = {{"C", p.fit_amplitude},
                      {"v", p.fit_velocity},
                      {"r_squared", p.fit_quality},
                      {"envelope_C", p.envelope_amplitude}};
  write_text(outdir / "lr_fit.json", fit.dump(2) + "\n");

  ordered_json manifest = manifest_skeleton("lr-scan", cfg, seed);
  manifest["constants"]["gap"] = sd.gap;
  manifest["results"] = {{"fit_amplitude", p.fit_amplitude},
                         {"fit_velocity", p.fit_velocity},
                         {"fit_quality", p.fit_quality},
                         {"envelope_amplitude", p.envelope_amplitude}};
  add_check(manifest["checks"], "fit_quality", p.fit_quality, ">=",
            get_or(cfg, "quality_floor", 0.5));
  add_check(manifest["checks"], "fit_velocity", p.fit_velocity, ">=",
            get_or(cfg, "velocity_floor", 0.0));
  manifest["artifacts"] = {"lr.csv", "lr_fit.json"};
  finish_manifest(manifest, outdir);
  return 0;
}

int run_locality_scan(const ordered_json& cfg, const fs::path& outdir, uint64_t seed) {
  Region chain = chain_region(cfg);
  Interaction psi = static_interaction(cfg, chain);
  SpectralData sd = diagonalize(local_hamiltonian(psi, chain));
  LocalOperator a = observable_from(cfg, "observable", 0, "X");
  double t = get_or(cfg, "time", 1.0);

  int radius = std::max(std::abs(chain.lo), std::abs(chain.hi));
  int m = std::max(std::abs(a.support().lo), std::abs(a.support().hi));
  std::vector<int> grid;
  if (cfg.contains("n_grid")) {
    grid = cfg.at("n_grid").get<std::vector<int>>();
  } else {
    for (int n = m + 1; n <= radius; ++n) grid.push_back(n);
  }

  DecayProfile p = tau_locality_profile(a, t, sd, grid);
  bool fitted = p.fit_quality != 0.0 || p.fit_c != 0.0;
  bool envelope_ok = fitted;
  std::string csv = "abscissa,value,envelope_value\n";
  for (size_t i = 0; i < p.abscissa.size(); ++i) {
    double env =
        fitted ? 1.05 * p.fit_c * std::exp(-p.fit_rate * p.abscissa[i]) : 0.0;
    if (fitted && p.values[i] > env * (1.0 + 1e-12)) envelope_ok = false;
    csv += fmt17(p.abscissa[i]) + "," + fmt17(p.values[i]) + "," + fmt17(env) + "\n";
  }
  write_text(outdir / "tau.csv", csv);
  ordered_json fit = {{"prefactor", p.fit_c},
                      {"rate", p.fit_rate},
                      {"quality", p.fit_quality},
                      {"envelope_ok", envelope_ok}};
  write_text(outdir / "tau_fit.json", fit.dump(2) + "\n");

  ordered_json manifest = manifest_skeleton("locality-scan", cfg, seed);
  manifest["constants"]["gap"] = sd.gap;
  manifest["constants"]["time"] = t;
  manifest["results"] = {{"fit_prefactor", p.fit_c},
                         {"fit_rate", p.fit_rate},
                         {"fit_quality", p.fit_quality},
                         {"envelope_ok", envelope_ok}};
  add_check(manifest["checks"], "fit_quality", p.fit_quality, ">=",
            get_or(cfg, "quality_floor", 0.9));
  add_check(manifest["checks"], "fit_rate", p.fit_rate, ">=", 1e-12);
  manifest["artifacts"] = {"tau.csv", "tau_fit.json"};

  if (cfg.contains("volume_sizes")) {
    std::vector<int> sizes = cfg.at("volume_sizes").get<std::vector<int>>();
    DecayProfile vp = finite_volume_convergence(a, psi, t, sizes);
    std::string vcsv = "abscissa,value,envelope_value\n";
    for (size_t i = 0; i < vp.abscissa.size(); ++i) {
      double env = vp.fit_c != 0.0
                       ? 1.05 * vp.fit_c * std::exp(-vp.fit_rate * vp.abscissa[i])
                       : 0.0;
      vcsv += fmt17(vp.abscissa[i]) + "," + fmt17(vp.values[i]) + "," + fmt17(env) + "\n";
    }
    write_text(outdir / "volume.csv", vcsv);
    ordered_json vfit = {{"prefactor", vp.fit_c},
                         {"rate", vp.fit_rate},
                         {"quality", vp.fit_quality}};
    write_text(outdir / "volume_fit.json", vfit.dump(2) + "\n");
    manifest["results"]["volume_fit_rate"] = vp.fit_rate;
    manifest["artifacts"].push_back("volume.csv");
    manifest["artifacts"].push_back("volume_fit.json");
  }
  finish_manifest(manifest, outdir);
  return 0;
}

int run_lemma_checks(const ordered_json& cfg, const fs::path& outdir, uint64_t seed) {
  Region chain = chain_region(cfg);
  SpectralData sd = diagonalize(local_hamiltonian(static_interaction(cfg, chain), chain));
  GammaChoice gc = resolve_gamma(cfg, sd.gap);
  FilterFunction f(filter_params(cfg), gc.gamma);
  int draws = get_or(cfg, "draws", 10);
  if (draws < 1) throw std::invalid_argument("draws must be >= 1");

  std::mt19937_64 rng(seed);
  std::string csv = "draw,ground_residual,decoupling_residual\n";
  double max_ground = 0.0, max_dec = 0.0;
  bool gap_ok = true;
  for (int i = 0; i < draws; ++i) {
    LocalOperator a = random_hermitian_pair_site(chain, rng);
    LocalOperator b = random_hermitian_pair_site(chain, rng);
    ResidualReport g = ground_action_residual(a, sd, f);
    ResidualReport d = decoupling_residual(a, b, sd, f);
    gap_ok = gap_ok && g.gap_ok && d.gap_ok;
    max_ground = std::max(max_ground, g.value);
    max_dec = std::max(max_dec, d.value);
    csv += std::to_string(i) + "," + fmt17(g.value) + "," + fmt17(d.value) + "\n";
  }
  write_text(outdir / "lemma.csv", csv);

  double tol = get_or(cfg, "residual_tol", 1e-3);
  ordered_json manifest = manifest_skeleton("lemma-checks", cfg, seed);
  filter_constants(manifest["constants"], f);
  manifest["constants"]["gap"] = sd.gap;
  manifest["results"] = {{"max_ground_residual", max_ground},
                         {"max_decoupling_residual", max_dec},
                         {"gap_ok", gap_ok},
                         {"draws", draws}};
  add_check(manifest["checks"], "key_lemma_residual", max_ground, "<=", tol);
  add_check(manifest["checks"], "decoupling_residual", max_dec, "<=", tol);
  manifest["artifacts"] = {"lemma.csv"};
  finish_manifest(manifest, outdir);
  return 0;
}

// ------------------------------------------------- validate / summarize ---

// schema and physics diagnostics; never throws, exit is always 0
int run_validate(const fs::path& config_path) {
  std::vector<std::string> notes;
  ordered_json cfg;
  try {
    cfg = load_json_file(config_path);
  } catch (const std::exception& e) {
    notes.push_back(e.what());
  }

  std::string command;
  if (notes.empty()) {
    try {
      check_version(cfg);
    } catch (const std::exception& e) {
      notes.push_back(e.what());
    }
    command = get_or<std::string>(cfg, "command", "");
    if (command.empty()) notes.push_back("config has no command field");

    int radius = -1;
    if (cfg.contains("chain")) {
      try {
        Region chain = chain_region(cfg);
        radius = std::max(std::abs(chain.lo), std::abs(chain.hi));
        if (radius > 6)
          notes.push_back("chain radius " + std::to_string(radius) +
                          " gives dimension 2^" + std::to_string(chain.size()) +
                          "; dense runs will be slow");
      } catch (const std::exception& e) {
        notes.push_back(e.what());
      }
    } else if (command != "filter-table") {
      notes.push_back("config has no chain section");
    }

    if (cfg.contains("n_grid") && radius >= 0) {
      std::vector<int> grid = cfg.at("n_grid").get<std::vector<int>>();
      for (size_t i = 0; i + 1 < grid.size(); ++i)
        if (grid[i] >= grid[i + 1]) {
          notes.push_back("n_grid is not strictly increasing");
          break;
        }
      if (!grid.empty() && grid.back() > radius)
        notes.push_back("n_grid reaches " + std::to_string(grid.back()) +
                        " but the chain radius is only " + std::to_string(radius));
    }

    if (cfg.contains("flow")) {
      int s_steps = get_or(section(cfg, "flow"), "s_steps", 200);
      if (s_steps < 2) notes.push_back("flow.s_steps must be >= 2");
    }

    // physics: measure the gap and test the filter width against it
    if (radius >= 0 && radius <= 6 && cfg.contains("path")) {
      try {
        Region chain = chain_region(cfg);
        double gap;
        if (command == "flow-run") {
          gap = min_gap(path_from(cfg, chain), chain, 11);
        } else {
          gap = diagonalize(local_hamiltonian(static_interaction(cfg, chain), chain)).gap;
        }
        GammaChoice gc = resolve_gamma(cfg, gap);
        if (!(gc.gamma < gap))
          notes.push_back("filter width gamma = " + fmt17(gc.gamma) +
                          " is at or above the measured gap = " + fmt17(gap) +
                          "; ground-level filtering will leak");
      } catch (const std::exception& e) {
        notes.push_back(e.what());
      }
    }
  }

  if (notes.empty()) {
    std::printf("ok\n");
  } else {
    for (const std::string& n : notes) std::printf("- %s\n", n.c_str());
  }
  return 0;
}

int run_summarize(const fs::path& dir) {
  fs::path mf = dir / "manifest.json";
  if (!fs::exists(mf)) {
    std::fprintf(stderr, "summarize: no manifest.json in %s\n", dir.string().c_str());
    return 1;
  }
  ordered_json m = load_json_file(mf);
  std::printf("command: %s\n", m.at("command").get<std::string>().c_str());
  if (m.contains("constants"))
    for (auto& [k, v] : m.at("constants").items())
      std::printf("  %s = %s\n", k.c_str(), v.dump().c_str());
  if (m.contains("results"))
    for (auto& [k, v] : m.at("results").items())
      std::printf("  %s = %s\n", k.c_str(), v.dump().c_str());
  int failed = 0;
  for (const ordered_json& c : m.at("checks")) {
    bool pass = c.at("pass").get<bool>();
    failed += !pass;
    std::printf("[%s] %s: measured %s (required %s %s)\n", pass ? "PASS" : "FAIL",
                c.at("name").get<std::string>().c_str(),
                c.at("measured").dump().c_str(), c.at("op").get<std::string>().c_str(),
                c.at("threshold").dump().c_str());
  }
  if (failed)
    std::printf("%d check(s) failed\n", failed);
  else
    std::printf("all checks passed\n");
  return 0;
}

using Runner = int (*)(const ordered_json&, const fs::path&, uint64_t);

int dispatch(Runner runner, const std::string& command, const fs::path& config_path,
             std::string out_override, bool seed_given, uint64_t seed_override) {
  ordered_json cfg = load_json_file(config_path);
  check_version(cfg);
  if (cfg.contains("command") && cfg.at("command").get<std::string>() != command)
    throw std::invalid_argument("config names command " +
                                cfg.at("command").get<std::string>() + " but " + command +
                                " was invoked");
  fs::path outdir = out_override.empty()
                        ? fs::path(get_or<std::string>(cfg, "output_dir", "out"))
                        : fs::path(out_override);
  fs::create_directories(outdir);
  uint64_t seed = seed_given ? seed_override : get_or<uint64_t>(cfg, "seed", 1);
  return runner(cfg, outdir, seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spin-chain spectral flow laboratory"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    Runner runner;
  };
  const Sub subs[] = {
      {"filter-table", "tabulate the filter function and its transform", run_filter_table},
      {"flow-run", "integrate the spectral flow along an interaction path", run_flow_run},
      {"lr-scan", "commutator light-cone scan", run_lr_scan},
      {"locality-scan", "evolution tail profile over conditional cutoffs", run_locality_scan},
      {"lemma-checks", "ground-state filtering residuals on random observables",
       run_lemma_checks},
  };

  std::string config_path, out_override;
  uint64_t seed_override = 0;
  bool seed_given = false;

  std::vector<std::pair<CLI::App*, Runner>> runners;
  for (const Sub& s : subs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--out", out_override, "output directory (overrides the config)");
    sub->add_option("--seed", seed_override, "random seed (overrides the config)")
        ->each([&seed_given](const std::string&) { seed_given = true; });
    runners.emplace_back(sub, s.runner);
  }

  CLI::App* validate = app.add_subcommand("validate", "config diagnostics without running");
  validate->add_option("--config", config_path, "experiment config (JSON)")->required();

  CLI::App* summarize =
      app.add_subcommand("summarize", "render the check list of a finished run");
  summarize->add_option("--out", out_override, "run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad invocation is a precondition failure
  }

  try {
    if (validate->parsed()) return run_validate(config_path);
    if (summarize->parsed()) return run_summarize(out_override);
    for (auto& [sub, runner] : runners)
      if (sub->parsed())
        return dispatch(runner, sub->get_name(), config_path, out_override, seed_given,
                        seed_override);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ordered_json::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 1;
  }
}
