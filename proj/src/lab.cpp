#include "wsb/lab.hpp"

#include <cmath>
#include <set>

#include "wsb/equilibria.hpp"

namespace wsb {

using nlohmann::json;

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  SystemParams{mu}.validate();
  if (block_a.has_value() != block_b.has_value()) fail("block.a and block.b must be given together");
  if (block_a && !(*block_a < *block_b)) fail("block.a must be below block.b");
  if (!(rtol > 0.0) || !(atol > 0.0)) fail("integrator tolerances must be positive");
  if (e0 && !(*e0 >= 0.0 && *e0 < 1.0)) fail("e0 must lie in [0, 1)");
  if (n < 1) fail("order must be at least 1");
  if (!(grid_step > 0.0) || !(delta_r > 0.0)) fail("grid_step and delta_r must be positive");
  if (r_lo && r_hi && !(*r_lo < *r_hi)) fail("r_lo must be below r_hi");
  if (cut_index < 0) fail("cut_index must be non-negative");
  if (n_seeds < 4) fail("n_seeds must be at least 4");
  if (!(epsilon > 0.0)) fail("epsilon must be positive");
  if (max_turns < 1) fail("max_turns must be at least 1");
  if (zvc_resolution < 8) fail("zvc resolution must be at least 8");
  if (compare_grid < 4) fail("compare grid needs at least 4 energies");
  if (!(profile_d_min > 0.0 && profile_d_max > profile_d_min) || profile_samples < 2) fail("bad profile window");
  if (threads < 0) fail("threads must be non-negative");
  if (out.empty()) fail("output directory must be named");
}

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
void read_opt(const json& j, const char* key, std::optional<T>& dst) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) {
    dst.reset();
  } else {
    dst = j.at(key).get<T>();
  }
}

template <class T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw Error(ErrorCode::ConfigError, "unknown key '" + where + it.key() + "'");
  }
}

}  // namespace

json RunConfig::to_json() const {
  return json{
      {"mu", mu},
      {"block", {{"a", opt(block_a)}, {"b", opt(block_b)}}},
      {"H_star", opt(H_star)},
      {"integrator", {{"rtol", rtol}, {"atol", atol}}},
      {"query",
       {{"theta0", theta0},
        {"rdot0", rdot0},
        {"e0", opt(e0)},
        {"n", n},
        {"grid_step", grid_step},
        {"delta_r", delta_r},
        {"r_lo", opt(r_lo)},
        {"r_hi", opt(r_hi)}}},
      {"energy", opt(energy)},
      {"cut_index", cut_index},
      {"manifold", {{"n_seeds", n_seeds}, {"epsilon", epsilon}, {"max_turns", max_turns}}},
      {"zvc", {{"resolution", zvc_resolution}}},
      {"compare", {{"grid", compare_grid}}},
      {"profile", {{"d_min", profile_d_min}, {"d_max", profile_d_max}, {"samples", profile_samples}}},
      {"out", out},
      {"threads", threads},
  };
}

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    reject_unknown(j,
                   {"mu", "block", "H_star", "integrator", "query", "energy", "cut_index", "manifold", "zvc",
                    "compare", "profile", "out", "threads"},
                   "");
    read(j, "mu", c.mu);
    if (j.contains("block")) {
      const json& b = j.at("block");
      reject_unknown(b, {"a", "b"}, "block.");
      read_opt(b, "a", c.block_a);
      read_opt(b, "b", c.block_b);
    }
    read_opt(j, "H_star", c.H_star);
    if (j.contains("integrator")) {
      const json& s = j.at("integrator");
      reject_unknown(s, {"rtol", "atol"}, "integrator.");
      read(s, "rtol", c.rtol);
      read(s, "atol", c.atol);
    }
    if (j.contains("query")) {
      const json& q = j.at("query");
      reject_unknown(q, {"theta0", "rdot0", "e0", "n", "grid_step", "delta_r", "r_lo", "r_hi"}, "query.");
      read(q, "theta0", c.theta0);
      read(q, "rdot0", c.rdot0);
      read_opt(q, "e0", c.e0);
      read(q, "n", c.n);
      read(q, "grid_step", c.grid_step);
      read(q, "delta_r", c.delta_r);
      read_opt(q, "r_lo", c.r_lo);
      read_opt(q, "r_hi", c.r_hi);
    }
    read_opt(j, "energy", c.energy);
    read(j, "cut_index", c.cut_index);
    if (j.contains("manifold")) {
      const json& m = j.at("manifold");
      reject_unknown(m, {"n_seeds", "epsilon", "max_turns"}, "manifold.");
      read(m, "n_seeds", c.n_seeds);
      read(m, "epsilon", c.epsilon);
      read(m, "max_turns", c.max_turns);
    }
    if (j.contains("zvc")) {
      reject_unknown(j.at("zvc"), {"resolution"}, "zvc.");
      read(j.at("zvc"), "resolution", c.zvc_resolution);
    }
    if (j.contains("compare")) {
      reject_unknown(j.at("compare"), {"grid"}, "compare.");
      read(j.at("compare"), "grid", c.compare_grid);
    }
    if (j.contains("profile")) {
      const json& p = j.at("profile");
      reject_unknown(p, {"d_min", "d_max", "samples"}, "profile.");
      read(p, "d_min", c.profile_d_min);
      read(p, "d_max", c.profile_d_max);
      read(p, "samples", c.profile_samples);
    }
    read(j, "out", c.out);
    read(j, "threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return c;
}

ManifoldOptions manifold_options(const RunConfig& cfg) {
  ManifoldOptions m;
  m.n_seeds = cfg.n_seeds;
  m.epsilon = cfg.epsilon;
  m.max_turns = cfg.max_turns;
  m.rtol = cfg.rtol;
  m.atol = cfg.atol;
  m.parallel = cfg.threads != 1;
  return m;
}

Lab setup_lab(const RunConfig& cfg, int closure_index) {
  cfg.validate();
  Lab lab;
  lab.params = SystemParams{cfg.mu};
  const LagrangePointSet lp = lagrange_points(lab.params);
  lab.block = cfg.block_a ? BlockSpec{*cfg.block_a, *cfg.block_b, false} : default_block(lab.params);
  double h_star = cfg.H_star.value_or(default_energy_cap(lab.params));
  const bool may_tighten = !cfg.H_star.has_value();
  if (!(h_star > lp.h(1) && h_star < lp.h(2))) throw Error(ErrorCode::OutOfRange, "H_star must lie in (H(L1), H(L2))");

  for (;;) {
    const double low = lp.h(1) + 1e-3 * (h_star - lp.h(1));
    std::string why;
    try {
      lab.validation = validate_block(lab.block, h_star, lab.params);
      validate_block(lab.block, low, lab.params);
      if (closure_index >= 0) {
        const LyapunovOrbit top = orbit_at_energy(h_star - 1e-3 * (h_star - lp.h(1)), lab.params);
        ManifoldOptions mo = manifold_options(cfg);
        mo.max_turns = std::max(mo.max_turns, closure_index + 1);
        const ManifoldBranch br = globalize(top, ManifoldKind::Stable, lab.block, lab.params, mo);
        cut(br, cfg.theta0, closure_index, lab.params);
      }
    } catch (const Error& e) {
      const bool fixable = e.code() == ErrorCode::NotIsolating || e.code() == ErrorCode::CutNotClosed;
      if (!may_tighten || !fixable || lab.tightenings >= 12) throw;
      h_star = lp.h(1) + 0.8 * (h_star - lp.h(1));
      ++lab.tightenings;
      continue;
    }
    break;
  }
  lab.block.validated = true;
  lab.geom = section_geometry(lab.block, h_star, lab.params);
  return lab;
}

std::vector<double> default_e0_grid() {
  std::vector<double> g;
  for (int i = 1; i < 100; ++i) g.push_back(0.01 * i);
  return g;
}

WsbQuery make_query(const RunConfig& cfg, const Lab& lab, E0Prescan* prescan) {
  WsbQuery q;
  q.theta0 = cfg.theta0;
  q.rdot0 = cfg.rdot0;
  q.n = cfg.n;
  q.grid_step = cfg.grid_step;
  q.delta_r = cfg.delta_r;
  if (cfg.r_lo) q.r_lo = *cfg.r_lo;
  if (cfg.r_hi) q.r_hi = *cfg.r_hi;
  q.rtol = cfg.rtol;
  q.atol = cfg.atol;
  q.parallel = cfg.threads != 1;
  if (cfg.e0) {
    q.e0 = *cfg.e0;
  } else {
    const E0Prescan pre = prescan_e0(q, lab.geom, lab.params, default_e0_grid());
    q.e0 = pre.e0;
    if (prescan) *prescan = pre;
  }
  q.validate(lab.geom);
  return q;
}

json manifest_json(const RunConfig& cfg, const Lab& lab, const std::string& command) {
  return json{
      {"command", command},
      {"version", kVersion},
      {"mu", lab.params.mu},
      {"a", lab.geom.a},
      {"b", lab.geom.b},
      {"H_star", lab.geom.H_star},
      {"D1", lab.geom.D1},
      {"y_b", lab.geom.y_b},
      {"theta1", lab.geom.theta1},
      {"validation", lab.block.validated ? "pass" : "fail"},
      {"samples", lab.validation.samples},
      {"H_star_tightenings", lab.tightenings},
      {"config", cfg.to_json()},
  };
}

json lagrange_json(const SystemParams& params) {
  const LagrangePointSet lp = lagrange_points(params);
  const L1Spectrum sp = l1_spectrum(params);
  json pts = json::array();
  for (int i = 1; i <= 5; ++i) {
    pts.push_back({{"name", "L" + std::to_string(i)}, {"x", lp.l(i).x}, {"y", lp.l(i).y}, {"H", lp.h(i)}});
  }
  return json{{"mu", params.mu},
              {"x_plus", lp.x_plus},
              {"quintic_residual", euler_quintic(lp.x_plus, params.mu)},
              {"points", pts},
              {"l1_spectrum", {{"lambda", sp.lambda}, {"nu", sp.nu}}},
              {"energy_chain_holds", lp.h(5) == lp.h(4) && lp.h(4) > lp.h(3) && lp.h(3) > lp.h(2) && lp.h(2) > lp.h(1)}};
}

json orbit_json(const LyapunovOrbit& o) {
  json mult = json::array();
  for (const auto& m : o.multipliers) mult.push_back({m.real(), m.imag()});
  return json{{"x0", o.initial.x},
              {"y0", o.initial.y},
              {"vx0", o.initial.vx},
              {"vy0", o.initial.vy},
              {"period", o.period},
              {"energy", o.energy},
              {"amplitude", o.amplitude},
              {"residual", o.residual},
              {"monodromy_determinant", o.monodromy_determinant},
              {"multipliers", mult},
              {"unstable_multiplier", o.unstable_multiplier},
              {"stable_multiplier", o.stable_multiplier},
              {"iterations", o.iterations}};
}

json comparison_json(const ComparisonReport& rep) {
  json pts = json::array();
  for (const auto& p : rep.points) {
    json e{{"r_star", p.r_star},
           {"H_star", p.H_star},
           {"cut_index", p.cut_index},
           {"r_cut", std::isnan(p.r_cut) ? json(nullptr) : json(p.r_cut)},
           {"distance", std::isfinite(p.distance) ? json(p.distance) : json(nullptr)},
           {"method", p.method}};
    if (!p.error.empty()) e["error"] = p.error;
    pts.push_back(e);
  }
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return json{{"points", pts}, {"max", num(rep.max_distance)}, {"mean", num(rep.mean_distance)}};
}

}  // namespace wsb
