// wsb_lab: batch front end. Precedence: built-in defaults < --config < flags.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "wsb/equilibria.hpp"
#include "wsb/lab.hpp"
#include "wsb/lyapunov.hpp"
#include "wsb/manifolds.hpp"
#include "wsb/wsb.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace wsb;

namespace {

/// Numbers in emitted results carry 10 significant digits.
void round10(json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isfinite(v)) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.10g", v);
      j = std::strtod(buf, nullptr);
    }
  } else if (j.is_structured()) {
    for (auto& el : j) round10(el);
  }
}

void write_json(const fs::path& p, json j, bool round = true) {
  if (round) round10(j);
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::ConfigError, "cannot write " + p.string());
  os << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::ConfigError, "cannot write " + p.string());
  os << std::setprecision(10);
  return os;
}

void write_manifest(const RunConfig& cfg, const Lab& lab, const std::string& cmd) {
  json m = manifest_json(cfg, lab, cmd);
  json config = m["config"];
  m.erase("config");
  round10(m);
  m["config"] = config;  // verbatim, so a rerun from the manifest is exact
  write_json(fs::path(cfg.out) / "manifest.json", m, false);
}

double energy_or_default(const RunConfig& cfg, const SystemParams& p) {
  return cfg.energy.value_or(lagrange_points(p).h(1) + 5e-4);
}

WsbQuery query_for(const RunConfig& cfg, const Lab& lab, json& info) {
  E0Prescan pre;
  WsbQuery q = make_query(cfg, lab, &pre);
  if (!cfg.e0) {
    json c = json::array();
    for (const auto& e : pre.candidates) {
      if (e.brackets > 0) c.push_back({{"e0", e.e0}, {"brackets", e.brackets}, {"range_width", e.range_width}});
    }
    info["e0_prescan"] = {{"chosen", pre.e0}, {"candidates", c}};
    spdlog::info("e0 pre-scan chose {}", pre.e0);
  }
  info["e0"] = q.e0;
  return q;
}

void cmd_lagrange(const RunConfig& cfg, const Lab& lab) {
  write_json(fs::path(cfg.out) / "lagrange.json", lagrange_json(lab.params));
}

void cmd_zvc(const RunConfig& cfg, const Lab& lab) {
  const double H = energy_or_default(cfg, lab.params);
  const auto comps = zvc_components(zero_velocity_curve(H, lab.params, cfg.zvc_resolution));
  auto os = open_out(fs::path(cfg.out) / "zvc.csv");
  os << "component,x0,y0,x1,y1\n";
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (const auto& s : comps[c]) os << c << ',' << s.x0 << ',' << s.y0 << ',' << s.x1 << ',' << s.y1 << '\n';
  }
  spdlog::info("zvc at H={}: {} components", H, comps.size());
}

void cmd_lyapunov(const RunConfig& cfg, const Lab& lab) {
  const double H = energy_or_default(cfg, lab.params);
  const LyapunovOrbit o = orbit_at_energy(H, lab.params);
  write_json(fs::path(cfg.out) / "lyapunov.json", orbit_json(o));
}

ManifoldBranch branch_for(const RunConfig& cfg, const Lab& lab, double H, int min_turns) {
  const LyapunovOrbit o = orbit_at_energy(H, lab.params, lab.geom.H_star);
  ManifoldOptions mo = manifold_options(cfg);
  mo.max_turns = std::max(mo.max_turns, min_turns);
  return globalize(o, ManifoldKind::Stable, lab.block, lab.params, mo);
}

void cmd_manifold(const RunConfig& cfg, const Lab& lab) {
  const double H = energy_or_default(cfg, lab.params);
  const ManifoldBranch br = branch_for(cfg, lab, H, 1);
  int failed = 0, exited = 0, turned = 0, timed_out = 0;
  auto os = open_out(fs::path(cfg.out) / "manifold.csv");
  os << "seed,phase,t,x,y,vx,vy,theta\n";
  for (std::size_t i = 0; i < br.bundle.size(); ++i) {
    const auto& tr = br.bundle[i];
    if (tr.failed) {
      ++failed;
      continue;
    }
    const Trajectory& t = tr.trajectory;
    if (t.termination == Termination::TerminalEvent) {
      (t.terminal_event == 0 ? exited : turned) += 1;
    } else {
      ++timed_out;
    }
    for (const auto& s : t.samples) {
      os << i << ',' << tr.phase << ',' << s.t << ',' << s.state.x << ',' << s.state.y << ',' << s.state.vx << ','
         << s.state.vy << ',' << s.theta << '\n';
    }
  }
  json j{{"kind", to_string(br.kind)},
         {"energy", H},
         {"epsilon", br.epsilon},
         {"sign", br.sign},
         {"max_turns", br.max_turns},
         {"n_seeds", br.bundle.size()},
         {"failed", failed},
         {"exited_block", exited},
         {"turn_limit", turned},
         {"time_limit", timed_out},
         {"orbit", orbit_json(br.orbit)}};
  write_json(fs::path(cfg.out) / "manifold.json", j);
}

void cmd_cut(const RunConfig& cfg, const Lab& lab) {
  const double H = energy_or_default(cfg, lab.params);
  const ManifoldBranch br = branch_for(cfg, lab, H, cfg.cut_index + 1);
  const ManifoldCut c = cut(br, cfg.theta0, cfg.cut_index, lab.params);
  auto os = open_out(fs::path(cfg.out) / "cut.csv");
  write_cut_csv(os, c, lab.params);
  spdlog::info("cut {} at H={}: {} points, max gap {}", cfg.cut_index, H, c.points.size(), c.max_gap);
}

void cmd_wsb(const RunConfig& cfg, const Lab& lab) {
  json info;
  const WsbQuery q = query_for(cfg, lab, info);
  StableScan scan;
  const auto pts = wsb_points(q, lab.geom, lab.params, &scan);
  auto os = open_out(fs::path(cfg.out) / "wsb.csv");
  write_wsb_csv(os, pts, q, lab.params);
  json iv = json::array();
  for (const auto& i : scan.stable_intervals) iv.push_back({i.lo, i.hi});
  info["stable_intervals"] = iv;
  info["points"] = pts.size();
  info["scan_samples"] = scan.samples.size();
  write_json(fs::path(cfg.out) / "wsb.json", info);
}

void cmd_compare(const RunConfig& cfg, const Lab& lab) {
  json info;
  const WsbQuery q = query_for(cfg, lab, info);
  const auto pts = wsb_points(q, lab.geom, lab.params);
  CompareOptions co;
  co.grid_size = cfg.compare_grid;
  co.manifold = manifold_options(cfg);
  const ComparisonReport rep = compare_with_manifold(pts, q, lab.geom, lab.block, lab.params, co);
  CompareOptions neg = co;
  neg.index_shift = 1;
  const ComparisonReport ctl = compare_with_manifold(pts, q, lab.geom, lab.block, lab.params, neg);
  const auto roots = locus_intersections(q.n - 1, q, lab.geom, lab.block, lab.params, co);

  // Symmetric distance between the WSB points and the cut locus on the line.
  double to_locus = 0.0, to_points = 0.0;
  for (const auto& p : pts) {
    double d = std::numeric_limits<double>::infinity();
    for (double r : roots) d = std::min(d, std::abs(r - p.r_star));
    to_locus = std::max(to_locus, d);
  }
  for (double r : roots) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) d = std::min(d, std::abs(r - p.r_star));
    to_points = std::max(to_points, d);
  }
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j = comparison_json(rep);
  j["e0"] = info["e0"];
  if (info.contains("e0_prescan")) j["e0_prescan"] = info["e0_prescan"];
  j["n"] = q.n;
  j["tolerance"] = co.tolerance;
  j["negative_control"] = comparison_json(ctl);
  j["locus"] = {{"roots", roots}, {"max_point_to_locus", num(to_locus)}, {"max_locus_to_point", num(to_points)}};
  write_json(fs::path(cfg.out) / "compare.json", j);
}

void cmd_profile(const RunConfig& cfg, const Lab& lab) {
  json info;
  const WsbQuery q = query_for(cfg, lab, info);
  const auto pts = wsb_points(q, lab.geom, lab.params);
  auto os = open_out(fs::path(cfg.out) / "profile.csv");
  os << "point,r_star,r0,distance,stable,order,return_time\n";
  // The bracket is narrowed well below d_min so the smallest offsets stay on their side.
  WsbQuery fine = q;
  fine.delta_r = std::min(q.delta_r, 0.01 * cfg.profile_d_min);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const WsbPoint p = refine_boundary(pts[i].r_stable, pts[i].r_unstable, fine, lab.geom, lab.params);
    const auto prof =
        return_time_profile(p, q, lab.geom, lab.params, cfg.profile_d_min, cfg.profile_d_max, cfg.profile_samples);
    for (const auto& s : prof) {
      os << i << ',' << p.r_star << ',' << s.r0 << ',' << s.distance << ',' << (s.stable ? 1 : 0) << ','
         << s.order << ',';
      if (std::isfinite(s.return_time)) os << s.return_time;
      os << '\n';
    }
  }
}

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::ConfigError, "cannot read config " + path);
  try {
    json j = json::parse(is);
    // A manifest is accepted as a config: its embedded config is used.
    if (j.is_object() && j.contains("config") && j.contains("command")) return j.at("config");
    return j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

int report_error(const std::string& code, const std::string& message, const std::string& out) {
  const json e{{"error", code}, {"message", message}};
  std::cerr << e.dump() << '\n';
  if (!out.empty() && fs::is_directory(out)) {
    std::ofstream os(fs::path(out) / "error.json");
    os << e.dump(2) << '\n';
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("wsb_lab");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("WSB_LAB_LOG")) spdlog::set_level(spdlog::level::from_str(lvl));

  CLI::App app{"Weak stability boundary lab for the planar circular restricted three-body problem"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::optional<double> mu, energy, theta0;
  std::optional<int> order, index, threads;
  std::optional<std::string> out;
  app.add_option("--config", config_path, "JSON run configuration (or a previous manifest.json)");
  app.add_option("--mu", mu, "mass ratio");
  app.add_option("--energy", energy, "energy H for zvc, lyapunov, manifold and cut");
  app.add_option("--theta0", theta0, "section angle about P1");
  app.add_option("--order", order, "stability order n");
  app.add_option("--index", index, "cut index for the cut command");
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads; 1 selects the serial path");

  struct Cmd {
    const char* name;
    const char* help;
    void (*fn)(const RunConfig&, const Lab&);
  };
  const Cmd cmds[] = {
      {"lagrange", "Lagrange point table", cmd_lagrange},
      {"zvc", "zero-velocity curve at --energy", cmd_zvc},
      {"lyapunov", "Lyapunov orbit at --energy", cmd_lyapunov},
      {"manifold", "stable manifold branch at --energy", cmd_manifold},
      {"cut", "stable manifold cut at --energy and --index", cmd_cut},
      {"wsb", "WSB points along the query line", cmd_wsb},
      {"compare", "WSB points against stable manifold cuts", cmd_compare},
      {"profile", "return time profile near each WSB point", cmd_profile},
  };
  for (const auto& c : cmds) app.add_subcommand(c.name, c.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const Cmd* cmd = nullptr;
  for (const auto& c : cmds) {
    if (app.got_subcommand(c.name)) cmd = &c;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = RunConfig::from_json(load_json(config_path));
    if (mu) cfg.mu = *mu;
    if (energy) cfg.energy = *energy;
    if (theta0) cfg.theta0 = *theta0;
    if (order) cfg.n = *order;
    if (index) cfg.cut_index = *index;
    if (out) cfg.out = *out;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    fs::create_directories(cfg.out);
    if (cfg.threads > 0) omp_set_num_threads(cfg.threads);

    // The Lagrange table does not depend on the block; a block that fails
    // to isolate is recorded in the manifest instead of aborting.
    Lab lab;
    if (cmd->fn == cmd_lagrange) {
      try {
        lab = setup_lab(cfg);
      } catch (const Error& e) {
        lab.params = SystemParams{cfg.mu};
        lab.params.validate();
        lab.block = cfg.block_a ? BlockSpec{*cfg.block_a, *cfg.block_b, false} : default_block(lab.params);
        lab.geom.a = lab.block.a;
        lab.geom.b = lab.block.b;
        lab.geom.H_star = cfg.H_star.value_or(std::nan(""));
        lab.geom.y_b = lab.geom.theta1 = lab.geom.D1 = std::nan("");
        spdlog::warn("block setup failed: {}", e.what());
      }
    } else {
      lab = setup_lab(cfg);
    }
    spdlog::info("{}: mu={} H_star={} block=[{}, {}]", cmd->name, lab.params.mu, lab.geom.H_star, lab.geom.a,
                 lab.geom.b);
    cmd->fn(cfg, lab);
    write_manifest(cfg, lab, cmd->name);
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), cfg.out);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), cfg.out);
  }
  return 0;
}
