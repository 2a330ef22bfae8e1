#include "wsb/manifolds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "wsb/dynamics.hpp"

namespace wsb {

const char* to_string(ManifoldKind k) { return k == ManifoldKind::Stable ? "stable" : "unstable"; }

const char* to_string(Location l) {
  switch (l) {
    case Location::Inside: return "inside";
    case Location::Outside: return "outside";
    case Location::OnCurve: return "on-curve";
  }
  return "?";
}

std::vector<ManifoldTrajectory> manifold_seeds(const LyapunovOrbit& orbit, ManifoldKind kind, int sign,
                                               double epsilon, const std::vector<double>& phases,
                                               const SystemParams& params) {
  const auto pts = orbit_points(orbit, phases, params);
  std::vector<ManifoldTrajectory> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec4& dir = kind == ManifoldKind::Stable ? pts[i].stable_direction : pts[i].unstable_direction;
    Vec4 v = pts[i].state.as_vector() + sign * epsilon * dir;
    RotatingState s = RotatingState::from(v);
    // Rescale the velocity back onto the orbit's energy level.
    const double v2 = s.vx * s.vx + s.vy * s.vy;
    const double target = 2.0 * (orbit.energy + effective_potential(s.x, s.y, params));
    if (v2 > 0.0 && target > 0.0) {
      const double k = std::sqrt(target / v2);
      s.vx *= k;
      s.vy *= k;
    }
    out[i].phase = phases[i];
    out[i].seed = s;
    out[i].seed_theta = std::atan2(s.y, s.x - params.mu);
    if (out[i].seed_theta < 0.0) out[i].seed_theta += kTwoPi;
  }
  return out;
}

void globalize_seed(ManifoldTrajectory& seed, ManifoldKind kind, const BlockSpec& block, int max_turns,
                    const ManifoldOptions& opt, const SystemParams& params) {
  PropagationOptions p;
  p.rtol = opt.rtol;
  p.atol = opt.atol;
  p.initial_theta = seed.seed_theta;
  p.throw_on_failure = false;
  const double theta_limit = kTwoPi * max_turns + 1.0;
  const double theta_seed = seed.seed_theta;
  const std::vector<EventSpec> events{
      EventSpec::x_plane(block.a, CrossingDirection::Any, EventAction::Terminate),
      EventSpec::custom([theta_seed, theta_limit](const RotatingState&, double th) {
        return std::abs(th - theta_seed) - theta_limit;
      }, CrossingDirection::Any, EventAction::Terminate),
  };
  const double duration = kind == ManifoldKind::Stable ? -opt.max_time : opt.max_time;
  try {
    seed.trajectory = propagate(seed.seed, duration, events, params, p);
  } catch (const std::exception& e) {
    seed.failed = true;
    seed.error = e.what();
  }
}

namespace {

std::vector<double> uniform_phases(int n) {
  std::vector<double> ph(n);
  for (int i = 0; i < n; ++i) ph[i] = static_cast<double>(i) / n;
  return ph;
}

void run_bundle(std::vector<ManifoldTrajectory>& bundle, ManifoldKind kind, const BlockSpec& block, int max_turns,
                const ManifoldOptions& opt, const SystemParams& params) {
  const long n = static_cast<long>(bundle.size());
  if (opt.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) globalize_seed(bundle[i], kind, block, max_turns, opt, params);
  } else {
    for (long i = 0; i < n; ++i) globalize_seed(bundle[i], kind, block, max_turns, opt, params);
  }
}

// Which plane the trajectory reaches first along its integration direction:
// +1 for x > b, -1 for x < a, 0 for neither.
int first_exit_side(const Trajectory& tr, const BlockSpec& block) {
  for (const auto& smp : tr.samples) {
    if (smp.state.x > block.b) return 1;
    if (smp.state.x < block.a) return -1;
  }
  if (tr.final_state.x > block.b) return 1;
  if (tr.final_state.x <= block.a + 1e-12) return -1;
  return 0;
}

}  // namespace

ManifoldBranch globalize(const LyapunovOrbit& orbit, ManifoldKind kind, const BlockSpec& block,
                         const SystemParams& params, const ManifoldOptions& opt) {
  if (!(orbit.unstable_multiplier > 1.0 + 1e-3)) {
    throw Error(ErrorCode::NonHyperbolic, "parent orbit is not hyperbolic");
  }
  if (opt.n_seeds < 4 || !(opt.epsilon > 0.0) || opt.max_turns < 1) {
    throw Error(ErrorCode::InvalidArgument, "bad manifold options");
  }
  ManifoldBranch br;
  br.orbit = orbit;
  br.kind = kind;
  br.epsilon = opt.epsilon;
  br.max_turns = opt.max_turns;
  br.block = block;
  br.options = opt;
  const Vec4& d0 = kind == ManifoldKind::Stable ? orbit.stable_direction : orbit.unstable_direction;
  br.sign = d0[0] >= 0.0 ? 1 : -1;
  br.bundle = manifold_seeds(orbit, kind, br.sign, opt.epsilon, uniform_phases(opt.n_seeds), params);
  run_bundle(br.bundle, kind, block, opt.max_turns, opt, params);

  int wrong = 0;
  for (const auto& tr : br.bundle) {
    if (!tr.failed && first_exit_side(tr.trajectory, block) < 0) ++wrong;
  }
  if (2 * wrong > static_cast<int>(br.bundle.size())) {
    std::ostringstream os;
    os << wrong << " of " << br.bundle.size() << " seeds leave toward the P2 region first";
    throw Error(ErrorCode::WrongBranch, os.str());
  }
  return br;
}

bool cut_crossing(const ManifoldTrajectory& traj, ManifoldKind kind, double theta0, int index,
                  const ManifoldOptions& opt, const SystemParams& params, CutPoint& out) {
  if (traj.failed) return false;
  const auto& smp = traj.trajectory.samples;
  const double sgn = kind == ManifoldKind::Stable ? -1.0 : 1.0;  // sign of theta - theta_seed along the run
  // Target angles theta0 + 2 pi k with accumulated angle in [2 pi i, 2 pi (i+1)).
  const double lo = traj.seed_theta + sgn * kTwoPi * index;
  const double hi = traj.seed_theta + sgn * kTwoPi * (index + 1);
  const double k_from = std::ceil((std::min(lo, hi) - theta0) / kTwoPi);
  const double k_to = std::floor((std::max(lo, hi) - theta0) / kTwoPi);
  for (std::size_t j = 0; j + 1 < smp.size(); ++j) {
    for (double k = k_from; k <= k_to; k += 1.0) {
      const double target = theta0 + kTwoPi * k;
      const double acc = sgn * (target - traj.seed_theta);
      if (acc < kTwoPi * index || acc >= kTwoPi * (index + 1)) continue;
      const double g0 = smp[j].theta - target;
      const double g1 = smp[j + 1].theta - target;
      if (!((g0 < 0.0 && g1 >= 0.0) || (g0 > 0.0 && g1 <= 0.0))) continue;
      // Re-integrate across the step to localize on the dense output.
      PropagationOptions p;
      p.rtol = opt.rtol;
      p.atol = opt.atol;
      p.t0 = smp[j].t;
      p.initial_theta = smp[j].theta;
      p.record_samples = false;
      p.throw_on_failure = false;
      const auto loc = propagate(
          smp[j].state, smp[j + 1].t - smp[j].t,
          {EventSpec::custom([target](const RotatingState&, double th) { return th - target; },
                             CrossingDirection::Increasing, EventAction::Terminate)},
          params, p);
      if (loc.events.empty()) continue;
      const EventRecord& ev = loc.events.front();
      const PolarState ps = polar_from_cartesian(ev.state, params);
      if (!(ps.thetadot > 0.0)) continue;
      out.phase = traj.phase;
      out.r = ps.r;
      out.rdot = ps.rdot;
      out.state = ev.state;
      out.t = ev.t;
      out.rate = ps.thetadot;
      return true;
    }
  }
  return false;
}

namespace {

double gap(const CutPoint& p, const CutPoint& q) { return std::hypot(p.r - q.r, p.rdot - q.rdot); }

struct Evaluated {
  double phase;
  bool hit;
  CutPoint point;
};

}  // namespace

bool cut_point_at_phase(const ManifoldBranch& branch, double phase, double theta0, int index,
                        const SystemParams& params, CutPoint& out) {
  auto seeds = manifold_seeds(branch.orbit, branch.kind, branch.sign, branch.epsilon, {phase}, params);
  globalize_seed(seeds[0], branch.kind, branch.block, branch.max_turns, branch.options, params);
  return cut_crossing(seeds[0], branch.kind, theta0, index, branch.options, params, out);
}

ManifoldCut cut(const ManifoldBranch& branch, double theta0, int index, const SystemParams& params,
                const CutOptions& copt) {
  if (index < 0 || index >= branch.max_turns) {
    std::ostringstream os;
    os << "cut index " << index << " needs a branch globalized for " << index + 1 << " turns, have "
       << branch.max_turns;
    throw Error(ErrorCode::CutNotReached, os.str());
  }
  std::vector<Evaluated> ev(branch.bundle.size());
  const long n = static_cast<long>(branch.bundle.size());
  auto eval_one = [&](long i) {
    ev[i].phase = branch.bundle[i].phase;
    ev[i].hit = cut_crossing(branch.bundle[i], branch.kind, theta0, index, branch.options, params, ev[i].point);
  };
  if (branch.options.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) eval_one(i);
  } else {
    for (long i = 0; i < n; ++i) eval_one(i);
  }

  ManifoldCut c;
  c.theta0 = theta0;
  c.index = index;
  c.energy = branch.orbit.energy;
  const long hits = std::count_if(ev.begin(), ev.end(), [](const Evaluated& e) { return e.hit; });
  if (hits == 0) {
    throw Error(ErrorCode::CutNotReached, "no manifold trajectory reaches the requested cut");
  }
  if (hits < n) {
    std::ostringstream os;
    os << (n - hits) << " of " << n << " seeds miss cut " << index << " (curve is not a closed circle)";
    throw Error(ErrorCode::CutNotClosed, os.str());
  }

  // Insert midpoint seeds where neighbouring points are far apart.
  for (int round = 0; round < copt.max_rounds; ++round) {
    std::vector<double> mids;
    for (std::size_t i = 0; i < ev.size(); ++i) {
      const Evaluated& a = ev[i];
      const Evaluated& b = ev[(i + 1) % ev.size()];
      const double pb = i + 1 == ev.size() ? b.phase + 1.0 : b.phase;
      if (pb - a.phase > copt.min_phase_step && gap(a.point, b.point) > copt.max_gap) {
        mids.push_back(std::fmod(0.5 * (a.phase + pb), 1.0));
      }
    }
    if (mids.empty()) break;
    ++c.refinements;
    std::sort(mids.begin(), mids.end());
    auto seeds = manifold_seeds(branch.orbit, branch.kind, branch.sign, branch.epsilon, mids, params);
    std::vector<Evaluated> extra(seeds.size());
    const long m = static_cast<long>(seeds.size());
    auto eval_extra = [&](long i) {
      globalize_seed(seeds[i], branch.kind, branch.block, branch.max_turns, branch.options, params);
      extra[i].phase = seeds[i].phase;
      extra[i].hit = cut_crossing(seeds[i], branch.kind, theta0, index, branch.options, params, extra[i].point);
    };
    if (branch.options.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
      for (long i = 0; i < m; ++i) eval_extra(i);
    } else {
      for (long i = 0; i < m; ++i) eval_extra(i);
    }
    for (const auto& e : extra) {
      if (!e.hit) {
        std::ostringstream os;
        os.precision(12);
        os << "refinement seed at phase " << e.phase << " misses cut " << index;
        throw Error(ErrorCode::CutNotClosed, os.str());
      }
    }
    ev.insert(ev.end(), extra.begin(), extra.end());
    std::sort(ev.begin(), ev.end(), [](const Evaluated& a, const Evaluated& b) { return a.phase < b.phase; });
  }

  c.points.reserve(ev.size() + 1);
  for (const auto& e : ev) c.points.push_back(e.point);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    c.max_gap = std::max(c.max_gap, gap(ev[i].point, ev[(i + 1) % ev.size()].point));
  }
  c.points.push_back(c.points.front());
  c.closed = c.max_gap <= copt.max_gap;
  if (!c.closed) {
    std::ostringstream os;
    os << "largest gap " << c.max_gap << " after refinement";
    throw Error(ErrorCode::CutNotClosed, os.str());
  }
  return c;
}

std::vector<CutPoint> cut_line_intersections(const ManifoldBranch& branch, const ManifoldCut& c, double rdot0,
                                             const SystemParams& params, double tol) {
  std::vector<CutPoint> out;
  if (c.points.size() < 2) return out;
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
    const CutPoint& p = c.points[i];
    const CutPoint& q = c.points[i + 1];
    const double fp = p.rdot - rdot0;
    const double fq = q.rdot - rdot0;
    if (fp == 0.0) {
      out.push_back(p);
      continue;
    }
    if (!((fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0))) continue;
    double lo = p.phase;
    double hi = q.phase <= p.phase ? q.phase + 1.0 : q.phase;
    CutPoint best = std::abs(fp) < std::abs(fq) ? p : q;
    bool ok = true;
    auto f = [&](double s) {
      CutPoint cp;
      if (!cut_point_at_phase(branch, std::fmod(s, 1.0), c.theta0, c.index, params, cp)) {
        ok = false;
        return 0.0;
      }
      const double v = cp.rdot - rdot0;
      if (std::abs(v) < std::abs(best.rdot - rdot0)) best = cp;
      return v;
    };
    std::uintmax_t iters = 100;
    try {
      boost::math::tools::toms748_solve(
          f, lo, hi, fp, fq,
          [&](double a, double b) { return std::abs(best.rdot - rdot0) < tol || std::abs(b - a) < 1e-15; }, iters);
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) throw Error(ErrorCode::CutNotClosed, "seed lost the cut during line intersection refinement");
    best.phase = std::fmod(best.phase, 1.0);
    out.push_back(best);
  }
  std::sort(out.begin(), out.end(), [](const CutPoint& a, const CutPoint& b) { return a.r < b.r; });
  return out;
}

namespace {

struct Box {
  double r0, r1, v0, v1;
};

Box bounding_box(const ManifoldCut& c) {
  Box b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
        std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const auto& p : c.points) {
    b.r0 = std::min(b.r0, p.r);
    b.r1 = std::max(b.r1, p.r);
    b.v0 = std::min(b.v0, p.rdot);
    b.v1 = std::max(b.v1, p.rdot);
  }
  return b;
}

double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax;
  const double dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

}  // namespace

Location point_location(const ManifoldCut& c, double r, double rdot, double band) {
  if (!c.closed || c.points.size() < 4) throw Error(ErrorCode::CutNotClosed, "point location needs a closed cut");
  const Box b = bounding_box(c);
  const double sr = std::max(b.r1 - b.r0, 1e-300);
  const double sv = std::max(b.v1 - b.v0, 1e-300);
  const double u = (r - b.r0) / sr;
  const double w = (rdot - b.v0) / sv;
  bool inside = false;
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
    const double ua = (c.points[i].r - b.r0) / sr, wa = (c.points[i].rdot - b.v0) / sv;
    const double ub = (c.points[i + 1].r - b.r0) / sr, wb = (c.points[i + 1].rdot - b.v0) / sv;
    dmin = std::min(dmin, segment_distance(u, w, ua, wa, ub, wb));
    if ((wa > w) != (wb > w)) {
      const double ux = ua + (w - wa) * (ub - ua) / (wb - wa);
      if (u < ux) inside = !inside;
    }
  }
  if (dmin < band) return Location::OnCurve;
  return inside ? Location::Inside : Location::Outside;
}

double distance_to_cut(const ManifoldCut& c, double r, double rdot) {
  double dmin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
    dmin = std::min(dmin, segment_distance(r, rdot, c.points[i].r, c.points[i].rdot, c.points[i + 1].r,
                                           c.points[i + 1].rdot));
  }
  if (c.points.size() == 1) dmin = std::hypot(r - c.points[0].r, rdot - c.points[0].rdot);
  return dmin;
}

namespace {

double orient(double ax, double ay, double bx, double by, double cx, double cy) {
  return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
}

bool segments_cross(const CutPoint& a, const CutPoint& b, const CutPoint& c, const CutPoint& d) {
  const double o1 = orient(a.r, a.rdot, b.r, b.rdot, c.r, c.rdot);
  const double o2 = orient(a.r, a.rdot, b.r, b.rdot, d.r, d.rdot);
  const double o3 = orient(c.r, c.rdot, d.r, d.rdot, a.r, a.rdot);
  const double o4 = orient(c.r, c.rdot, d.r, d.rdot, b.r, b.rdot);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

}  // namespace

bool is_simple(const ManifoldCut& c) {
  const std::size_t m = c.points.size() < 2 ? 0 : c.points.size() - 1;  // segment count
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;  // closing segments share a vertex
      if (segments_cross(c.points[i], c.points[i + 1], c.points[j], c.points[j + 1])) return false;
    }
  }
  return true;
}

void write_cut_csv(std::ostream& os, const ManifoldCut& c, const SystemParams& params) {
  const auto old_flags = os.flags();
  const auto old_prec = os.precision();
  os << std::setprecision(10);
  os << "mu,H,theta0,cut_index\n";
  os << params.mu << ',' << c.energy << ',' << c.theta0 << ',' << c.index << '\n';
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    os << i << ',' << c.points[i].r << ',' << c.points[i].rdot << '\n';
  }
  os.flags(old_flags);
  os.precision(old_prec);
}

LoadedCut read_cut_csv(std::istream& is) {
  LoadedCut out;
  std::string line;
  if (!std::getline(is, line) || line.rfind("mu,H,theta0,cut_index", 0) != 0) {
    throw Error(ErrorCode::InvalidArgument, "cut CSV header missing");
  }
  if (!std::getline(is, line)) throw Error(ErrorCode::InvalidArgument, "cut CSV metadata row missing");
  {
    std::istringstream ls(line);
    char comma;
    ls >> out.mu >> comma >> out.cut.energy >> comma >> out.cut.theta0 >> comma >> out.cut.index;
    if (!ls) throw Error(ErrorCode::InvalidArgument, "bad cut CSV metadata row");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    long idx;
    CutPoint p;
    char comma;
    ls >> idx >> comma >> p.r >> comma >> p.rdot;
    if (!ls) throw Error(ErrorCode::InvalidArgument, "bad cut CSV row: " + line);
    out.cut.points.push_back(p);
  }
  const auto& pts = out.cut.points;
  out.cut.closed = pts.size() >= 4 && std::hypot(pts.front().r - pts.back().r, pts.front().rdot - pts.back().rdot) < 1e-6;
  return out;
}

}  // namespace wsb
