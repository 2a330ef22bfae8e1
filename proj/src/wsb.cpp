#include "wsb/wsb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "wsb/equilibria.hpp"
#include "wsb/lyapunov.hpp"

namespace wsb {

void WsbQuery::validate(const SectionGeometry& geom) const {
  if (!geom.admissible_angle(theta0)) {
    throw Error(ErrorCode::OutOfRange, "theta0 lies in the block sector [pi - theta1, pi + theta1]");
  }
  if (!(e0 >= 0.0 && e0 < 1.0)) throw Error(ErrorCode::InvalidArgument, "e0 must lie in [0, 1)");
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "stability order must be at least 1");
  if (!(grid_step > 0.0) || !(delta_r > 0.0) || !(turn_budget > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "grid step, delta_r and turn budget must be positive");
  }
  if (!std::isnan(r_lo) && !std::isnan(r_hi) && !(r_lo < r_hi)) {
    throw Error(ErrorCode::InvalidArgument, "scan window must satisfy r_lo < r_hi");
  }
}

namespace {

// Energy of the start state, NaN when no admissible ellipse exists.
double start_energy(double r0, const WsbQuery& q, const SystemParams& params) {
  try {
    return state_from_wsb_coords(r0, q.rdot0, q.theta0, q.e0, params, q.root).energy;
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

AdmissibleRange admissible_range(const WsbQuery& q, const SectionGeometry& geom, const SystemParams& params) {
  q.validate(geom);
  const double h_lo = lagrange_points(params).h(1);
  const double h_hi = geom.H_star;
  const double r_first = std::isnan(q.r_lo) ? params.r_min * 1.01 : std::max(q.r_lo, params.r_min * 1.01);
  const double r_last = std::isnan(q.r_hi) ? geom.D1 : std::min(q.r_hi, geom.D1);
  auto inband = [&](double h) { return !std::isnan(h) && h > h_lo && h < h_hi; };

  // Locate the edge between r_in (in band) and r_out (not) to full precision.
  auto edge = [&](double r_in, double r_out) {
    const double h_out = start_energy(r_out, q, params);
    if (!std::isnan(h_out)) {
      const double bound = h_out <= h_lo ? h_lo : h_hi;
      auto f = [&](double r) {
        const double h = start_energy(r, q, params);
        return std::isnan(h) ? (bound == h_lo ? -1.0 : 1.0) : h - bound;
      };
      std::uintmax_t it = 200;
      const double a = std::min(r_in, r_out), b = std::max(r_in, r_out);
      const auto res = boost::math::tools::toms748_solve(f, a, b, boost::math::tools::eps_tolerance<double>(50), it);
      // Step to the in-band side of the bracket.
      return r_in < r_out ? res.first : res.second;
    }
    double a = r_in, b = r_out;
    for (int i = 0; i < 200 && std::abs(b - a) > 4e-16 * std::abs(a); ++i) {
      const double m = 0.5 * (a + b);
      (inband(start_energy(m, q, params)) ? a : b) = m;
    }
    return a;
  };

  const int n = 4000;
  AdmissibleRange out;
  double prev_r = r_first;
  bool prev_in = inband(start_energy(prev_r, q, params));
  double open_at = prev_in ? r_first : 0.0;
  for (int i = 1; i <= n; ++i) {
    const double r = r_first + (r_last - r_first) * i / n * (i == n ? 1.0 - 1e-12 : 1.0);
    const bool in = inband(start_energy(r, q, params));
    if (in && !prev_in) open_at = edge(r, prev_r);
    if (!in && prev_in) out.intervals.push_back({open_at, edge(prev_r, r)});
    prev_in = in;
    prev_r = r;
  }
  if (prev_in) out.intervals.push_back({open_at, prev_r});
  out.intervals.erase(std::remove_if(out.intervals.begin(), out.intervals.end(),
                                     [](const Interval& iv) { return !(iv.hi > iv.lo); }),
                      out.intervals.end());
  if (out.intervals.empty()) {
    std::ostringstream os;
    os << "no r0 gives an energy in (H(L1), H_star) for rdot0 = " << q.rdot0 << ", e0 = " << q.e0;
    throw Error(ErrorCode::EmptyRange, os.str());
  }
  return out;
}

const char* to_string(Failure f) {
  switch (f) {
    case Failure::None: return "none";
    case Failure::DistanceExceeded: return "distance-exceeded";
    case Failure::Nontransverse: return "nontransverse-crossing";
    case Failure::Collision: return "collision";
    case Failure::BudgetExhausted: return "budget-exhausted";
    case Failure::Inadmissible: return "inadmissible";
    case Failure::IntegrationError: return "integration-error";
  }
  return "?";
}

StabilityVerdict classify_state(const RotatingState& s0, int n, const WsbQuery& q, const SectionGeometry& geom,
                                const SystemParams& params) {
  StabilityVerdict v;
  v.energy = hamiltonian(s0, params);
  const double theta_start = q.theta0;
  const double last_level = theta_start + kTwoPi * n;
  PropagationOptions p;
  p.rtol = q.rtol;
  p.atol = q.atol;
  p.initial_theta = theta_start;
  p.throw_on_failure = false;
  p.record_samples = false;
  const std::vector<EventSpec> events{
      EventSpec::radius(geom.D1, CrossingDirection::Increasing, EventAction::Terminate),
      EventSpec::angle(q.theta0, CrossingDirection::Any, EventAction::Record),
      EventSpec::custom([last_level](const RotatingState&, double th) { return th - last_level; },
                        CrossingDirection::Increasing, EventAction::Terminate),
  };
  Trajectory tr;
  try {
    tr = propagate(s0, q.turn_budget * n, events, params, p);
  } catch (const std::exception& e) {
    v.failure = Failure::IntegrationError;
    v.detail = e.what();
    return v;
  }
  v.t_end = tr.t_final;
  for (const EventRecord& ev : tr.events) {
    if (ev.event_id != 1) continue;
    v.min_crossing_rate = std::min(v.min_crossing_rate, std::abs(ev.rate));
    if (std::abs(ev.rate) < q.transversality_floor) {
      v.failure = Failure::Nontransverse;
      std::ostringstream os;
      os << "half-line crossing at t = " << ev.t << " with rate " << ev.rate;
      v.detail = os.str();
      return v;
    }
    const double level = theta_start + kTwoPi * (v.stable_order + 1);
    if (ev.rate > 0.0 && std::abs(ev.theta - level) < 1e-6) {
      const PolarState ps = polar_from_cartesian(ev.state, params);
      v.turns.push_back({ev.t, ps.r, ps.rdot, ev.theta, ev.rate});
      ++v.stable_order;
    }
  }
  switch (tr.termination) {
    case Termination::TerminalEvent:
      if (tr.terminal_event == 0) {
        v.failure = Failure::DistanceExceeded;
      } else if (v.stable_order < n) {
        // The level was reached without a localized half-line record (the
        // two roots coincide); the terminal state is the n-th return.
        const PolarState ps = polar_from_cartesian(tr.final_state, params);
        v.turns.push_back({tr.t_final, ps.r, ps.rdot, tr.final_theta, ps.thetadot});
        v.stable_order = n;
      }
      break;
    case Termination::TimeReached: v.failure = Failure::BudgetExhausted; break;
    case Termination::Collision: v.failure = Failure::Collision; break;
    case Termination::StepFailure: v.failure = Failure::IntegrationError; break;
  }
  v.stable_order = std::min(v.stable_order, n);
  return v;
}

StabilityVerdict classify_stability(double r0, const WsbQuery& q, const SectionGeometry& geom,
                                    const SystemParams& params) {
  StabilityVerdict v;
  WsbStart start;
  try {
    start = state_from_wsb_coords(r0, q.rdot0, q.theta0, q.e0, params, q.root);
  } catch (const Error& e) {
    v.failure = Failure::Inadmissible;
    v.detail = e.what();
    return v;
  }
  const double h_lo = lagrange_points(params).h(1);
  if (!(start.energy > h_lo && start.energy < geom.H_star) || !(r0 < geom.D1)) {
    v.failure = Failure::Inadmissible;
    v.energy = start.energy;
    v.detail = "start energy outside (H(L1), H_star)";
    return v;
  }
  return classify_state(start.state, q.n, q, geom, params);
}

StableScan stable_set_scan(const WsbQuery& q, const SectionGeometry& geom, const SystemParams& params) {
  const AdmissibleRange range = admissible_range(q, geom, params);
  StableScan scan;
  std::vector<std::size_t> group_start;
  for (const Interval& iv : range.intervals) {
    const int m = std::max(1, static_cast<int>(std::ceil((iv.hi - iv.lo) / q.grid_step)));
    const double h = (iv.hi - iv.lo) / m;
    group_start.push_back(scan.samples.size());
    for (int k = 0; k < m; ++k) scan.samples.push_back({iv.lo + (k + 0.5) * h, 0, Failure::None});
  }
  group_start.push_back(scan.samples.size());

  const long total = static_cast<long>(scan.samples.size());
  auto run = [&](long i) {
    const StabilityVerdict v = classify_stability(scan.samples[i].r, q, geom, params);
    scan.samples[i].order = v.stable_order;
    scan.samples[i].failure = v.failure;
  };
  if (q.parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (long i = 0; i < total; ++i) run(i);
  } else {
    for (long i = 0; i < total; ++i) run(i);
  }

  for (std::size_t g = 0; g + 1 < group_start.size(); ++g) {
    bool open = false;
    Interval cur;
    for (std::size_t i = group_start[g]; i < group_start[g + 1]; ++i) {
      const ScanSample& s = scan.samples[i];
      const bool st = s.order >= q.n;
      if (st && !open) {
        open = true;
        cur.lo = s.r;
      }
      if (st) cur.hi = s.r;
      if (!st && open) {
        scan.stable_intervals.push_back(cur);
        open = false;
      }
      if (i > group_start[g]) {
        const ScanSample& prev = scan.samples[i - 1];
        const bool pst = prev.order >= q.n;
        if (pst != st) scan.brackets.emplace_back(pst ? prev.r : s.r, pst ? s.r : prev.r);
      }
    }
    if (open) scan.stable_intervals.push_back(cur);
  }
  return scan;
}

WsbPoint refine_boundary(double r_stable, double r_unstable, const WsbQuery& q, const SectionGeometry& geom,
                         const SystemParams& params) {
  const StabilityVerdict vs = classify_stability(r_stable, q, geom, params);
  StabilityVerdict vu = classify_stability(r_unstable, q, geom, params);
  if (!vs.stable(q.n) || vu.stable(q.n) || vu.failure == Failure::Inadmissible) {
    std::ostringstream os;
    os.precision(12);
    os << "bracket (" << r_stable << ", " << r_unstable << ") does not separate stable from unstable";
    throw Error(ErrorCode::BracketInvalid, os.str());
  }
  double rs = r_stable, ru = r_unstable;
  while (std::abs(rs - ru) > q.delta_r) {
    const double m = 0.5 * (rs + ru);
    if (m == rs || m == ru) break;
    const StabilityVerdict vm = classify_stability(m, q, geom, params);
    if (vm.stable(q.n)) {
      rs = m;
    } else {
      ru = m;
      vu = vm;
    }
  }
  WsbPoint p;
  p.r_stable = rs;
  p.r_unstable = ru;
  p.r_star = 0.5 * (rs + ru);
  p.H_star = start_energy(p.r_star, q, params);
  p.side = rs < ru ? "upper" : "lower";
  p.unstable_order = vu.stable_order;
  p.unstable_failure = vu.failure;
  return p;
}

std::vector<WsbPoint> wsb_points(const WsbQuery& q, const SectionGeometry& geom, const SystemParams& params,
                                 StableScan* scan_out) {
  StableScan scan = stable_set_scan(q, geom, params);
  std::vector<WsbPoint> pts(scan.brackets.size());
  std::vector<std::string> errors(pts.size());
  const long nb = static_cast<long>(pts.size());
  auto run = [&](long i) {
    try {
      pts[i] = refine_boundary(scan.brackets[i].first, scan.brackets[i].second, q, geom, params);
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  };
  if (q.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < nb; ++i) run(i);
  } else {
    for (long i = 0; i < nb; ++i) run(i);
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(ErrorCode::BracketInvalid, e);
  }
  std::sort(pts.begin(), pts.end(), [](const WsbPoint& a, const WsbPoint& b) { return a.r_star < b.r_star; });
  if (scan_out) *scan_out = std::move(scan);
  return pts;
}

std::vector<double> cut_radii_on_line(double energy, int index, double rdot0, double theta0, const BlockSpec& block,
                                      const SystemParams& params, const ManifoldOptions& mopt,
                                      const CutOptions& copt, ManifoldCut* cut_out) {
  const LyapunovOrbit orbit = orbit_at_energy(energy, params);
  ManifoldOptions mo = mopt;
  mo.max_turns = std::max(mo.max_turns, index + 1);
  const ManifoldBranch br = globalize(orbit, ManifoldKind::Stable, block, params, mo);
  const ManifoldCut c = cut(br, theta0, index, params, copt);
  std::vector<double> radii;
  for (const CutPoint& p : cut_line_intersections(br, c, rdot0, params)) radii.push_back(p.r);
  if (cut_out) *cut_out = c;
  return radii;
}

namespace {

double lagrange_eval(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double w = 1.0;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if (j != i) w *= (x - xs[j]) / (xs[i] - xs[j]);
    }
    sum += w * ys[i];
  }
  return sum;
}

struct EnergyGrid {
  std::vector<double> h;
  std::vector<std::vector<double>> radii;  // empty with ok = false on failure
  std::vector<bool> ok;
};

EnergyGrid build_grid(double h0, double h1, int size, int index, const WsbQuery& q, const BlockSpec& block,
                      const SystemParams& params, const CompareOptions& opt) {
  EnergyGrid g;
  for (int j = 0; j < size; ++j) {
    const double h = h0 + (h1 - h0) * j / (size - 1);
    g.h.push_back(h);
    try {
      g.radii.push_back(cut_radii_on_line(h, index, q.rdot0, q.theta0, block, params, opt.manifold, opt.cut));
      g.ok.push_back(true);
    } catch (const Error&) {
      g.radii.emplace_back();
      g.ok.push_back(false);
    }
  }
  return g;
}

// Interpolated radius of the branch nearest to r_hint at energy h. Returns
// false when the neighbouring nodes do not share one branch structure.
bool grid_radius(const EnergyGrid& g, double h, double r_hint, double& r_out, double& residual) {
  const int size = static_cast<int>(g.h.size());
  if (size < 4) return false;
  int k = static_cast<int>(std::lower_bound(g.h.begin(), g.h.end(), h) - g.h.begin());
  int first = std::clamp(k - 2, 0, size - 4);
  // The three nodes nearest to h for the lower-order estimate.
  std::vector<int> win{first, first + 1, first + 2, first + 3};
  for (int j : win) {
    if (!g.ok[j] || g.radii[j].size() != g.radii[win[0]].size() || g.radii[j].empty()) return false;
  }
  int nearest = win[0];
  for (int j : win) {
    if (std::abs(g.h[j] - h) < std::abs(g.h[nearest] - h)) nearest = j;
  }
  std::size_t branch = 0;
  for (std::size_t b = 1; b < g.radii[nearest].size(); ++b) {
    if (std::abs(g.radii[nearest][b] - r_hint) < std::abs(g.radii[nearest][branch] - r_hint)) branch = b;
  }
  std::vector<double> xs, ys;
  for (int j : win) {
    xs.push_back(g.h[j]);
    ys.push_back(g.radii[j][branch]);
  }
  const double cubic = lagrange_eval(xs, ys, h);
  std::vector<int> order = win;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return std::abs(g.h[a] - h) < std::abs(g.h[b] - h); });
  std::vector<double> xs3, ys3;
  for (int t = 0; t < 3; ++t) {
    xs3.push_back(g.h[order[t]]);
    ys3.push_back(g.radii[order[t]][branch]);
  }
  std::vector<int> idx3(order.begin(), order.begin() + 3);
  std::sort(idx3.begin(), idx3.end());
  const double quad = lagrange_eval(xs3, ys3, h);
  r_out = cubic;
  residual = std::abs(cubic - quad);
  return true;
}

double nearest(const std::vector<double>& radii, double r) {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (double c : radii) {
    if (std::isnan(best) || std::abs(c - r) < std::abs(best - r)) best = c;
  }
  return best;
}

}  // namespace

ComparisonReport compare_with_manifold(const std::vector<WsbPoint>& points, const WsbQuery& q,
                                       const SectionGeometry& geom, const BlockSpec& block,
                                       const SystemParams& params, const CompareOptions& opt) {
  (void)geom;
  ComparisonReport rep;
  if (points.empty()) return rep;
  std::map<int, std::vector<std::size_t>> by_index;
  rep.points.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int idx = (opt.use_unstable_order ? points[i].unstable_order : q.n - 1) + opt.index_shift;
    rep.points[i].r_star = points[i].r_star;
    rep.points[i].H_star = points[i].H_star;
    rep.points[i].cut_index = idx;
    by_index[idx].push_back(i);
  }
  for (const auto& [idx, members] : by_index) {
    double h0 = std::numeric_limits<double>::infinity(), h1 = -h0;
    for (std::size_t i : members) {
      h0 = std::min(h0, points[i].H_star);
      h1 = std::max(h1, points[i].H_star);
    }
    EnergyGrid grid;
    if (opt.grid_size >= 4 && h1 - h0 > 1e-9) grid = build_grid(h0, h1, opt.grid_size, idx, q, block, params, opt);
    for (std::size_t i : members) {
      PointComparison& pc = rep.points[i];
      double r_grid = 0.0, resid = 0.0;
      if (!grid.h.empty() && grid_radius(grid, pc.H_star, pc.r_star, r_grid, resid) && resid <= 0.1 * opt.tolerance) {
        pc.r_cut = r_grid;
        pc.method = "grid";
      } else {
        pc.method = "exact";
        try {
          ManifoldCut c;
          pc.r_cut = nearest(
              cut_radii_on_line(pc.H_star, idx, q.rdot0, q.theta0, block, params, opt.manifold, opt.cut, &c),
              pc.r_star);
          if (std::isnan(pc.r_cut)) {
            // The cut misses the line rdot = rdot0 altogether.
            pc.method = "polyline";
            pc.distance = distance_to_cut(c, pc.r_star, q.rdot0);
          }
        } catch (const Error& e) {
          pc.error = e.what();
        }
      }
      if (!std::isnan(pc.r_cut)) pc.distance = std::abs(pc.r_cut - pc.r_star);
    }
  }
  double sum = 0.0;
  for (const auto& pc : rep.points) {
    rep.max_distance = std::max(rep.max_distance, pc.distance);
    sum += pc.distance;
  }
  rep.mean_distance = sum / rep.points.size();
  return rep;
}

std::vector<double> locus_intersections(int index, const WsbQuery& q, const SectionGeometry& geom,
                                        const BlockSpec& block, const SystemParams& params,
                                        const CompareOptions& opt) {
  const AdmissibleRange range = admissible_range(q, geom, params);
  const double h_l1 = lagrange_points(params).h(1);
  // Energies attained on the line.
  double hmin = std::numeric_limits<double>::infinity(), hmax = -hmin;
  std::vector<std::pair<double, double>> line;  // (r, H)
  for (const Interval& iv : range.intervals) {
    const int m = 400;
    for (int k = 0; k <= m; ++k) {
      const double r = iv.lo + (iv.hi - iv.lo) * (k == 0 ? 1e-9 : k == m ? 1.0 - 1e-9 : double(k) / m);
      const double h = start_energy(r, q, params);
      if (std::isnan(h)) continue;
      line.emplace_back(r, h);
      hmin = std::min(hmin, h);
      hmax = std::max(hmax, h);
    }
  }
  const double span = geom.H_star - h_l1;
  hmin = std::max(hmin, h_l1 + 1e-3 * span);
  hmax = std::min(hmax, geom.H_star - 1e-3 * span);
  std::vector<double> roots;
  if (!(hmax > hmin)) return roots;
  const int size = std::max(opt.grid_size, 4) * 2;
  const EnergyGrid grid = build_grid(hmin, hmax, size, index, q, block, params, opt);

  // f(r) = r - r_cut(H(r)) per branch, with branches matched by order.
  auto branch_value = [&](double h, std::size_t b, double& val) {
    int k = static_cast<int>(std::lower_bound(grid.h.begin(), grid.h.end(), h) - grid.h.begin());
    k = std::clamp(k, 1, size - 1);
    if (!grid.ok[k - 1] || !grid.ok[k]) return false;
    if (grid.radii[k - 1].size() != grid.radii[k].size() || b >= grid.radii[k].size()) return false;
    const double w = (h - grid.h[k - 1]) / (grid.h[k] - grid.h[k - 1]);
    val = (1.0 - w) * grid.radii[k - 1][b] + w * grid.radii[k][b];
    return true;
  };
  std::size_t max_branches = 0;
  for (const auto& rr : grid.radii) max_branches = std::max(max_branches, rr.size());
  std::vector<double> candidates;
  for (std::size_t b = 0; b < max_branches; ++b) {
    auto eval = [&](double r, double& f) {
      const double h = start_energy(r, q, params);
      double rc;
      if (std::isnan(h) || h < hmin || h > hmax || !branch_value(h, b, rc)) return false;
      f = r - rc;
      return true;
    };
    // Last evaluable radius between a good and a bad sample.
    auto edge = [&](double good, double bad, double& f_edge) {
      double f;
      for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (good + bad);
        (eval(mid, f) ? good : bad) = mid;
      }
      eval(good, f_edge);
      return good;
    };
    auto crossing = [&](double ra, double fa, double rb, double fb) {
      if ((fa < 0.0) != (fb < 0.0)) candidates.push_back(ra + (rb - ra) * fa / (fa - fb));
    };
    bool have_last = false, valid_last = false;
    double f_last = 0.0, r_last = 0.0;
    for (const auto& sample : line) {
      const double r = sample.first;
      double f = 0.0;
      const bool valid = eval(r, f);
      if (have_last && valid && valid_last) {
        crossing(r_last, f_last, r, f);
      } else if (have_last && valid != valid_last) {
        // The branch may end between samples; test the sign up to its edge.
        double fe = 0.0;
        if (valid) {
          const double re = edge(r, r_last, fe);
          crossing(re, fe, r, f);
        } else {
          const double re = edge(r_last, r, fe);
          crossing(r_last, f_last, re, fe);
        }
      }
      have_last = true;
      valid_last = valid;
      f_last = f;
      r_last = r;
    }
  }
  // Secant polish with exact cuts.
  auto exact_f = [&](double r, double hint) {
    const double h = start_energy(r, q, params);
    return r - nearest(cut_radii_on_line(h, index, q.rdot0, q.theta0, block, params, opt.manifold, opt.cut), hint);
  };
  for (double r0 : candidates) {
    try {
      double ra = r0, rb = r0 + 1e-6;
      double fa = exact_f(ra, ra), fb = exact_f(rb, rb);
      for (int it = 0; it < 12 && std::abs(fb) > 1e-11 && fb != fa; ++it) {
        const double rn = rb - fb * (rb - ra) / (fb - fa);
        ra = rb;
        fa = fb;
        rb = rn;
        fb = exact_f(rb, rb);
      }
      roots.push_back(rb);
    } catch (const Error&) {
      roots.push_back(r0);
    }
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<ProfileSample> return_time_profile(const WsbPoint& point, const WsbQuery& q, const SectionGeometry& geom,
                                               const SystemParams& params, double d_min, double d_max,
                                               int samples_per_side) {
  if (!(d_min > 0.0 && d_max > d_min) || samples_per_side < 2) {
    throw Error(ErrorCode::InvalidArgument, "profile needs 0 < d_min < d_max and two samples per side");
  }
  const double s = point.r_stable > point.r_unstable ? 1.0 : -1.0;
  std::vector<ProfileSample> out;
  for (const double side : {s, -s}) {
    for (int k = 0; k < samples_per_side; ++k) {
      const double d = d_max * std::pow(d_min / d_max, double(k) / (samples_per_side - 1));
      ProfileSample ps;
      ps.r0 = point.r_star + side * d;
      ps.distance = d;
      out.push_back(ps);
    }
  }
  const long n = static_cast<long>(out.size());
  auto run = [&](long i) {
    const StabilityVerdict v = classify_stability(out[i].r0, q, geom, params);
    out[i].order = v.stable_order;
    out[i].stable = v.stable(q.n);
    if (out[i].stable && !v.turns.empty()) {
      out[i].return_time = v.turns.back().t;
      out[i].return_r = v.turns.back().r;
      out[i].return_rdot = v.turns.back().rdot;
    }
  };
  if (q.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) run(i);
  } else {
    for (long i = 0; i < n; ++i) run(i);
  }
  return out;
}

E0Prescan prescan_e0(const WsbQuery& q, const SectionGeometry& geom, const SystemParams& params,
                     const std::vector<double>& e_grid, int samples_per_range) {
  E0Prescan out;
  for (double e0 : e_grid) {
    WsbQuery qq = q;
    qq.e0 = e0;
    E0Candidate c;
    c.e0 = e0;
    try {
      const AdmissibleRange range = admissible_range(qq, geom, params);
      for (const Interval& iv : range.intervals) c.range_width += iv.hi - iv.lo;
      qq.grid_step = c.range_width / samples_per_range;
      c.brackets = static_cast<int>(stable_set_scan(qq, geom, params).brackets.size());
    } catch (const Error&) {
      c.brackets = 0;
    }
    out.candidates.push_back(c);
  }
  const E0Candidate* best = nullptr;
  for (const auto& c : out.candidates) {
    if (!(c.range_width > 0.0)) continue;
    if (!best || c.brackets > best->brackets || (c.brackets == best->brackets && c.range_width > best->range_width)) {
      best = &c;
    }
  }
  if (!best) throw Error(ErrorCode::EmptyRange, "no eccentricity in the pre-scan grid is admissible");
  out.e0 = best->e0;
  return out;
}

void write_wsb_csv(std::ostream& os, const std::vector<WsbPoint>& pts, const WsbQuery& q, const SystemParams& params) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(10);
  os << "mu,theta0,rdot0,e0,n\n";
  os << params.mu << ',' << q.theta0 << ',' << q.rdot0 << ',' << q.e0 << ',' << q.n << '\n';
  for (const auto& p : pts) {
    os << p.r_star << ',' << p.H_star << ',' << std::min(p.r_stable, p.r_unstable) << ','
       << std::max(p.r_stable, p.r_unstable) << ',' << p.side << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

}  // namespace wsb
