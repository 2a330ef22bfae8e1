#include "wsb/block.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <sstream>

#include <boost/math/tools/toms748_solve.hpp>

#include "wsb/dynamics.hpp"
#include "wsb/equilibria.hpp"

namespace wsb {

BlockSpec default_block(const SystemParams& params) {
  const LagrangePointSet lp = lagrange_points(params);
  const double d = 0.4 * lp.x_plus;
  return {lp.l(1).x - d, lp.l(1).x + d, false};
}

double default_energy_cap(const SystemParams& params) {
  const LagrangePointSet lp = lagrange_points(params);
  return lp.h(1) + 0.5 * (lp.h(2) - lp.h(1));
}

const char* to_string(HillMembership m) {
  switch (m) {
    case HillMembership::Inside: return "inside";
    case HillMembership::Outside: return "outside";
    case HillMembership::Boundary: return "boundary";
  }
  return "?";
}

HillMembership hill_membership(double x, double y, double energy, const SystemParams& params, double tol) {
  const double v2half = effective_potential(x, y, params) + energy;
  if (std::abs(v2half) < tol) return HillMembership::Boundary;
  return v2half > 0.0 ? HillMembership::Inside : HillMembership::Outside;
}

namespace {

// Newton steps along the gradient onto omega + H = 0.
void project_to_level(double& x, double& y, double energy, const SystemParams& params) {
  for (int it = 0; it < 30; ++it) {
    const double f = effective_potential(x, y, params) + energy;
    if (std::abs(f) < 1e-13) return;
    const PotentialGradient g = potential_gradient(x, y, params);
    const double g2 = g.dx * g.dx + g.dy * g.dy;
    if (!(g2 > 1e-24)) return;
    x -= f * g.dx / g2;
    y -= f * g.dy / g2;
  }
}

}  // namespace

std::vector<ZvcSegment> zero_velocity_curve(double energy, const SystemParams& params, int resolution,
                                            double extent) {
  const LagrangePointSet lp = lagrange_points(params);
  if (!(energy < lp.h(4))) throw Error(ErrorCode::OutOfRange, "no forbidden region at or above H(L4)");
  if (resolution < 8 || !(extent > 0.0)) throw Error(ErrorCode::InvalidArgument, "bad zero-velocity grid");
  const int n = resolution;
  const double h = 2.0 * extent / n;
  // Half-cell offset keeps grid nodes off the primaries and the x-axis.
  auto gx = [&](int i) { return -extent + (i + 0.5) * h; };
  std::vector<double> f((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) f[j * (n + 1) + i] = effective_potential(gx(i), gx(j), params) + energy;

  std::vector<ZvcSegment> out;
  auto edge_point = [&](int i0, int j0, int i1, int j1, double& x, double& y) {
    const double a = f[j0 * (n + 1) + i0];
    const double b = f[j1 * (n + 1) + i1];
    const double t = a / (a - b);
    x = gx(i0) + t * (gx(i1) - gx(i0));
    y = gx(j0) + t * (gx(j1) - gx(j0));
  };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // Corners counter-clockwise from (i, j).
      const int ci[4] = {i, i + 1, i + 1, i};
      const int cj[4] = {j, j, j + 1, j + 1};
      double px[4], py[4];
      int m = 0;
      for (int e = 0; e < 4; ++e) {
        const int a = e, b = (e + 1) % 4;
        const double fa = f[cj[a] * (n + 1) + ci[a]];
        const double fb = f[cj[b] * (n + 1) + ci[b]];
        if ((fa > 0.0) != (fb > 0.0)) {
          edge_point(ci[a], cj[a], ci[b], cj[b], px[m], py[m]);
          ++m;
        }
      }
      if (m == 2) {
        out.push_back({px[0], py[0], px[1], py[1]});
      } else if (m == 4) {
        // Saddle cell: pair edges by the sign at the centre.
        const double fc = effective_potential(gx(i) + 0.5 * h, gx(j) + 0.5 * h, params) + energy;
        const double f0 = f[j * (n + 1) + i];
        if ((fc > 0.0) == (f0 > 0.0)) {
          out.push_back({px[0], py[0], px[1], py[1]});
          out.push_back({px[2], py[2], px[3], py[3]});
        } else {
          out.push_back({px[0], py[0], px[3], py[3]});
          out.push_back({px[1], py[1], px[2], py[2]});
        }
      }
    }
  }
  for (auto& s : out) {
    project_to_level(s.x0, s.y0, energy, params);
    project_to_level(s.x1, s.y1, energy, params);
  }
  return out;
}

std::vector<std::vector<ZvcSegment>> zvc_components(const std::vector<ZvcSegment>& segs, double tol) {
  // Union-find over segments sharing an endpoint; endpoints are hashed on a
  // grid of size tol so shared edge points collide.
  std::vector<int> parent(segs.size());
  for (std::size_t i = 0; i < segs.size(); ++i) parent[i] = static_cast<int>(i);
  std::function<int(int)> find = [&](int a) { return parent[a] == a ? a : parent[a] = find(parent[a]); };
  std::map<std::pair<long long, long long>, int> owner;
  auto key = [&](double x, double y) {
    return std::make_pair(static_cast<long long>(std::llround(x / tol)), static_cast<long long>(std::llround(y / tol)));
  };
  for (std::size_t i = 0; i < segs.size(); ++i) {
    for (const auto& k : {key(segs[i].x0, segs[i].y0), key(segs[i].x1, segs[i].y1)}) {
      auto it = owner.find(k);
      if (it == owner.end()) {
        owner.emplace(k, static_cast<int>(i));
      } else {
        parent[find(static_cast<int>(i))] = find(it->second);
      }
    }
  }
  std::map<int, std::vector<ZvcSegment>> groups;
  for (std::size_t i = 0; i < segs.size(); ++i) groups[find(static_cast<int>(i))].push_back(segs[i]);
  std::vector<std::vector<ZvcSegment>> out;
  for (auto& [root, g] : groups) out.push_back(std::move(g));
  return out;
}

const char* to_string(BlockSide s) { return s == BlockSide::A ? "a" : "b"; }

const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::Exit: return "exit";
    case BoundaryKind::Entry: return "entry";
    case BoundaryKind::Tangency: return "tangency";
  }
  return "?";
}

BoundaryClass classify_boundary_point(const RotatingState& s, const BlockSpec& spec, double tol) {
  BoundaryClass c;
  if (std::abs(s.x - spec.a) < tol) {
    c.side = BlockSide::A;
  } else if (std::abs(s.x - spec.b) < tol) {
    c.side = BlockSide::B;
  } else {
    throw Error(ErrorCode::NotOnBoundary, "state is on neither block plane");
  }
  if (std::abs(s.vx) < tol) {
    c.kind = BoundaryKind::Tangency;
  } else {
    const bool outward = c.side == BlockSide::A ? s.vx < 0.0 : s.vx > 0.0;
    c.kind = outward ? BoundaryKind::Exit : BoundaryKind::Entry;
  }
  return c;
}

double hill_half_width(double c, double energy, const SystemParams& params) {
  auto f = [&](double y) { return effective_potential(c, y, params) + energy; };
  if (!(f(0.0) > 0.0)) return 0.0;
  // March outward until the zero-velocity curve is crossed, then bracket.
  double lo = 0.0;
  double step = 1e-3;
  double hi = step;
  while (f(hi) > 0.0) {
    lo = hi;
    step *= 1.5;
    hi = lo + step;
    if (hi > 10.0) throw Error(ErrorCode::OutOfRange, "Hill segment on the plane is unbounded");
  }
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(f, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

BlockValidation validate_block(const BlockSpec& spec, double energy, const SystemParams& params, int n_samples) {
  const double x_l1 = lagrange_points(params).l(1).x;
  if (!(spec.a < x_l1 && x_l1 < spec.b)) {
    throw Error(ErrorCode::InvalidArgument, "block planes must straddle L1 strictly");
  }
  if (n_samples < 2) throw Error(ErrorCode::InvalidArgument, "need at least two samples per plane");
  BlockValidation out;
  out.spec = spec;
  out.min_margin = std::numeric_limits<double>::infinity();
  for (const BlockSide side : {BlockSide::A, BlockSide::B}) {
    const double c = side == BlockSide::A ? spec.a : spec.b;
    const double ymax = hill_half_width(c, energy, params);
    if (!(ymax > 0.0)) {
      std::ostringstream os;
      os << "plane x = " << c << " does not meet the bounded Hill component";
      throw Error(ErrorCode::NotIsolating, os.str());
    }
    for (int i = 0; i < n_samples; ++i) {
      const double y = -ymax + 2.0 * ymax * i / (n_samples - 1);
      const double v2 = std::max(0.0, 2.0 * (effective_potential(c, y, params) + energy));
      const double wx = potential_gradient(c, y, params).dx;
      for (const double sgn : {-1.0, 1.0}) {
        const double xddot = 2.0 * sgn * std::sqrt(v2) + wx;
        const double margin = side == BlockSide::A ? -xddot : xddot;
        out.min_margin = std::min(out.min_margin, margin);
        ++out.samples;
        if (!(margin > 0.0)) {
          std::ostringstream os;
          os.precision(10);
          os << "tangency at (" << c << ", " << y << ") has xddot = " << xddot;
          throw Error(ErrorCode::NotIsolating, os.str());
        }
      }
    }
  }
  out.spec.validated = true;
  return out;
}

const char* to_string(TransitKind k) {
  switch (k) {
    case TransitKind::Transit: return "transit";
    case TransitKind::Bounce: return "bounce";
    case TransitKind::Dwell: return "dwell";
  }
  return "?";
}

TransitOutcome block_transit(const RotatingState& entry, const BlockSpec& spec, const SystemParams& params,
                             double t_max, const PropagationOptions& options) {
  const BoundaryClass bc = classify_boundary_point(entry, spec);
  if (bc.side != BlockSide::B || bc.kind != BoundaryKind::Entry) {
    throw Error(ErrorCode::InvalidArgument, "block_transit needs an entry state on x = b");
  }
  PropagationOptions opt = options;
  opt.record_samples = true;
  const auto traj = propagate(entry, t_max,
                              {EventSpec::x_plane(spec.a, CrossingDirection::Decreasing, EventAction::Terminate),
                               EventSpec::x_plane(spec.b, CrossingDirection::Increasing, EventAction::Terminate)},
                              params, opt);
  TransitOutcome out;
  out.entry = entry;
  out.exit = traj.final_state;
  out.exit_time = traj.t_final;
  out.min_x = entry.x;
  for (const auto& smp : traj.samples) out.min_x = std::min(out.min_x, smp.state.x);
  out.min_x = std::min(out.min_x, traj.final_state.x);
  if (traj.termination == Termination::TerminalEvent) {
    out.kind = traj.terminal_event == 0 ? TransitKind::Transit : TransitKind::Bounce;
  } else {
    out.kind = TransitKind::Dwell;
  }
  return out;
}

bool SectionGeometry::admissible_angle(double theta0) const {
  return theta0 > -kPi + theta1 && theta0 < kPi - theta1;
}

SectionGeometry section_geometry(const BlockSpec& spec, double H_star, const SystemParams& params) {
  const LagrangePointSet lp = lagrange_points(params);
  if (!(H_star > lp.h(1) && H_star < lp.h(2))) {
    throw Error(ErrorCode::OutOfRange, "H_star must lie in (H(L1), H(L2))");
  }
  SectionGeometry g;
  g.a = spec.a;
  g.b = spec.b;
  g.H_star = H_star;
  g.y_b = hill_half_width(spec.b, H_star, params);
  g.theta1 = std::atan(g.y_b / (params.mu - spec.b));
  g.D1 = params.mu - spec.a;
  return g;
}

}  // namespace wsb
