#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "wsb/dynamics.hpp"
#include "wsb/equilibria.hpp"
#include "wsb/manifolds.hpp"

using namespace wsb;

namespace {

const SystemParams kP;

struct Fixture {
  double H = lagrange_points(kP).h(1) + 5e-4;
  BlockSpec block = default_block(kP);
  LyapunovOrbit orbit = orbit_at_energy(H, kP);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

const ManifoldBranch& branch() {
  static const ManifoldBranch b = globalize(fixture().orbit, ManifoldKind::Stable, fixture().block, kP);
  return b;
}

const ManifoldCut& cut0() {
  static const ManifoldCut c = cut(branch(), 0.0, 0, kP);
  return c;
}

RotatingState mirror(const RotatingState& s) { return {s.x, -s.y, -s.vx, s.vy}; }

}  // namespace

TEST_CASE("seeds sit on the orbit energy") {
  const auto& b = branch();
  REQUIRE(b.bundle.size() == 200);
  double worst = 0.0;
  for (const auto& t : b.bundle) {
    CHECK_FALSE(t.failed);
    worst = std::max(worst, std::abs(hamiltonian(t.seed, kP) - fixture().H));
    for (const auto& s : t.trajectory.samples) worst = std::max(worst, std::abs(hamiltonian(s.state, kP) - fixture().H));
  }
  CHECK(worst < 1e-9);
  // The branch at phase 0 is displaced toward P1.
  CHECK(b.bundle[0].seed.x > fixture().orbit.initial.x);
}

TEST_CASE("departure from the orbit grows by the unstable multiplier per period") {
  const auto& f = fixture();
  const auto seeds = manifold_seeds(f.orbit, ManifoldKind::Stable, 1, 1e-6, {0.0, 0.3, 0.6}, kP);
  for (const auto& s : seeds) {
    const double d0 = (s.seed.as_vector() - orbit_points(f.orbit, {s.phase}, kP)[0].state.as_vector()).norm();
    const Trajectory t = propagate(s.seed, -f.orbit.period, {}, kP);
    const double d1 = (t.final_state.as_vector() - orbit_points(f.orbit, {s.phase}, kP)[0].state.as_vector()).norm();
    const double ratio = d1 / d0;
    CAPTURE(ratio);
    CHECK(ratio > 0.5 * f.orbit.unstable_multiplier);
    CHECK(ratio < 2.0 * f.orbit.unstable_multiplier);
  }
}

TEST_CASE("time reversal maps the stable branch onto the mirrored unstable branch") {
  const auto& f = fixture();
  const int n = 10;
  // Each branch takes the sign that puts its phase-0 displacement toward P1.
  const OrbitPoint o0 = orbit_points(f.orbit, {0.0}, kP)[0];
  const int ss = o0.stable_direction[0] >= 0.0 ? 1 : -1;
  const int su = o0.unstable_direction[0] >= 0.0 ? 1 : -1;
  CHECK(ss == branch().sign);
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const double ps = double(k) / n, pu = k == 0 ? 0.0 : double(n - k) / n;
    const auto st = manifold_seeds(f.orbit, ManifoldKind::Stable, ss, 1e-6, {ps}, kP)[0];
    const auto un = manifold_seeds(f.orbit, ManifoldKind::Unstable, su, 1e-6, {pu}, kP)[0];
    worst = std::max(worst, (mirror(st.seed).as_vector() - un.seed.as_vector()).norm());
    const Trajectory a = propagate(st.seed, -3.0, {}, kP);
    const Trajectory b = propagate(un.seed, 3.0, {}, kP);
    worst = std::max(worst, (mirror(a.final_state).as_vector() - b.final_state.as_vector()).norm());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("first cut at theta0 = 0 is a closed simple curve on the energy level") {
  const ManifoldCut& c = cut0();
  CHECK(c.closed);
  CHECK(c.max_gap <= 2e-3);
  CHECK(is_simple(c));
  CHECK(c.points.size() >= 200);
  for (const auto& p : c.points) {
    CHECK(std::abs(hamiltonian(p.state, kP) - fixture().H) < 1e-9);
    CHECK(std::abs(wrap_pi(polar_from_cartesian(p.state, kP).theta)) < 1e-9);
    CHECK(p.rate > 0.0);
  }
  CHECK(c.points.front().r == c.points.back().r);
}

TEST_CASE("higher cuts close too and unreachable indices are rejected") {
  for (int i : {1, 2}) {
    const ManifoldCut c = cut(branch(), 0.0, i, kP);
    CHECK(c.closed);
    CHECK(c.index == i);
  }
  ManifoldOptions two;
  two.max_turns = 2;
  two.n_seeds = 40;
  const ManifoldBranch b = globalize(fixture().orbit, ManifoldKind::Stable, fixture().block, kP, two);
  try {
    cut(b, 0.0, 5, kP);
    FAIL("expected CutNotReached");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CutNotReached);
  }
}

TEST_CASE("cut CSV roundtrip") {
  std::stringstream ss;
  write_cut_csv(ss, cut0(), kP);
  const LoadedCut lc = read_cut_csv(ss);
  CHECK(lc.mu == kP.mu);
  CHECK(lc.cut.points.size() == cut0().points.size());
  CHECK(lc.cut.closed);
  CHECK(lc.cut.energy == doctest::Approx(fixture().H).epsilon(1e-9));  // 10 significant digits
  double worst = 0.0;
  for (std::size_t i = 0; i < lc.cut.points.size(); ++i) {
    worst = std::max(worst, std::abs(lc.cut.points[i].r - cut0().points[i].r) / cut0().points[i].r);
  }
  CHECK(worst < 1e-9);
  std::stringstream bad("mu,H,theta0\n1,2,3\n");
  CHECK_THROWS_AS(read_cut_csv(bad), Error);
}

TEST_CASE("point location") {
  const ManifoldCut& c = cut0();
  double rc = 0.0, vc = 0.0, rmax = 0.0;
  for (std::size_t i = 0; i + 1 < c.points.size(); ++i) {
    rc += c.points[i].r / (c.points.size() - 1);
    vc += c.points[i].rdot / (c.points.size() - 1);
    rmax = std::max(rmax, c.points[i].r);
  }
  CHECK(point_location(c, rc, vc) == Location::Inside);
  CHECK(point_location(c, rmax + 1e-3, vc) == Location::Outside);
  CHECK(point_location(c, c.points[7].r, c.points[7].rdot) == Location::OnCurve);
  CHECK(distance_to_cut(c, c.points[7].r, c.points[7].rdot) == 0.0);

  ManifoldCut open = c;
  open.closed = false;
  CHECK_THROWS_AS(point_location(open, rc, vc), Error);
}

TEST_CASE("location matches the dynamical fate off the band") {
  const ManifoldCut& c = cut0();
  const BlockSpec& blk = fixture().block;
  double r0 = 1e9, r1 = -1e9, v0 = 1e9, v1 = -1e9;
  for (const auto& p : c.points) {
    r0 = std::min(r0, p.r), r1 = std::max(r1, p.r);
    v0 = std::min(v0, p.rdot), v1 = std::max(v1, p.rdot);
  }
  std::mt19937_64 g(42);
  std::uniform_real_distribution<double> ur(r0 - 0.2 * (r1 - r0), r1 + 0.2 * (r1 - r0));
  std::uniform_real_distribution<double> uv(v0 - 0.2 * (v1 - v0), v1 + 0.2 * (v1 - v0));
  int inside = 0, outside = 0;
  while (inside + outside < 30) {
    const double r = ur(g), v = uv(g);
    if (distance_to_cut(c, r, v) < 1e-4) continue;
    RotatingState s;
    try {
      s = state_on_section(r, v, 0.0, fixture().H, kP);
    } catch (const Error&) {
      continue;
    }
    const Location loc = point_location(c, r, v);
    if ((loc == Location::Inside ? inside : outside) >= 15) continue;
    (loc == Location::Inside ? inside : outside) += 1;
    PropagationOptions o;
    o.initial_theta = 0.0;
    const Trajectory t = propagate(
        s, 200.0,
        {EventSpec::x_plane(blk.a, CrossingDirection::Decreasing),
         EventSpec::custom([](const RotatingState&, double th) { return th - kTwoPi; }, CrossingDirection::Increasing,
                           EventAction::Terminate)},
        kP, o);
    REQUIRE(t.termination == Termination::TerminalEvent);
    CHECK(t.terminal_event == (loc == Location::Inside ? 0 : 1));
  }
}

TEST_CASE("cut meets a radial-velocity line where the phase root lands") {
  const ManifoldCut& c = cut0();
  double vmid = 0.0;
  for (const auto& p : c.points) vmid += p.rdot / c.points.size();
  const auto hits = cut_line_intersections(branch(), c, vmid, kP);
  REQUIRE(hits.size() == 2);
  CHECK(hits[0].r < hits[1].r);
  for (const auto& h : hits) {
    CHECK(std::abs(h.rdot - vmid) < 1e-9);
    CHECK(distance_to_cut(c, h.r, h.rdot) < 1e-4);
  }
}
