#include <doctest.h>

#include <cmath>

#include "wsb/block.hpp"
#include "wsb/dynamics.hpp"
#include "wsb/equilibria.hpp"
#include "wsb/manifolds.hpp"

using namespace wsb;

namespace {

const SystemParams kP;

double h1() { return lagrange_points(kP).h(1); }

// Entry state on x = b at energy H with the given (y, vy); vx < 0.
bool entry_state(double b, double y, double vy, double H, RotatingState& out) {
  const double k = 2.0 * (H + effective_potential(b, y, kP)) - vy * vy;
  if (!(k > 0.0)) return false;
  out = {b, y, -std::sqrt(k), vy};
  return true;
}

}  // namespace

TEST_CASE("Hill region membership") {
  const LagrangePointSet lp = lagrange_points(kP);
  CHECK(hill_membership(lp.l(1).x, 0.0, lp.h(1), kP) == HillMembership::Boundary);
  CHECK(hill_membership(0.3, 0.4, -effective_potential(0.3, 0.4, kP), kP) == HillMembership::Boundary);
  const double H = lp.h(1) + 2e-3;
  CHECK(hill_membership(kP.p1_x() + 0.3, 0.0, H, kP) == HillMembership::Inside);
  CHECK(hill_membership(kP.p2_x() + 0.05, 0.0, H, kP) == HillMembership::Inside);
  CHECK(hill_membership(lp.l(2).x - 0.01, 0.0, H, kP) == HillMembership::Outside);
  CHECK(hill_membership(0.0, 0.9, H, kP) == HillMembership::Outside);
}

TEST_CASE("boundary point classification") {
  const BlockSpec s = default_block(kP);
  CHECK(classify_boundary_point({s.b, 0.0, 0.1, 0.0}, s).kind == BoundaryKind::Exit);
  CHECK(classify_boundary_point({s.b, 0.0, 0.1, 0.0}, s).side == BlockSide::B);
  CHECK(classify_boundary_point({s.a, 0.0, 0.1, 0.0}, s).kind == BoundaryKind::Entry);
  CHECK(classify_boundary_point({s.a, 0.0, 0.1, 0.0}, s).side == BlockSide::A);
  CHECK(classify_boundary_point({s.a, 0.0, -0.1, 0.0}, s).kind == BoundaryKind::Exit);
  CHECK(classify_boundary_point({s.b, 0.0, -0.1, 0.0}, s).kind == BoundaryKind::Entry);
  CHECK(classify_boundary_point({s.b, 0.02, 0.0, 0.3}, s).kind == BoundaryKind::Tangency);
  try {
    classify_boundary_point({0.5 * (s.a + s.b), 0.0, 0.1, 0.0}, s);
    FAIL("expected NotOnBoundary");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotOnBoundary);
  }
}

TEST_CASE("default block") {
  const LagrangePointSet lp = lagrange_points(kP);
  const BlockSpec s = default_block(kP);
  CHECK(s.a == doctest::Approx(-0.897289).epsilon(1e-6));
  CHECK(s.b == doctest::Approx(-0.776541).epsilon(1e-6));
  CHECK(s.b - lp.l(1).x == doctest::Approx(0.4 * lp.x_plus).epsilon(1e-14));
  CHECK(lp.l(1).x - s.a == doctest::Approx(0.4 * lp.x_plus).epsilon(1e-14));

  const BlockValidation v = validate_block(s, h1() + 5e-4, kP);
  CHECK(v.spec.validated);
  CHECK(v.min_margin > 0.1);
  CHECK(v.samples == 800);
  CHECK_NOTHROW(validate_block(s, default_energy_cap(kP), kP));
}

TEST_CASE("block validation failures") {
  const LagrangePointSet lp = lagrange_points(kP);
  try {
    validate_block({-0.95, -0.3, false}, h1() + 5e-4, kP);
    FAIL("expected NotIsolating");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotIsolating);
  }
  CHECK_THROWS_AS(validate_block({lp.l(1).x, -0.7, false}, h1() + 5e-4, kP), Error);
  CHECK_THROWS_AS(validate_block({-0.8, -0.9, false}, h1() + 5e-4, kP), Error);
}

TEST_CASE("section geometry") {
  const BlockSpec s = default_block(kP);
  const SectionGeometry g = section_geometry(s, default_energy_cap(kP), kP);
  CHECK(g.D1 == doctest::Approx(kP.mu - s.a).epsilon(1e-15));
  CHECK(g.D1 == doctest::Approx(0.909439).epsilon(1e-6));
  CHECK(g.y_b == doctest::Approx(0.149924).epsilon(1e-5));
  CHECK(g.theta1 == doctest::Approx(0.187851).epsilon(1e-5));
  CHECK(std::abs(std::atan2(g.y_b, kP.mu - g.b) - g.theta1) < 1e-12);
  CHECK(g.admissible_angle(0.0));
  CHECK_FALSE(g.admissible_angle(kPi - 0.5 * g.theta1));
  double prev = 0.0;
  for (double dh : {1e-4, 1e-3, 3e-3, 5e-3}) {
    const double yb = section_geometry(s, h1() + dh, kP).y_b;
    CHECK(yb > prev);
    prev = yb;
  }
  CHECK_THROWS_AS(section_geometry(s, h1() - 1e-4, kP), Error);
}

TEST_CASE("zero-velocity curve") {
  const double H = h1() + 2e-3;
  const auto segs = zero_velocity_curve(H, kP, 200);
  double worst = 0.0;
  for (const auto& s : segs) {
    worst = std::max(worst, std::abs(effective_potential(s.x0, s.y0, kP) + H));
    worst = std::max(worst, std::abs(effective_potential(s.x1, s.y1, kP) + H));
  }
  CHECK(worst < 1e-10);
  CHECK(zero_velocity_curve(H, kP, 400).size() > 1.8 * segs.size());

  // Between the L1 and L2 energies: the inner curve bounds the region
  // around both primaries, the outer one lies beyond L3.
  const auto comps = zvc_components(segs);
  REQUIRE(comps.size() == 2);
  int bounded = 0;
  for (const auto& c : comps) {
    double xmin = 1e9, xmax = -1e9;
    for (const auto& s : c) {
      xmin = std::min(xmin, s.x0);
      xmax = std::max(xmax, s.x0);
    }
    if (xmax < lagrange_points(kP).l(3).x) {
      ++bounded;
      CHECK(xmin < kP.p2_x());
      CHECK(xmax > kP.p1_x());
    }
  }
  CHECK(bounded == 1);
  CHECK(zvc_components(zero_velocity_curve(h1() - 1e-2, kP, 200)).size() == 3);
  CHECK_THROWS_AS(zero_velocity_curve(-1.4, kP), Error);
}

TEST_CASE("block transit agrees with the stable tube") {
  const BlockSpec s = default_block(kP);
  const double H = h1() + 5e-4;
  const LyapunovOrbit o = orbit_at_energy(H, kP);
  ManifoldOptions mo;
  mo.n_seeds = 40;
  const ManifoldBranch br = globalize(o, ManifoldKind::Stable, s, kP, mo);

  // Where the tube meets x = b on its way in.
  std::vector<RotatingState> tube;
  std::vector<double> t_in;
  for (const auto& seed : br.bundle) {
    const Trajectory t = propagate(seed.seed, -20.0, {EventSpec::x_plane(s.b, CrossingDirection::Any)}, kP);
    REQUIRE(t.termination == Termination::TerminalEvent);
    tube.push_back(t.final_state);
    t_in.push_back(-t.t_final);
  }
  double yc = 0.0, vyc = 0.0;
  for (const auto& e : tube) {
    yc += e.y / tube.size();
    vyc += e.vy / tube.size();
  }

  SUBCASE("centre transits") {
    RotatingState e;
    REQUIRE(entry_state(s.b, yc, vyc, H, e));
    const TransitOutcome r = block_transit(e, s, kP);
    CHECK(r.kind == TransitKind::Transit);
    CHECK(r.exit.x == doctest::Approx(s.a));
  }

  SUBCASE("well outside bounces") {
    int tried = 0;
    for (std::size_t i = 0; i < tube.size(); i += 5) {
      RotatingState e;
      if (!entry_state(s.b, yc + 1.5 * (tube[i].y - yc), vyc + 1.5 * (tube[i].vy - vyc), H, e)) continue;
      ++tried;
      CHECK(block_transit(e, s, kP).kind == TransitKind::Bounce);
    }
    CHECK(tried >= 3);
  }

  SUBCASE("on the tube dwells") {
    for (std::size_t i = 0; i < tube.size(); i += 10) {
      const TransitOutcome r = block_transit(tube[i], s, kP, t_in[i] + 0.5 * o.period);
      CHECK(r.kind == TransitKind::Dwell);
    }
  }

  CHECK_THROWS_AS(block_transit({s.b, 0.0, 0.1, 0.0}, s, kP), Error);
}
