#include <doctest.h>

#include <cmath>
#include <random>

#include "wsb/dynamics.hpp"
#include "wsb/equilibria.hpp"
#include "wsb/propagation.hpp"

using namespace wsb;

namespace {

// Independent evaluation of omega straight from its definition.
double omega_ref(double x, double y, double mu) {
  const double r1 = std::hypot(x - mu, y);
  const double r2 = std::hypot(x - mu + 1.0, y);
  return 0.5 * (x * x + y * y) + (1.0 - mu) / r1 + mu / r2 + 0.5 * mu * (1.0 - mu);
}

RotatingState random_state(std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1.4, 1.4), v(-0.8, 0.8);
  const SystemParams p;
  for (;;) {
    RotatingState s{u(g), u(g), v(g), v(g)};
    if (distance_to_p1(s.x, s.y, p) > 0.1 && distance_to_p2(s.x, s.y, p) > 0.1) return s;
  }
}

}  // namespace

TEST_CASE("effective potential special values") {
  CHECK(effective_potential(1.0, 0.0, SystemParams{0.0}) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(effective_potential(0.0, 0.0, SystemParams{0.5}) == doctest::Approx(2.125).epsilon(1e-15));
  CHECK_THROWS_AS(effective_potential(kEarthMoonMu, 0.0, SystemParams{}), Error);
}

TEST_CASE("effective potential is even in y and matches its definition") {
  std::mt19937_64 g(7);
  const SystemParams p;
  for (int i = 0; i < 100; ++i) {
    const RotatingState s = random_state(g);
    CHECK(effective_potential(s.x, s.y, p) == effective_potential(s.x, -s.y, p));
    CHECK(std::abs(effective_potential(s.x, s.y, p) - omega_ref(s.x, s.y, p.mu)) < 1e-14);
  }
}

TEST_CASE("vector field zeros") {
  const Vec4 f = vector_field({1.0, 0.0, 0.0, 0.0}, SystemParams{0.0});
  CHECK(f.norm() < 1e-15);
  const SystemParams p;
  const LagrangePointSet lp = lagrange_points(p);
  for (int i = 1; i <= 5; ++i) {
    CHECK(vector_field({lp.l(i).x, lp.l(i).y, 0.0, 0.0}, p).norm() < 1e-12);
  }
}

TEST_CASE("potential gradient and Hessian match central differences") {
  std::mt19937_64 g(11);
  const SystemParams p;
  const double h = 1e-5;
  for (int i = 0; i < 5; ++i) {
    const RotatingState s = random_state(g);
    const PotentialGradient gr = potential_gradient(s.x, s.y, p);
    const double fx = (omega_ref(s.x + h, s.y, p.mu) - omega_ref(s.x - h, s.y, p.mu)) / (2 * h);
    const double fy = (omega_ref(s.x, s.y + h, p.mu) - omega_ref(s.x, s.y - h, p.mu)) / (2 * h);
    CHECK(std::abs(gr.dx - fx) < 1e-6);
    CHECK(std::abs(gr.dy - fy) < 1e-6);
    const PotentialHessian he = potential_hessian(s.x, s.y, p);
    const PotentialGradient gxp = potential_gradient(s.x + h, s.y, p), gxm = potential_gradient(s.x - h, s.y, p);
    const PotentialGradient gyp = potential_gradient(s.x, s.y + h, p), gym = potential_gradient(s.x, s.y - h, p);
    CHECK(std::abs(he.xx - (gxp.dx - gxm.dx) / (2 * h)) < 1e-6);
    CHECK(std::abs(he.xy - (gyp.dx - gym.dx) / (2 * h)) < 1e-6);
    CHECK(std::abs(he.yy - (gyp.dy - gym.dy) / (2 * h)) < 1e-6);
  }
}

TEST_CASE("hamiltonian at rest is minus omega") {
  const SystemParams p;
  CHECK(hamiltonian({0.3, -0.2, 0.0, 0.0}, p) == -effective_potential(0.3, -0.2, p));
  CHECK(hamiltonian({0.3, -0.2, 0.1, 0.2}, p) ==
        doctest::Approx(0.025 - effective_potential(0.3, -0.2, p)).epsilon(1e-15));
}

TEST_CASE("jacobian matches finite differences and is trace free") {
  std::mt19937_64 g(3);
  const SystemParams p;
  const double h = 1e-6;
  for (int i = 0; i < 10; ++i) {
    const RotatingState s = random_state(g);
    const Mat4 J = jacobian(s, p);
    CHECK(std::abs(J.trace()) < 1e-14);
    for (int c = 0; c < 4; ++c) {
      Vec4 sp = s.as_vector(), sm = s.as_vector();
      sp[c] += h;
      sm[c] -= h;
      const Vec4 col = (vector_field(RotatingState::from(sp), p) - vector_field(RotatingState::from(sm), p)) / (2 * h);
      CHECK((J.col(c) - col).norm() < 1e-6);
    }
  }
}

TEST_CASE("variational field is J times Phi") {
  const SystemParams p;
  const RotatingState s{0.4, 0.3, -0.1, 0.2};
  Mat4 phi;
  phi << 1, 2, 0, 1, 0, 1, 3, 0, 2, 0, 1, 1, 0, 1, 0, 1;
  const auto [f, dphi] = variational_field(s, phi, p);
  CHECK((f - vector_field(s, p)).norm() < 1e-15);
  CHECK((dphi - jacobian(s, p) * phi).norm() < 1e-13);
}

TEST_CASE("polar conversions") {
  const SystemParams p;
  const RotatingState s = cartesian_from_polar({0.5, 0.0, kPi / 2, 0.0}, p);
  CHECK(s.x == doctest::Approx(p.mu).epsilon(1e-15));
  CHECK(s.y == doctest::Approx(0.5));
  CHECK(std::abs(s.vx) < 1e-15);
  CHECK(std::abs(s.vy) < 1e-15);

  std::mt19937_64 g(5);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const RotatingState a = random_state(g);
    const RotatingState b = cartesian_from_polar(polar_from_cartesian(a, p), p);
    worst = std::max(worst, (a.as_vector() - b.as_vector()).norm());
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("unwrapped angle gains 2 pi at the first return of a prograde orbit") {
  const SystemParams p;
  const WsbStart st = state_from_wsb_coords(0.2, 0.0, 0.0, 0.0, p);
  const Trajectory t = propagate(st.state, 20.0,
                                 {EventSpec::angle(0.0, CrossingDirection::Increasing, EventAction::Terminate)}, p);
  REQUIRE(t.termination == Termination::TerminalEvent);
  CHECK(std::abs(t.final_theta - kTwoPi) < 1e-10);
}

TEST_CASE("circular osculating start") {
  const SystemParams p;
  const double r0 = 0.3;
  const WsbStart st = state_from_wsb_coords(r0, 0.0, 0.0, 0.0, p);
  CHECK(st.elements.e < 1e-12);
  CHECK(st.elements.a == doctest::Approx(r0).epsilon(1e-12));
  CHECK(st.elements.tau == 0.0);
  const PolarState ps = polar_from_cartesian(st.state, p);
  CHECK(ps.thetadot + 1.0 == doctest::Approx(std::sqrt((1.0 - p.mu) / (r0 * r0 * r0))).epsilon(1e-13));
  CHECK(std::abs(ps.rdot) < 1e-15);
}

TEST_CASE("osculating elements roundtrip") {
  const SystemParams p;
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> ur(0.1, 0.6), ue(0.05, 0.8), ut(-kPi, kPi), urd(-1.0, 1.0);
  double worst = 0.0, worst_angle = 0.0;
  int done = 0;
  while (done < 100) {
    const double r0 = ur(g), e0 = ue(g), th = ut(g), rd = urd(g);
    WsbStart st;
    try {
      st = state_from_wsb_coords(r0, rd, th, e0, p);
    } catch (const Error&) {
      continue;
    }
    const OsculatingElements el = elements_from_state(st.state, p);
    worst = std::max(worst, std::abs(el.e - e0));
    worst_angle = std::max(worst_angle, std::abs(wrap_pi(el.phi + el.tau - th)));
    ++done;
  }
  CHECK(worst < 1e-10);
  CHECK(worst_angle < 1e-10);
}

TEST_CASE("circular two-body state has zero eccentricity") {
  const SystemParams p{0.0};
  const double r = 0.5, w = std::sqrt(1.0 / (r * r * r)) - 1.0;
  const OsculatingElements el = elements_from_state({r, 0.0, 0.0, w * r}, p);
  CHECK(el.e < 1e-12);
}

TEST_CASE("radial velocity beyond the ellipse family is rejected") {
  const SystemParams p;
  try {
    state_from_wsb_coords(0.3, 5.0, 0.0, 0.2, p);
    FAIL("expected NoAdmissibleEllipse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoAdmissibleEllipse);
  }
}

TEST_CASE("collision guard") {
  const SystemParams p;
  CHECK_THROWS_AS(check_collision_guard(p.p2_x() + 1e-6, 0.0, p), Error);
  CHECK_NOTHROW(check_collision_guard(0.5, 0.5, p));
  CHECK_THROWS_AS(SystemParams{0.7}.validate(), Error);
}
