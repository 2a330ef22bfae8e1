#include <doctest.h>

#include <cmath>

#include "wsb/block.hpp"
#include "wsb/dynamics.hpp"
#include "wsb/equilibria.hpp"
#include "wsb/lyapunov.hpp"

using namespace wsb;

TEST_CASE("linear guess") {
  const SystemParams p;
  const LagrangePointSet lp = lagrange_points(p);
  const double T0 = kTwoPi / l1_spectrum(p).nu;
  double prev = 1.0;
  for (double A : {1e-2, 1e-3, 1e-4, 1e-5}) {
    const LyapunovGuess g = initial_guess(A, p);
    CHECK(g.period == doctest::Approx(T0).epsilon(1e-15));
    CHECK(g.state.x == doctest::Approx(lp.l(1).x + A).epsilon(1e-15));
    const double dh = std::abs(hamiltonian(g.state, p) - lp.h(1));
    CHECK(dh < prev);
    prev = dh;
    // Linear and nonlinear energies differ at cubic order.
    CHECK(std::abs(linear_energy_offset(A, p) - (hamiltonian(g.state, p) - lp.h(1))) < 50.0 * A * A * A);
  }
}

TEST_CASE("differential correction") {
  const SystemParams p;
  const LyapunovOrbit o = differential_correct(initial_guess(1e-3, p), p);
  CHECK(o.iterations <= 10);
  CHECK(o.residual < 1e-10);
  CHECK(std::abs(o.monodromy_determinant - 1.0) < 1e-8);
  CHECK(o.energy > lagrange_points(p).h(1));

  // The trivial pair, once the hyperbolic pair is removed.
  int near_one = 0;
  for (const auto& m : o.multipliers) near_one += std::abs(m - 1.0) < 1e-6;
  CHECK(near_one == 2);
  CHECK(o.unstable_multiplier > 1.0);
  CHECK(o.unstable_multiplier * o.stable_multiplier == doctest::Approx(1.0).epsilon(1e-8));

  // Correcting an exact orbit does not move it.
  const LyapunovOrbit again = differential_correct({o.initial, o.period}, p);
  CHECK(again.last_correction < 1e-12);
  CHECK(std::abs(again.initial.vy - o.initial.vy) < 1e-12);
}

TEST_CASE("re-propagation closes the orbit and respects the x-axis mirror") {
  const SystemParams p;
  const LyapunovOrbit o = orbit_at_energy(lagrange_points(p).h(1) + 2e-3, p);
  CorrectionOptions co;
  const Trajectory full = propagate(o.initial, o.period, {}, p, lyapunov_propagation(co));
  CHECK((full.final_state.as_vector() - o.initial.as_vector()).norm() < 1e-10);
  const Trajectory half = propagate(o.initial, 0.5 * o.period, {}, p, lyapunov_propagation(co));
  CHECK(std::abs(half.final_state.y) < 1e-10);
  CHECK(std::abs(half.final_state.vx) < 1e-10);
  CHECK(std::abs(hamiltonian(full.final_state, p) - o.energy) < 1e-12);
}

TEST_CASE("orbit at energy") {
  const SystemParams p;
  const LagrangePointSet lp = lagrange_points(p);
  const LyapunovOrbit o = orbit_at_energy(lp.h(1) + 1e-4, p);
  CHECK(o.amplitude > 0.0);
  CHECK(std::abs(o.energy - (lp.h(1) + 1e-4)) < 1e-12);
  CHECK(o.residual < 1e-10);

  for (double bad : {lp.h(1), lp.h(1) - 1e-3, lp.h(2) + 1e-4}) {
    try {
      orbit_at_energy(bad, p);
      FAIL("expected OutOfRange");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::OutOfRange);
    }
  }
  CHECK_THROWS_AS(orbit_at_energy(lp.h(1) + 3e-3, p, lp.h(1) + 2e-3), Error);
}

TEST_CASE("family scan: amplitude and period grow, spectrum stays hyperbolic") {
  const SystemParams p;
  const LagrangePointSet lp = lagrange_points(p);
  const double top = default_energy_cap(p);
  double prev_amp = 0.0, prev_period = 0.0;
  for (int k = 1; k <= 20; ++k) {
    const double H = lp.h(1) + (top - lp.h(1)) * k / 21.0;
    CAPTURE(H);
    const LyapunovOrbit o = orbit_at_energy(H, p);
    CHECK(o.amplitude > prev_amp);
    CHECK(o.period > prev_period);
    CHECK(o.residual < 1e-10);
    CHECK(std::abs(o.monodromy_determinant - 1.0) < 1e-8);
    CHECK(o.unstable_multiplier > 1.0);
    CHECK(o.stable_multiplier < 1.0);
    prev_amp = o.amplitude;
    prev_period = o.period;
  }
}

TEST_CASE("period tends to the linear period as amplitude vanishes") {
  const SystemParams p;
  const double T0 = kTwoPi / l1_spectrum(p).nu;
  // T(A) = T0 + c A^2 + O(A^4); Richardson on A and A/2.
  const double A = 2e-3;
  const LyapunovOrbit o1 = differential_correct(initial_guess(A, p), p);
  const LyapunovOrbit o2 = differential_correct(initial_guess(A / 2, p), p);
  const double extrapolated = (4.0 * o2.period - o1.period) / 3.0;
  CHECK(std::abs(extrapolated - T0) < 1e-4);
  CHECK(std::abs(o2.period - T0) < std::abs(o1.period - T0));
}

TEST_CASE("orbit points carry eigen-directions") {
  const SystemParams p;
  const LyapunovOrbit o = orbit_at_energy(lagrange_points(p).h(1) + 5e-4, p);
  const auto pts = orbit_points(o, {0.0, 0.25, 0.5, 1.0}, p);
  REQUIRE(pts.size() == 4);
  CHECK((pts[0].state.as_vector() - o.initial.as_vector()).norm() < 1e-14);
  CHECK((pts[3].state.as_vector() - o.initial.as_vector()).norm() < 1e-10);
  CHECK(std::abs(pts[2].state.y) < 1e-10);
  for (const auto& q : pts) {
    CHECK(std::abs(hamiltonian(q.state, p) - o.energy) < 1e-12);
    CHECK(q.stable_direction.norm() == doctest::Approx(1.0));
    CHECK(q.unstable_direction.norm() == doctest::Approx(1.0));
  }
  // After one period the directions return to themselves up to sign.
  CHECK(std::abs(std::abs(pts[3].stable_direction.dot(pts[0].stable_direction)) - 1.0) < 1e-6);
  CHECK(std::abs(std::abs(pts[3].unstable_direction.dot(pts[0].unstable_direction)) - 1.0) < 1e-6);
}
