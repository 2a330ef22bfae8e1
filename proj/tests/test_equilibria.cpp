#include <doctest.h>

#include <cmath>

#include "wsb/dynamics.hpp"
#include "wsb/equilibria.hpp"

using namespace wsb;

namespace {

// Plain bisection on the quintic over [1e-6, 0.5]; the quintic is negative
// near 0 and positive at 0.5 for mu < 0.5.
double bisect_quintic(double mu) {
  double lo = 1e-6, hi = 0.5;
  const double slo = euler_quintic(lo, mu) < 0 ? -1.0 : 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    ((euler_quintic(mid, mu) < 0 ? -1.0 : 1.0) == slo ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("quintic root for symmetric primaries") {
  const SystemParams p{0.5};
  CHECK(quintic_root(p) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(euler_quintic(0.5, 0.5) == 0.0);
}

TEST_CASE("quintic root shrinks with mu") {
  const double a = quintic_root(SystemParams{1e-9});
  const double b = quintic_root(SystemParams{1e-6});
  const double c = quintic_root(SystemParams{1e-3});
  CHECK(0.0 < a);
  CHECK(a < b);
  CHECK(b < c);
}

TEST_CASE("quintic root agrees with bisection oracle") {
  for (double mu : {1e-3, 1e-2, kEarthMoonMu, 0.1, 0.3}) {
    CAPTURE(mu);
    const double x = quintic_root(SystemParams{mu});
    CHECK(std::abs(x - bisect_quintic(mu)) < 1e-13);
    CHECK(std::abs(euler_quintic(x, mu)) < 1e-13);
  }
  CHECK(quintic_root(SystemParams{}) == doctest::Approx(0.15093428858).epsilon(1e-10));
}

TEST_CASE("Lagrange point geometry and energies") {
  for (double mu : {1e-3, 1e-2, kEarthMoonMu}) {
    CAPTURE(mu);
    const SystemParams p{mu};
    const LagrangePointSet lp = lagrange_points(p);
    CHECK(lp.l(4).x == doctest::Approx(mu - 0.5).epsilon(1e-15));
    CHECK(lp.l(4).y == doctest::Approx(std::sqrt(3.0) / 2).epsilon(1e-15));
    CHECK(lp.l(5).y == doctest::Approx(-std::sqrt(3.0) / 2).epsilon(1e-15));
    CHECK(lp.l(1).x == doctest::Approx(p.p2_x() + lp.x_plus).epsilon(1e-15));
    CHECK(lp.l(2).x < p.p2_x());
    CHECK(lp.l(3).x > p.p1_x());
    for (int i = 1; i <= 5; ++i) {
      CHECK(vector_field({lp.l(i).x, lp.l(i).y, 0.0, 0.0}, p).norm() < 1e-10);
      CHECK(lp.h(i) == -effective_potential(lp.l(i).x, lp.l(i).y, p));
    }
    CHECK(lp.h(5) == lp.h(4));
    CHECK(lp.h(4) > lp.h(3));
    CHECK(lp.h(3) > lp.h(2));
    CHECK(lp.h(2) > lp.h(1));
  }
}

TEST_CASE("Earth-Moon L1 and L2 energies") {
  const SystemParams p;
  const LagrangePointSet lp = lagrange_points(p);
  const double x1 = p.p2_x() + bisect_quintic(p.mu);
  CHECK(std::abs(lp.h(1) + effective_potential(x1, 0.0, p)) < 1e-13);
  CHECK(lp.h(1) == doctest::Approx(-1.600172033265).epsilon(1e-12));
  CHECK(lp.h(2) == doctest::Approx(-1.592081704881).epsilon(1e-12));
}

TEST_CASE("L1 spectrum") {
  const SystemParams p;
  const L1Spectrum sp = l1_spectrum(p);
  CHECK(sp.lambda > 0.0);
  CHECK(sp.nu > 0.0);
  CHECK(kTwoPi / sp.nu == doctest::Approx(2.691579548833).epsilon(1e-11));
  // Characteristic polynomial s^4 + (4 - wxx - wyy) s^2 + wxx wyy at s = lambda and s = i nu.
  const LagrangePointSet lp = lagrange_points(p);
  const PotentialHessian h = potential_hessian(lp.l(1).x, 0.0, p);
  auto poly = [&](double s2) { return s2 * s2 + (4.0 - h.xx - h.yy) * s2 + h.xx * h.yy; };
  CHECK(std::abs(poly(sp.lambda * sp.lambda)) < 1e-10);
  CHECK(std::abs(poly(-sp.nu * sp.nu)) < 1e-10);
  // Negation symmetry: the even polynomial takes the same value at -s.
  const Eigen::EigenSolver<Mat4> es(jacobian({lp.l(1).x, 0.0, 0.0, 0.0}, p));
  for (int i = 0; i < 4; ++i) {
    const auto ev = es.eigenvalues()[i];
    bool paired = false;
    for (int j = 0; j < 4; ++j) paired = paired || std::abs(es.eigenvalues()[j] + ev) < 1e-10;
    CHECK(paired);
  }
}
