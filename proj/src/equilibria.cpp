#include "wsb/equilibria.hpp"

#include <algorithm>
#include <complex>
#include <functional>
#include <limits>

#include "wsb/dynamics.hpp"

namespace wsb {

double euler_quintic(double x, double mu) {
  return ((((x - (3.0 - mu)) * x + (3.0 - 2.0 * mu)) * x - mu) * x + 2.0 * mu) * x - mu;
}

namespace {

double euler_quintic_derivative(double x, double mu) {
  return (((5.0 * x - 4.0 * (3.0 - mu)) * x + 3.0 * (3.0 - 2.0 * mu)) * x - 2.0 * mu) * x + 2.0 * mu;
}

// Newton iteration kept inside a sign-change bracket [lo, hi]; falls back to
// bisection whenever the Newton step leaves the bracket or stalls.
double safeguarded_newton(const std::function<double(double)>& f,
                          const std::function<double(double)>& df, double lo, double hi,
                          double x0) {
  double flo = f(lo);
  if (flo == 0.0) return lo;
  if (f(hi) == 0.0) return hi;
  double x = std::clamp(x0, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx < 0.0) == (flo < 0.0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    const double d = df(x);
    double next = (d != 0.0) ? x - fx / d : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x) ||
        hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(x)) {
      x = next;
      break;
    }
    x = next;
  }
  // Polish to the representable neighbour with the smallest residual.
  double best = x;
  double best_res = std::abs(f(x));
  for (double cand : {std::nextafter(x, -1e300), std::nextafter(x, 1e300)}) {
    const double res = std::abs(f(cand));
    if (res < best_res) {
      best = cand;
      best_res = res;
    }
  }
  return best;
}

double axis_force(double x, const SystemParams& params) {
  return potential_gradient(x, 0.0, params).dx;
}

double axis_force_derivative(double x, const SystemParams& params) {
  return potential_hessian(x, 0.0, params).xx;
}

}  // namespace

double quintic_root(const SystemParams& params) {
  params.validate();
  const double mu = params.mu;
  auto f = [mu](double x) { return euler_quintic(x, mu); };
  auto df = [mu](double x) { return euler_quintic_derivative(x, mu); };
  // f(0) = -mu < 0 and f(1) = 1 - mu > 0.
  return safeguarded_newton(f, df, 0.0, 1.0, std::cbrt(mu / 3.0));
}

LagrangePointSet lagrange_points(const SystemParams& params) {
  params.validate();
  const double mu = params.mu;
  LagrangePointSet set;
  set.x_plus = quintic_root(params);

  auto f = [&](double x) { return axis_force(x, params); };
  auto df = [&](double x) { return axis_force_derivative(x, params); };

  const double p2 = params.p2_x();
  const double p1 = params.p1_x();
  const double gap = 1e-9;
  const double hill = std::cbrt(mu / 3.0);
  const double x_l1 = p2 + set.x_plus;
  const double x_l2 = safeguarded_newton(f, df, p2 - 2.0, p2 - gap, p2 - hill);
  const double x_l3 = safeguarded_newton(f, df, p1 + gap, p1 + 2.0, p1 + 1.0);

  set.position[0] = {x_l1, 0.0};
  set.position[1] = {x_l2, 0.0};
  set.position[2] = {x_l3, 0.0};
  set.position[3] = {mu - 0.5, std::sqrt(3.0) / 2.0};
  set.position[4] = {mu - 0.5, -std::sqrt(3.0) / 2.0};
  for (int i = 0; i < 5; ++i) {
    set.energy[i] = -effective_potential(set.position[i].x, set.position[i].y, params);
  }
  return set;
}

L1Spectrum l1_spectrum(const SystemParams& params) {
  const LagrangePointSet set = lagrange_points(params);
  const Mat4 j = jacobian({set.l(1).x, 0.0, 0.0, 0.0}, params);
  Eigen::EigenSolver<Mat4> solver(j, false);
  const auto ev = solver.eigenvalues();

  L1Spectrum spec;
  int n_real = 0;
  int n_imag = 0;
  for (int i = 0; i < 4; ++i) {
    const std::complex<double> z = ev[i];
    const double scale = std::max(1.0, std::abs(z));
    if (std::abs(z.imag()) <= 1e-10 * scale) {
      ++n_real;
      spec.lambda = std::max(spec.lambda, std::abs(z.real()));
    } else if (std::abs(z.real()) <= 1e-10 * scale) {
      ++n_imag;
      spec.nu = std::max(spec.nu, std::abs(z.imag()));
    }
  }
  if (n_real != 2 || n_imag != 2 || !(spec.lambda > 0.0) || !(spec.nu > 0.0)) {
    throw Error(ErrorCode::SpectrumMismatch, "linearization at L1 is not of saddle-center type");
  }
  return spec;
}

}  // namespace wsb
