#include "wsb/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wsb/dynamics.hpp"
#include "wsb/equilibria.hpp"

namespace wsb {

PropagationOptions lyapunov_propagation(const CorrectionOptions& opt) {
  PropagationOptions p;
  p.rtol = opt.rtol;
  p.atol = opt.atol;
  p.record_samples = false;
  return p;
}

namespace {

double center_mode_vy_factor(const SystemParams& params, double* nu_out = nullptr) {
  const LagrangePointSet lp = lagrange_points(params);
  const L1Spectrum spec = l1_spectrum(params);
  const PotentialHessian h = potential_hessian(lp.l(1).x, 0.0, params);
  if (nu_out) *nu_out = spec.nu;
  return -(spec.nu * spec.nu + h.xx) / 2.0;
}

}  // namespace

LyapunovGuess initial_guess(double amplitude, const SystemParams& params) {
  double nu = 0.0;
  const double k = center_mode_vy_factor(params, &nu);
  const double x_l1 = lagrange_points(params).l(1).x;
  return {{x_l1 + amplitude, 0.0, 0.0, k * amplitude}, kTwoPi / nu};
}

double linear_energy_offset(double amplitude, const SystemParams& params) {
  const double k = center_mode_vy_factor(params);
  const double x_l1 = lagrange_points(params).l(1).x;
  const double wxx = potential_hessian(x_l1, 0.0, params).xx;
  return 0.5 * (k * k - wxx) * amplitude * amplitude;
}

namespace {

struct HalfPeriod {
  double t = 0.0;
  RotatingState state;
  Mat4 stm;
};

HalfPeriod half_period_crossing(const RotatingState& s0, double budget, const SystemParams& params,
                                const CorrectionOptions& opt) {
  // Starting with vy0 < 0 the orbit dips below the axis; the next crossing
  // is upward.
  const CrossingDirection dir = s0.vy < 0.0 ? CrossingDirection::Increasing : CrossingDirection::Decreasing;
  const auto res = propagate_with_stm(s0, budget, params, lyapunov_propagation(opt),
                                      {EventSpec::y_crossing(dir, EventAction::Terminate)});
  if (res.trajectory.termination != Termination::TerminalEvent) {
    throw Error(ErrorCode::NoConvergence, "no half-period axis crossing within the time budget");
  }
  return {res.trajectory.t_final, res.trajectory.final_state, res.stm};
}

void fill_spectrum(LyapunovOrbit& orbit, const SystemParams& params, const CorrectionOptions& opt) {
  // The monodromy is assembled from quarter-period factors. Its determinant
  // is taken as the product of the factor determinants: the full matrix has
  // condition number near lambda^2, which swamps a direct evaluation.
  constexpr int kSegments = 4;
  RotatingState s = orbit.initial;
  Mat4 m = Mat4::Identity();
  double det = 1.0;
  for (int k = 0; k < kSegments; ++k) {
    const auto seg = propagate_with_stm(s, orbit.period / kSegments, params, lyapunov_propagation(opt));
    m = seg.stm * m;
    det *= seg.stm.determinant();
    s = seg.trajectory.final_state;
  }
  orbit.monodromy = m;
  orbit.monodromy_determinant = det;
  orbit.residual = (s.as_vector() - orbit.initial.as_vector()).norm();

  Eigen::EigenSolver<Mat4> solver(orbit.monodromy, true);
  const auto vals = solver.eigenvalues();
  const auto vecs = solver.eigenvectors();
  int iu = -1;
  int is = -1;
  for (int i = 0; i < 4; ++i) {
    orbit.multipliers[i] = vals[i];
    if (std::abs(vals[i].imag()) > 1e-9 * std::max(1.0, std::abs(vals[i]))) continue;
    const double re = vals[i].real();
    if (iu < 0 || std::abs(re) > std::abs(vals[iu].real())) iu = i;
    if (is < 0 || std::abs(re) < std::abs(vals[is].real())) is = i;
  }
  if (iu < 0 || is < 0 || iu == is || !(vals[iu].real() > 1.0 + 1e-3)) {
    throw Error(ErrorCode::NonHyperbolic, "monodromy has no real multiplier pair away from the unit circle");
  }
  orbit.unstable_multiplier = vals[iu].real();
  orbit.stable_multiplier = vals[is].real();
  orbit.unstable_direction = vecs.col(iu).real().normalized();
  orbit.stable_direction = vecs.col(is).real().normalized();
}

}  // namespace

LyapunovOrbit differential_correct(const LyapunovGuess& guess, const SystemParams& params,
                                   const CorrectionOptions& opt) {
  params.validate();
  RotatingState s0{guess.state.x, 0.0, 0.0, guess.state.vy};
  const double budget = std::max(guess.period, 1.0) * 1.5;
  LyapunovOrbit orbit;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const HalfPeriod hp = half_period_crossing(s0, budget, params, opt);
    const Vec4 f = vector_field(hp.state, params);
    const double vx = hp.state.vx;
    const double denom = hp.stm(2, 3) - hp.stm(1, 3) * f[2] / f[1];
    if (!(std::abs(denom) > 1e-12) || !std::isfinite(denom)) {
      throw Error(ErrorCode::SingularCorrection, "half-period sensitivity is singular");
    }
    const double delta = -vx / denom;
    orbit.iterations = it;
    if (std::abs(vx) <= opt.tolerance) {
      orbit.last_correction = std::abs(delta);
      orbit.initial = s0;
      orbit.period = 2.0 * hp.t;
      break;
    }
    s0.vy += delta;
    if (it == opt.max_iterations) {
      std::ostringstream os;
      os << "half-period |vx| = " << std::abs(vx) << " after " << it << " iterations";
      throw Error(ErrorCode::NoConvergence, os.str());
    }
  }
  orbit.energy = hamiltonian(orbit.initial, params);
  orbit.amplitude = std::abs(orbit.initial.x - lagrange_points(params).l(1).x);
  fill_spectrum(orbit, params, opt);
  return orbit;
}

LyapunovOrbit orbit_at_energy(double energy, const SystemParams& params, std::optional<double> upper,
                              const CorrectionOptions& opt) {
  const LagrangePointSet lp = lagrange_points(params);
  const double lo = lp.h(1);
  const double hi = upper.value_or(lp.h(2));
  if (!(energy > lo && energy < hi)) {
    std::ostringstream os;
    os.precision(12);
    os << "energy " << energy << " outside (" << lo << ", " << hi << ")";
    throw Error(ErrorCode::OutOfRange, os.str());
  }

  // Continuation in amplitude from the linear regime until the target
  // energy is bracketed.
  const double a_linear = std::sqrt((energy - lo) / linear_energy_offset(1.0, params));
  double a_prev = std::min(1e-3, 0.5 * a_linear);
  LyapunovOrbit prev = differential_correct(initial_guess(a_prev, params), params, opt);
  if (prev.energy >= energy) {
    a_prev = 0.25 * a_linear;
    prev = differential_correct(initial_guess(a_prev, params), params, opt);
  }
  LyapunovOrbit older = prev;
  double a_older = a_prev;
  bool have_older = false;
  LyapunovOrbit next = prev;
  double a_next = a_prev;
  for (int k = 0; k < 200; ++k) {
    a_next = std::min(a_prev * 1.5, a_prev + 0.01);
    LyapunovGuess g = initial_guess(a_next, params);
    if (have_older) {
      const double slope = (prev.initial.vy - older.initial.vy) / (a_prev - a_older);
      g.state.vy = prev.initial.vy + slope * (a_next - a_prev);
    } else {
      g.state.vy = prev.initial.vy * a_next / a_prev;
    }
    g.period = prev.period;
    next = differential_correct(g, params, opt);
    if (next.energy >= energy) break;
    older = prev;
    a_older = a_prev;
    prev = next;
    a_prev = a_next;
    have_older = true;
    if (k == 199) throw Error(ErrorCode::NoConvergence, "amplitude continuation did not bracket the energy");
  }

  // Illinois iteration on amplitude; vy0 guesses interpolated from the bracket.
  double a_lo = a_prev, a_hi = a_next;
  LyapunovOrbit o_lo = prev, o_hi = next;
  double f_lo = o_lo.energy - energy, f_hi = o_hi.energy - energy;
  int side = 0;
  for (int it = 0; it < 100; ++it) {
    if (std::abs(f_hi) < 1e-13) return o_hi;
    if (std::abs(f_lo) < 1e-13) return o_lo;
    double a = (a_lo * f_hi - a_hi * f_lo) / (f_hi - f_lo);
    if (!(a > a_lo && a < a_hi)) a = 0.5 * (a_lo + a_hi);
    LyapunovGuess g = initial_guess(a, params);
    g.state.vy = o_lo.initial.vy + (o_hi.initial.vy - o_lo.initial.vy) * (a - a_lo) / (a_hi - a_lo);
    g.period = o_lo.period;
    LyapunovOrbit o = differential_correct(g, params, opt);
    const double f = o.energy - energy;
    if (std::abs(f) < 1e-13 || a_hi - a_lo < 1e-15) return o;
    if ((f > 0.0) == (f_hi > 0.0)) {
      a_hi = a;
      o_hi = o;
      f_hi = f;
      if (side == -1) f_lo *= 0.5;
      side = -1;
    } else {
      a_lo = a;
      o_lo = o;
      f_lo = f;
      if (side == 1) f_hi *= 0.5;
      side = 1;
    }
  }
  const LyapunovOrbit& best = std::abs(o_lo.energy - energy) < std::abs(o_hi.energy - energy) ? o_lo : o_hi;
  if (std::abs(best.energy - energy) < 1e-11) return best;
  throw Error(ErrorCode::NoConvergence, "energy targeting did not converge");
}

std::vector<OrbitPoint> orbit_points(const LyapunovOrbit& orbit, const std::vector<double>& phases,
                                     const SystemParams& params, const CorrectionOptions& opt) {
  PropagationOptions p = lyapunov_propagation(opt);
  p.sample_times.reserve(phases.size());
  for (double s : phases) p.sample_times.push_back(s * orbit.period);
  if (!std::is_sorted(p.sample_times.begin(), p.sample_times.end())) {
    throw Error(ErrorCode::InvalidArgument, "orbit phases must be sorted");
  }
  const double t_end = p.sample_times.empty() ? 0.0 : std::max(p.sample_times.back(), 0.0);
  const auto res = propagate_with_stm(orbit.initial, t_end, params, p);
  std::vector<OrbitPoint> out;
  out.reserve(phases.size());
  for (std::size_t i = 0; i < res.trajectory.sampled.size(); ++i) {
    OrbitPoint pt;
    pt.state = res.trajectory.sampled[i].state;
    pt.stable_direction = (res.sampled_stm[i] * orbit.stable_direction).normalized();
    pt.unstable_direction = (res.sampled_stm[i] * orbit.unstable_direction).normalized();
    out.push_back(pt);
  }
  return out;
}

}  // namespace wsb
