#include "wsb/propagation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "wsb/dop853.hpp"
#include "wsb/dynamics.hpp"

namespace wsb {

const char* to_string(Termination t) {
  switch (t) {
    case Termination::TimeReached: return "time-reached";
    case Termination::TerminalEvent: return "terminal-event";
    case Termination::Collision: return "collision";
    case Termination::StepFailure: return "step-failure";
  }
  return "unknown";
}

EventSpec EventSpec::angle(double theta0, CrossingDirection dir, EventAction act) {
  return {EventKind::AngleCrossing, theta0, dir, act, {}};
}
EventSpec EventSpec::radius(double distance, CrossingDirection dir, EventAction act) {
  return {EventKind::RadiusThreshold, distance, dir, act, {}};
}
EventSpec EventSpec::x_plane(double x, CrossingDirection dir, EventAction act) {
  return {EventKind::XPlane, x, dir, act, {}};
}
EventSpec EventSpec::y_crossing(CrossingDirection dir, EventAction act) {
  return {EventKind::YCrossing, 0.0, dir, act, {}};
}
EventSpec EventSpec::custom(std::function<double(const RotatingState&, double)> g, CrossingDirection dir,
                            EventAction act) {
  return {EventKind::Custom, 0.0, dir, act, std::move(g)};
}

double EventSpec::evaluate(const RotatingState& s, double theta, const SystemParams& params) const {
  switch (kind) {
    case EventKind::AngleCrossing:
      return -(s.x - params.mu) * std::sin(value) + s.y * std::cos(value);
    case EventKind::RadiusThreshold:
      return distance_to_p1(s.x, s.y, params) - value;
    case EventKind::XPlane:
      return s.x - value;
    case EventKind::YCrossing:
      return s.y;
    case EventKind::Custom:
      return function ? function(s, theta) : 0.0;
  }
  return 0.0;
}

bool EventSpec::accepts(const RotatingState& s, const SystemParams& params) const {
  if (kind != EventKind::AngleCrossing) return true;
  return (s.x - params.mu) * std::cos(value) + s.y * std::sin(value) > 0.0;
}

namespace {

constexpr std::size_t kBase = 5;  // x, y, vx, vy, unwrapped theta

inline void base_rhs(const double* y, double* dy, double mu) {
  vector_field_kernel(y, dy, mu);
  const double dx = y[0] - mu;
  dy[4] = (dx * y[3] - y[1] * y[2]) / (dx * dx + y[1] * y[1]);
}

struct BaseRhs {
  double mu;
  void operator()(double, const double* y, double* dy) const { base_rhs(y, dy, mu); }
};

struct StmRhs {
  SystemParams params;
  void operator()(double, const double* y, double* dy) const {
    base_rhs(y, dy, params.mu);
    const PotentialHessian h = potential_hessian(y[0], y[1], params);
    const double* phi = y + kBase;
    double* dphi = dy + kBase;
    for (int j = 0; j < 4; ++j) {
      dphi[0 * 4 + j] = phi[2 * 4 + j];
      dphi[1 * 4 + j] = phi[3 * 4 + j];
      dphi[2 * 4 + j] = h.xx * phi[0 * 4 + j] + h.xy * phi[1 * 4 + j] + 2.0 * phi[3 * 4 + j];
      dphi[3 * 4 + j] = h.xy * phi[0 * 4 + j] + h.yy * phi[1 * 4 + j] - 2.0 * phi[2 * 4 + j];
    }
  }
};

template <std::size_t N>
struct RawResult {
  Trajectory traj;
  std::array<double, N> y_final{};
  std::vector<std::array<double, N>> sampled;
  std::vector<std::array<double, N>> at_events;
};

inline RotatingState state_of(const double* y) { return {y[0], y[1], y[2], y[3]}; }

// Bracketed Illinois iteration on [a, b] with g(a) g(b) < 0.
template <class G>
double refine_root(G&& g, double a, double b, double ga, double gb) {
  const double tol = 1e-15 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
  int side = 0;
  for (int it = 0; it < 200; ++it) {
    double c = (a * gb - b * ga) / (gb - ga);
    if (!(c > std::min(a, b) && c < std::max(a, b))) c = 0.5 * (a + b);
    const double gc = g(c);
    if (gc == 0.0) return c;
    if ((gc > 0.0) == (gb > 0.0)) {
      b = c;
      gb = gc;
      if (side == -1) ga *= 0.5;
      side = -1;
    } else {
      a = c;
      ga = gc;
      if (side == 1) gb *= 0.5;
      side = 1;
    }
    if (std::abs(b - a) <= tol) break;
  }
  return std::abs(ga) < std::abs(gb) ? a : b;
}

double event_rate(const EventSpec& ev, const RotatingState& s, const SystemParams& params, double secant) {
  switch (ev.kind) {
    case EventKind::AngleCrossing: {
      const double dx = s.x - params.mu;
      return (dx * s.vy - s.y * s.vx) / (dx * dx + s.y * s.y);
    }
    case EventKind::RadiusThreshold: {
      const double dx = s.x - params.mu;
      return (dx * s.vx + s.y * s.vy) / std::hypot(dx, s.y);
    }
    case EventKind::XPlane: return s.vx;
    case EventKind::YCrossing: return s.vy;
    case EventKind::Custom: return secant;
  }
  return secant;
}

struct Candidate {
  double t;
  int id;
  double rate;
};

template <std::size_t N, class Rhs>
RawResult<N> run(Rhs rhs, std::array<double, N> y0, double duration, const std::vector<EventSpec>& user_events,
                 const SystemParams& params, const PropagationOptions& opt) {
  params.validate();
  RawResult<N> out;
  Trajectory& traj = out.traj;
  const RotatingState s0 = state_of(y0.data());
  if (std::isnan(opt.initial_theta)) {
    y0[4] = std::atan2(s0.y, s0.x - params.mu);
  } else {
    y0[4] = opt.initial_theta;
  }
  const double t0 = opt.t0;
  const double t_end = t0 + duration;
  traj.t0 = t0;
  traj.t_final = t0;
  traj.final_state = s0;
  traj.final_theta = y0[4];
  out.y_final = y0;

  const double r1_0 = distance_to_p1(s0.x, s0.y, params);
  const double r2_0 = distance_to_p2(s0.x, s0.y, params);
  if (r1_0 <= params.r_min || r2_0 <= params.r_min) {
    traj.termination = Termination::Collision;
    if (opt.throw_on_failure) check_collision_guard(s0.x, s0.y, params);
    return out;
  }
  traj.energy0 = hamiltonian(s0, params);
  if (opt.record_samples) traj.samples.push_back({t0, s0, y0[4]});
  if (duration == 0.0) {
    for (double ts : opt.sample_times) {
      if (ts == t0) {
        traj.sampled.push_back({t0, s0, y0[4]});
        out.sampled.push_back(y0);
      }
    }
    return out;
  }

  const double dir = duration > 0.0 ? 1.0 : -1.0;
  Dop853Options dopt;
  dopt.rtol = opt.rtol;
  dopt.atol = opt.atol;
  dopt.h_max = opt.max_step;
  Dop853<N, Rhs> integ(rhs, dopt);
  integ.reset(t0, y0, dir);

  // User events followed by the two collision guards.
  const int n_user = static_cast<int>(user_events.size());
  const int n_ev = n_user + 2;
  auto eval_event = [&](int id, const double* y) {
    const RotatingState s = state_of(y);
    if (id < n_user) return user_events[id].evaluate(s, y[4], params);
    if (id == n_user) return distance_to_p1(s.x, s.y, params) - params.r_min;
    return distance_to_p2(s.x, s.y, params) - params.r_min;
  };
  std::vector<double> g_prev(n_ev);
  std::vector<bool> armed(n_ev, true);
  for (int i = 0; i < n_ev; ++i) {
    g_prev[i] = eval_event(i, y0.data());
    // An event function starting at zero is armed only after it leaves zero.
    if (std::abs(g_prev[i]) <= 1e-14) armed[i] = false;
  }

  std::size_t next_sample = 0;
  while (next_sample < opt.sample_times.size() && (opt.sample_times[next_sample] - t0) * dir < 0.0) ++next_sample;
  if (next_sample < opt.sample_times.size() && opt.sample_times[next_sample] == t0) {
    traj.sampled.push_back({t0, s0, y0[4]});
    out.sampled.push_back(y0);
    ++next_sample;
  }

  const double revs_scale = opt.drift_tolerance;
  std::vector<double> g_new(n_ev);
  std::vector<Candidate> cands;
  for (;;) {
    if (traj.steps >= opt.max_steps || !integ.step(t_end)) {
      traj.termination = Termination::StepFailure;
      if (opt.throw_on_failure) throw Error(ErrorCode::StepFailure, "step size underflow or step budget exhausted");
      break;
    }
    ++traj.steps;
    const double ta = integ.t_old();
    const double tb = integ.t();
    const auto& yb = integ.y();

    cands.clear();
    for (int i = 0; i < n_ev; ++i) {
      g_new[i] = eval_event(i, yb.data());
      if (!armed[i]) {
        if (std::abs(g_new[i]) > 1e-14) armed[i] = true;
        g_prev[i] = g_new[i];
        continue;
      }
      const bool crossed = (g_prev[i] < 0.0 && g_new[i] >= 0.0) || (g_prev[i] > 0.0 && g_new[i] <= 0.0);
      if (!crossed) {
        g_prev[i] = g_new[i];
        continue;
      }
      const bool increasing = (g_new[i] - g_prev[i]) * dir > 0.0;
      const double t_root =
          g_new[i] == 0.0
              ? tb
              : refine_root([&](double t) { const auto y = integ.dense(t); return eval_event(i, y.data()); }, ta,
                            tb, g_prev[i], g_new[i]);
      const auto yr = integ.dense(t_root);
      const RotatingState sr = state_of(yr.data());
      const double secant = (g_new[i] - g_prev[i]) / (tb - ta);
      g_prev[i] = g_new[i];
      if (i < n_user) {
        const EventSpec& ev = user_events[i];
        if (ev.direction == CrossingDirection::Increasing && !increasing) continue;
        if (ev.direction == CrossingDirection::Decreasing && increasing) continue;
        if (!ev.accepts(sr, params)) continue;
        cands.push_back({t_root, i, event_rate(ev, sr, params, secant)});
      } else if (!increasing) {
        cands.push_back({t_root, i, 0.0});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
      if (a.t != b.t) return (a.t - b.t) * dir < 0.0;
      return a.id < b.id;
    });

    double t_stop = tb;
    bool stop = false;
    for (const Candidate& c : cands) {
      const auto yr = integ.dense(c.t);
      if (c.id >= n_user) {
        traj.termination = Termination::Collision;
        t_stop = c.t;
        stop = true;
        break;
      }
      traj.events.push_back({c.t, state_of(yr.data()), yr[4], c.id, c.rate});
      out.at_events.push_back(yr);
      if (user_events[c.id].action == EventAction::Terminate) {
        traj.termination = Termination::TerminalEvent;
        traj.terminal_event = c.id;
        t_stop = c.t;
        stop = true;
        break;
      }
    }

    while (next_sample < opt.sample_times.size() && (opt.sample_times[next_sample] - t_stop) * dir <= 0.0) {
      const auto ys = integ.dense(opt.sample_times[next_sample]);
      traj.sampled.push_back({opt.sample_times[next_sample], state_of(ys.data()), ys[4]});
      out.sampled.push_back(ys);
      ++next_sample;
    }

    const std::array<double, N> y_here = stop ? integ.dense(t_stop) : yb;
    const RotatingState s_here = state_of(y_here.data());
    if (std::abs(t_stop - traj.t_final) > 0.0 || stop) {
      traj.energy_drift = std::max(traj.energy_drift, std::abs(hamiltonian(s_here, params) - traj.energy0));
      if (opt.record_samples && t_stop != traj.t_final) traj.samples.push_back({t_stop, s_here, y_here[4]});
    }
    traj.t_final = t_stop;
    traj.final_state = s_here;
    traj.final_theta = y_here[4];
    out.y_final = y_here;
    if (stop) break;
    if (tb == t_end) {
      traj.termination = Termination::TimeReached;
      break;
    }
  }

  const double revs = std::abs(traj.final_theta - y0[4]) / kTwoPi;
  const double allowance = revs_scale * std::max(1.0, revs / 50.0);
  traj.drift_flagged = traj.energy_drift > allowance;
  if (traj.drift_flagged && opt.strict_energy) {
    throw Error(ErrorCode::EnergyDriftExceeded, "energy drift exceeds tolerance");
  }
  if (traj.termination == Termination::Collision && opt.throw_on_failure) {
    throw Error(ErrorCode::Collision, "trajectory crossed the collision guard");
  }
  return out;
}

Mat4 stm_of(const std::array<double, kBase + 16>& y) {
  Mat4 m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = y[kBase + 4 * i + j];
  return m;
}

}  // namespace

Trajectory propagate(const RotatingState& s0, double duration, const std::vector<EventSpec>& events,
                     const SystemParams& params, const PropagationOptions& options) {
  std::array<double, kBase> y0{s0.x, s0.y, s0.vx, s0.vy, 0.0};
  return run<kBase>(BaseRhs{params.mu}, y0, duration, events, params, options).traj;
}

StmPropagation propagate_with_stm(const RotatingState& s0, double duration, const SystemParams& params,
                                  const PropagationOptions& options, const std::vector<EventSpec>& events) {
  std::array<double, kBase + 16> y0{};
  y0[0] = s0.x;
  y0[1] = s0.y;
  y0[2] = s0.vx;
  y0[3] = s0.vy;
  for (int i = 0; i < 4; ++i) y0[kBase + 5 * i] = 1.0;
  auto raw = run<kBase + 16>(StmRhs{params}, y0, duration, events, params, options);
  StmPropagation out;
  out.stm = stm_of(raw.y_final);
  for (const auto& y : raw.sampled) out.sampled_stm.push_back(stm_of(y));
  for (const auto& y : raw.at_events) out.event_stm.push_back(stm_of(y));
  out.trajectory = std::move(raw.traj);
  return out;
}

}  // namespace wsb
