#pragma once

#include <functional>
#include <limits>
#include <vector>

#include "wsb/types.hpp"

namespace wsb {

enum class EventKind {
  AngleCrossing,    // half-line theta = value about P1
  RadiusThreshold,  // distance to P1 equals value
  XPlane,           // x = value
  YCrossing,        // y = 0
  Custom,           // sign change of a user function
};

/// Crossing direction measured in physical (forward) time, whatever the
/// integration direction.
enum class CrossingDirection { Any, Increasing, Decreasing };

enum class EventAction { Record, Terminate };

struct EventSpec {
  EventKind kind = EventKind::Custom;
  double value = 0.0;
  CrossingDirection direction = CrossingDirection::Any;
  EventAction action = EventAction::Record;
  /// Only for EventKind::Custom; receives the state and unwrapped theta.
  std::function<double(const RotatingState&, double)> function;

  static EventSpec angle(double theta0, CrossingDirection dir, EventAction act = EventAction::Record);
  static EventSpec radius(double distance, CrossingDirection dir, EventAction act = EventAction::Terminate);
  static EventSpec x_plane(double x, CrossingDirection dir, EventAction act = EventAction::Terminate);
  static EventSpec y_crossing(CrossingDirection dir, EventAction act = EventAction::Record);
  static EventSpec custom(std::function<double(const RotatingState&, double)> g, CrossingDirection dir,
                          EventAction act = EventAction::Record);

  /// Scalar event function.
  double evaluate(const RotatingState& s, double theta, const SystemParams& params) const;
  /// Extra acceptance test applied at a located root (the half-line test
  /// for angle crossings).
  bool accepts(const RotatingState& s, const SystemParams& params) const;
};

struct TrajectorySample {
  double t = 0.0;
  RotatingState state;
  double theta = 0.0;  // unwrapped polar angle about P1
};

struct EventRecord {
  double t = 0.0;
  RotatingState state;
  double theta = 0.0;
  int event_id = -1;  // index into the events list
  /// Physical-time derivative of the event function at the root. For angle
  /// crossings this is the rotating-frame angular rate.
  double rate = 0.0;
};

enum class Termination { TimeReached, TerminalEvent, Collision, StepFailure };

const char* to_string(Termination t);

struct Trajectory {
  /// Accepted steps in integration order; t is strictly monotone along the
  /// integration direction (decreasing for backward propagation).
  std::vector<TrajectorySample> samples;
  /// Samples at the requested sample_times (dense output).
  std::vector<TrajectorySample> sampled;
  std::vector<EventRecord> events;
  Termination termination = Termination::TimeReached;
  int terminal_event = -1;
  double t0 = 0.0;
  double t_final = 0.0;
  RotatingState final_state;
  double final_theta = 0.0;
  double energy0 = 0.0;
  double energy_drift = 0.0;  // max |H(t) - H(0)| over accepted steps
  bool drift_flagged = false;
  long steps = 0;
};

struct PropagationOptions {
  double rtol = 1e-13;
  double atol = 1e-13;
  double max_step = 0.0;  // 0: unbounded
  long max_steps = 2'000'000;
  bool record_samples = true;
  /// Times (absolute, monotone in the integration direction) at which the
  /// dense output is sampled into Trajectory::sampled.
  std::vector<double> sample_times;
  /// Unwrapped angle at t0; NaN means atan2 of the initial state.
  double initial_theta = std::numeric_limits<double>::quiet_NaN();
  double t0 = 0.0;
  /// Energy drift allowance per 50 revolutions about P1.
  double drift_tolerance = 1e-10;
  bool strict_energy = false;
  /// When false, Collision and StepFailure are reported in the trajectory
  /// instead of thrown.
  bool throw_on_failure = true;
};

/// Integrates the flow for `duration` (negative for backward time) with
/// event detection. Events are localized on the dense output.
Trajectory propagate(const RotatingState& s0, double duration, const std::vector<EventSpec>& events,
                     const SystemParams& params, const PropagationOptions& options = {});

struct StmPropagation {
  Trajectory trajectory;
  Mat4 stm = Mat4::Identity();           // at the final time
  std::vector<Mat4> sampled_stm;         // at options.sample_times
  std::vector<Mat4> event_stm;           // at each recorded event
};

/// As propagate, also integrating the state-transition matrix from identity.
StmPropagation propagate_with_stm(const RotatingState& s0, double duration, const SystemParams& params,
                                  const PropagationOptions& options = {},
                                  const std::vector<EventSpec>& events = {});

}  // namespace wsb
