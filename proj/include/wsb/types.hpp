#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace wsb {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Earth-Moon mass ratio used throughout the test and acceptance suites.
inline constexpr double kEarthMoonMu = 0.0121505856;

enum class ErrorCode {
  InvalidArgument,
  Singularity,
  Collision,
  StepFailure,
  EnergyDriftExceeded,
  NoAdmissibleEllipse,
  AmbiguousEllipse,
  HyperbolicOsculation,
  SpectrumMismatch,
  NoConvergence,
  SingularCorrection,
  OutOfRange,
  WrongBranch,
  NonHyperbolic,
  CutNotReached,
  CutNotClosed,
  NotOnBoundary,
  NotIsolating,
  EmptyRange,
  BracketInvalid,
  ConfigError,
};

const char* to_string(ErrorCode code);

/// Every library failure is reported through this exception; the code is
/// machine-readable and the message carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

struct SystemParams {
  double mu = kEarthMoonMu;
  double r_min = 1e-4;

  void validate() const;
  /// Heavier primary P1 sits at (mu, 0), lighter primary P2 at (mu - 1, 0).
  double p1_x() const { return mu; }
  double p2_x() const { return mu - 1.0; }
};

struct RotatingState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;

  std::array<double, 4> as_array() const { return {x, y, vx, vy}; }
  static RotatingState from(const double* v) { return {v[0], v[1], v[2], v[3]}; }
  Eigen::Vector4d as_vector() const { return {x, y, vx, vy}; }
  static RotatingState from(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }
};

/// Polar coordinates about P1. `thetadot` is the rotating-frame angular rate.
struct PolarState {
  double r = 0.0;
  double rdot = 0.0;
  double theta = 0.0;
  double thetadot = 0.0;
};

struct OsculatingElements {
  double a = 0.0;    // semi-major axis
  double e = 0.0;    // eccentricity
  double phi = 0.0;  // argument of periapsis
  double tau = 0.0;  // true anomaly
};

using Mat4 = Eigen::Matrix4d;
using Vec4 = Eigen::Vector4d;

/// Wraps an angle into [0, 2*pi).
inline double wrap_two_pi(double angle) {
  double w = std::fmod(angle, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

/// Wraps an angle into [-pi, pi).
inline double wrap_pi(double angle) { return wrap_two_pi(angle + kPi) - kPi; }

}  // namespace wsb
