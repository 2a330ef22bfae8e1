#pragma once

#include <utility>

#include "wsb/types.hpp"

namespace wsb {

struct PotentialGradient {
  double dx = 0.0;
  double dy = 0.0;
};

struct PotentialHessian {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;
};

double distance_to_p1(double x, double y, const SystemParams& params);
double distance_to_p2(double x, double y, const SystemParams& params);

/// Throws Collision when (x, y) is within r_min of either primary.
void check_collision_guard(double x, double y, const SystemParams& params);

/// omega(x, y) = (x^2 + y^2)/2 + (1-mu)/r1 + mu/r2 + mu(1-mu)/2.
/// Throws Singularity when (x, y) coincides numerically with a primary.
double effective_potential(double x, double y, const SystemParams& params);
PotentialGradient potential_gradient(double x, double y, const SystemParams& params);
PotentialHessian potential_hessian(double x, double y, const SystemParams& params);

/// Right-hand side of the rotating-frame equations of motion, with the
/// collision guard enforced.
Vec4 vector_field(const RotatingState& s, const SystemParams& params);

/// Unchecked kernel used inside the integrator: out = f(in), where in/out
/// hold (x, y, vx, vy).
inline void vector_field_kernel(const double* in, double* out, double mu) {
  const double dx1 = in[0] - mu;
  const double dx2 = in[0] - mu + 1.0;
  const double y = in[1];
  const double r1sq = dx1 * dx1 + y * y;
  const double r2sq = dx2 * dx2 + y * y;
  const double r1c = r1sq * std::sqrt(r1sq);
  const double r2c = r2sq * std::sqrt(r2sq);
  const double k1 = (1.0 - mu) / r1c;
  const double k2 = mu / r2c;
  out[0] = in[2];
  out[1] = in[3];
  out[2] = 2.0 * in[3] + in[0] - k1 * dx1 - k2 * dx2;
  out[3] = -2.0 * in[2] + y - k1 * y - k2 * y;
}

/// H = (vx^2 + vy^2)/2 - omega(x, y).
double hamiltonian(const RotatingState& s, const SystemParams& params);

/// Jacobian of vector_field at s.
Mat4 jacobian(const RotatingState& s, const SystemParams& params);

/// Derivative of the pair (s, Phi) with dPhi/dt = J(s) Phi.
std::pair<Vec4, Mat4> variational_field(const RotatingState& s, const Mat4& phi,
                                        const SystemParams& params);

PolarState polar_from_cartesian(const RotatingState& s, const SystemParams& params);
RotatingState cartesian_from_polar(const PolarState& p, const SystemParams& params);

/// Which osculating ellipse to take when (r, rdot, e) admits two.
enum class EllipseRoot {
  NearPeriapsis,  // smaller |tau|
  FarFromPeriapsis,
  Unique,  // throw AmbiguousEllipse if two roots are admissible
};

struct WsbStart {
  RotatingState state;
  double energy = 0.0;
  OsculatingElements elements;
};

/// Builds the initial state on the ray theta0 about P1 from radius, radial
/// velocity and osculating eccentricity. The osculating (inertial) rate is
/// sqrt(p(1-mu))/r^2 and the rotating-frame rate is that minus one; only
/// ellipses with positive rotating-frame rate are admissible.
WsbStart state_from_wsb_coords(double r0, double rdot0, double theta0, double e0,
                               const SystemParams& params,
                               EllipseRoot root = EllipseRoot::NearPeriapsis);

/// Osculating two-body elements about P1 with gravitational parameter 1-mu.
/// Throws HyperbolicOsculation when e >= 1.
OsculatingElements elements_from_state(const RotatingState& s, const SystemParams& params);

/// State on the section theta = theta0 at energy H with the given (r, rdot)
/// and positive rotating-frame angular rate. Throws OutOfRange when the
/// energy does not admit such a state.
RotatingState state_on_section(double r, double rdot, double theta0, double energy,
                               const SystemParams& params);

}  // namespace wsb
