#include "wsb/dynamics.hpp"

#include <limits>
#include <sstream>

namespace wsb {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Singularity: return "Singularity";
    case ErrorCode::Collision: return "Collision";
    case ErrorCode::StepFailure: return "StepFailure";
    case ErrorCode::EnergyDriftExceeded: return "EnergyDriftExceeded";
    case ErrorCode::NoAdmissibleEllipse: return "NoAdmissibleEllipse";
    case ErrorCode::AmbiguousEllipse: return "AmbiguousEllipse";
    case ErrorCode::HyperbolicOsculation: return "HyperbolicOsculation";
    case ErrorCode::SpectrumMismatch: return "SpectrumMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularCorrection: return "SingularCorrection";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::WrongBranch: return "WrongBranch";
    case ErrorCode::NonHyperbolic: return "NonHyperbolic";
    case ErrorCode::CutNotReached: return "CutNotReached";
    case ErrorCode::CutNotClosed: return "CutNotClosed";
    case ErrorCode::NotOnBoundary: return "NotOnBoundary";
    case ErrorCode::NotIsolating: return "NotIsolating";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::BracketInvalid: return "BracketInvalid";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

void SystemParams::validate() const {
  if (!(mu > 0.0 && mu <= 0.5)) {
    throw Error(ErrorCode::InvalidArgument, "mass ratio must lie in (0, 1/2]");
  }
  if (!(r_min > 0.0)) throw Error(ErrorCode::InvalidArgument, "r_min must be positive");
}

namespace {

// Below this distance 1/r is not meaningfully representable.
constexpr double kSingularFloor = 1e-150;

}  // namespace

double distance_to_p1(double x, double y, const SystemParams& params) {
  return std::hypot(x - params.mu, y);
}

double distance_to_p2(double x, double y, const SystemParams& params) {
  return std::hypot(x - params.mu + 1.0, y);
}

void check_collision_guard(double x, double y, const SystemParams& params) {
  if (distance_to_p1(x, y, params) <= params.r_min || distance_to_p2(x, y, params) <= params.r_min) {
    std::ostringstream os;
    os << "state (" << x << ", " << y << ") violates the collision guard r_min = " << params.r_min;
    throw Error(ErrorCode::Collision, os.str());
  }
}

double effective_potential(double x, double y, const SystemParams& params) {
  const double mu = params.mu;
  const double r1 = distance_to_p1(x, y, params);
  const double r2 = distance_to_p2(x, y, params);
  if (r1 <= kSingularFloor || r2 <= kSingularFloor) {
    throw Error(ErrorCode::Singularity, "effective potential evaluated at a primary");
  }
  return 0.5 * (x * x + y * y) + (1.0 - mu) / r1 + mu / r2 + 0.5 * mu * (1.0 - mu);
}

PotentialGradient potential_gradient(double x, double y, const SystemParams& params) {
  const double mu = params.mu;
  const double dx1 = x - mu;
  const double dx2 = x - mu + 1.0;
  const double r1 = std::hypot(dx1, y);
  const double r2 = std::hypot(dx2, y);
  if (r1 <= kSingularFloor || r2 <= kSingularFloor) {
    throw Error(ErrorCode::Singularity, "potential gradient evaluated at a primary");
  }
  const double k1 = (1.0 - mu) / (r1 * r1 * r1);
  const double k2 = mu / (r2 * r2 * r2);
  return {x - k1 * dx1 - k2 * dx2, y - k1 * y - k2 * y};
}

PotentialHessian potential_hessian(double x, double y, const SystemParams& params) {
  const double mu = params.mu;
  const double dx1 = x - mu;
  const double dx2 = x - mu + 1.0;
  const double r1sq = dx1 * dx1 + y * y;
  const double r2sq = dx2 * dx2 + y * y;
  if (r1sq <= kSingularFloor || r2sq <= kSingularFloor) {
    throw Error(ErrorCode::Singularity, "potential hessian evaluated at a primary");
  }
  const double r1 = std::sqrt(r1sq);
  const double r2 = std::sqrt(r2sq);
  const double a1 = (1.0 - mu) / (r1sq * r1);
  const double a2 = mu / (r2sq * r2);
  const double b1 = 3.0 * (1.0 - mu) / (r1sq * r1sq * r1);
  const double b2 = 3.0 * mu / (r2sq * r2sq * r2);
  PotentialHessian h;
  h.xx = 1.0 - a1 - a2 + b1 * dx1 * dx1 + b2 * dx2 * dx2;
  h.yy = 1.0 - a1 - a2 + b1 * y * y + b2 * y * y;
  h.xy = b1 * dx1 * y + b2 * dx2 * y;
  return h;
}

Vec4 vector_field(const RotatingState& s, const SystemParams& params) {
  check_collision_guard(s.x, s.y, params);
  const auto in = s.as_array();
  Vec4 out;
  vector_field_kernel(in.data(), out.data(), params.mu);
  return out;
}

double hamiltonian(const RotatingState& s, const SystemParams& params) {
  return 0.5 * (s.vx * s.vx + s.vy * s.vy) - effective_potential(s.x, s.y, params);
}

Mat4 jacobian(const RotatingState& s, const SystemParams& params) {
  const PotentialHessian h = potential_hessian(s.x, s.y, params);
  Mat4 j = Mat4::Zero();
  j(0, 2) = 1.0;
  j(1, 3) = 1.0;
  j(2, 0) = h.xx;
  j(2, 1) = h.xy;
  j(2, 3) = 2.0;
  j(3, 0) = h.xy;
  j(3, 1) = h.yy;
  j(3, 2) = -2.0;
  return j;
}

std::pair<Vec4, Mat4> variational_field(const RotatingState& s, const Mat4& phi,
                                        const SystemParams& params) {
  const Vec4 ds = vector_field(s, params);
  return {ds, jacobian(s, params) * phi};
}

PolarState polar_from_cartesian(const RotatingState& s, const SystemParams& params) {
  const double dx = s.x - params.mu;
  const double r = std::hypot(dx, s.y);
  if (!(r > 0.0)) throw Error(ErrorCode::Singularity, "polar angle undefined at P1");
  PolarState p;
  p.r = r;
  p.theta = wrap_two_pi(std::atan2(s.y, dx));
  p.rdot = (dx * s.vx + s.y * s.vy) / r;
  p.thetadot = (dx * s.vy - s.y * s.vx) / (r * r);
  return p;
}

RotatingState cartesian_from_polar(const PolarState& p, const SystemParams& params) {
  if (!(p.r > 0.0)) throw Error(ErrorCode::Singularity, "polar angle undefined at P1");
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  return {p.r * c + params.mu, p.r * s, p.rdot * c - p.r * p.thetadot * s,
          p.rdot * s + p.r * p.thetadot * c};
}

namespace {

struct EllipseCandidate {
  double p = 0.0;
  double tau = 0.0;
  double osc_rate = 0.0;
};

}  // namespace

WsbStart state_from_wsb_coords(double r0, double rdot0, double theta0, double e0,
                               const SystemParams& params, EllipseRoot root) {
  params.validate();
  if (!(r0 > params.r_min)) throw Error(ErrorCode::InvalidArgument, "r0 must exceed r_min");
  if (!(e0 >= 0.0 && e0 < 1.0)) throw Error(ErrorCode::InvalidArgument, "e0 must lie in [0, 1)");

  const double k = 1.0 - params.mu;
  // p^2/r^2 + p (rdot^2/k - 2/r) + (1 - e^2) = 0
  const double qa = 1.0 / (r0 * r0);
  const double qb = rdot0 * rdot0 / k - 2.0 / r0;
  const double qc = 1.0 - e0 * e0;
  double disc = qb * qb - 4.0 * qa * qc;
  if (std::abs(disc) <= 64.0 * std::numeric_limits<double>::epsilon() * qb * qb) disc = 0.0;
  if (disc < 0.0) {
    throw Error(ErrorCode::NoAdmissibleEllipse, "no real semi-latus rectum for (r0, rdot0, e0)");
  }
  const double sq = std::sqrt(disc);
  // Numerically stable pair of roots.
  const double qq = -0.5 * (qb + (qb >= 0.0 ? sq : -sq));
  double roots[2];
  int nroots = 0;
  if (qq != 0.0) {
    roots[nroots++] = qq / qa;
    if (disc > 0.0) roots[nroots++] = qc / qq;
  }

  EllipseCandidate cand[2];
  int ncand = 0;
  for (int i = 0; i < nroots; ++i) {
    const double p = roots[i];
    if (!(p > 0.0)) continue;
    const double osc_rate = std::sqrt(p * k) / (r0 * r0);
    if (!(osc_rate - 1.0 > 0.0)) continue;
    double tau = 0.0;
    if (e0 > 0.0) {
      const double ecos = p / r0 - 1.0;
      const double esin = rdot0 * std::sqrt(p / k);
      tau = wrap_two_pi(std::atan2(esin, ecos));
    }
    cand[ncand++] = {p, tau, osc_rate};
  }
  if (ncand == 0) {
    throw Error(ErrorCode::NoAdmissibleEllipse,
                "no positive root with positive rotating-frame angular rate");
  }
  int pick = 0;
  if (ncand == 2) {
    if (root == EllipseRoot::Unique) {
      throw Error(ErrorCode::AmbiguousEllipse, "two admissible osculating ellipses");
    }
    const bool first_nearer = std::abs(wrap_pi(cand[0].tau)) <= std::abs(wrap_pi(cand[1].tau));
    pick = (first_nearer == (root == EllipseRoot::NearPeriapsis)) ? 0 : 1;
  }
  const EllipseCandidate& c = cand[pick];

  WsbStart out;
  out.elements.e = e0;
  out.elements.a = c.p / (1.0 - e0 * e0);
  out.elements.tau = c.tau;
  out.elements.phi = wrap_two_pi(theta0 - c.tau);
  PolarState polar{r0, rdot0, wrap_two_pi(theta0), c.osc_rate - 1.0};
  out.state = cartesian_from_polar(polar, params);
  out.energy = hamiltonian(out.state, params);
  return out;
}

OsculatingElements elements_from_state(const RotatingState& s, const SystemParams& params) {
  const double k = 1.0 - params.mu;
  const double dx = s.x - params.mu;
  const double dy = s.y;
  const double r = std::hypot(dx, dy);
  if (!(r > params.r_min)) throw Error(ErrorCode::Collision, "osculating elements inside r_min");
  // Velocity relative to P1 seen from the inertial frame.
  const double ux = s.vx - dy;
  const double uy = s.vy + dx;
  const double v2 = ux * ux + uy * uy;
  const double rv = dx * ux + dy * uy;
  const double ex = ((v2 - k / r) * dx - rv * ux) / k;
  const double ey = ((v2 - k / r) * dy - rv * uy) / k;
  const double e = std::hypot(ex, ey);
  const double energy = 0.5 * v2 - k / r;
  if (!(e < 1.0) || !(energy < 0.0)) {
    throw Error(ErrorCode::HyperbolicOsculation, "osculating conic is not an ellipse");
  }
  OsculatingElements el;
  el.a = -k / (2.0 * energy);
  el.e = e;
  const double theta = wrap_two_pi(std::atan2(dy, dx));
  if (e < 1e-14) {
    el.phi = theta;
    el.tau = 0.0;
  } else {
    el.phi = wrap_two_pi(std::atan2(ey, ex));
    el.tau = wrap_two_pi(theta - el.phi);
  }
  return el;
}

RotatingState state_on_section(double r, double rdot, double theta0, double energy,
                               const SystemParams& params) {
  const double c = std::cos(theta0);
  const double s = std::sin(theta0);
  const double x = params.mu + r * c;
  const double y = r * s;
  const double v2 = 2.0 * (energy + effective_potential(x, y, params));
  const double tangential2 = v2 - rdot * rdot;
  if (!(tangential2 > 0.0)) {
    throw Error(ErrorCode::OutOfRange, "energy admits no positive angular rate at this section point");
  }
  const double thetadot = std::sqrt(tangential2) / r;
  return cartesian_from_polar({r, rdot, theta0, thetadot}, params);
}

}  // namespace wsb
