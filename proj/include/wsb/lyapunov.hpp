#pragma once

#include <array>
#include <complex>
#include <optional>

#include "wsb/propagation.hpp"
#include "wsb/types.hpp"

namespace wsb {

struct LyapunovGuess {
  RotatingState state;  // (x0, 0, 0, vy0)
  double period = 0.0;
};

/// Planar Lyapunov orbit about L1, anchored at its perpendicular x-axis
/// crossing on the P1 side of L1.
struct LyapunovOrbit {
  RotatingState initial;
  double period = 0.0;
  double energy = 0.0;
  double amplitude = 0.0;  // |x0 - x_L1|
  Mat4 monodromy = Mat4::Identity();
  double monodromy_determinant = 1.0;
  std::array<std::complex<double>, 4> multipliers{};
  double unstable_multiplier = 0.0;  // real, > 1
  double stable_multiplier = 0.0;    // real, 1/unstable up to round-off
  Vec4 unstable_direction = Vec4::Zero();  // unit eigenvectors at `initial`
  Vec4 stable_direction = Vec4::Zero();
  double residual = 0.0;  // |phi_T(s0) - s0|
  int iterations = 0;
  double last_correction = 0.0;  // |delta vy0| of the final Newton update
};

struct CorrectionOptions {
  int max_iterations = 25;
  /// Target for |vx| at the half-period crossing.
  double tolerance = 1e-13;
  double rtol = 1e-14;
  double atol = 1e-14;
};

PropagationOptions lyapunov_propagation(const CorrectionOptions& opt);

/// Linear center-mode approximation about L1 with x-amplitude `amplitude`
/// (positive: toward P1). Period is 2 pi / nu.
LyapunovGuess initial_guess(double amplitude, const SystemParams& params);

/// Energy of the linear center mode at the given amplitude, relative to H(L1).
double linear_energy_offset(double amplitude, const SystemParams& params);

/// Perpendicular-crossing shooting in vy0 with x0 held fixed.
LyapunovOrbit differential_correct(const LyapunovGuess& guess, const SystemParams& params,
                                   const CorrectionOptions& opt = {});

/// Amplitude continuation followed by an Illinois secant on energy. Throws
/// OutOfRange unless H(L1) < energy < upper, where upper defaults to H(L2).
LyapunovOrbit orbit_at_energy(double energy, const SystemParams& params,
                              std::optional<double> upper = std::nullopt, const CorrectionOptions& opt = {});

/// Orbit state and transported stable/unstable directions at phase
/// fraction s in [0, 1].
struct OrbitPoint {
  RotatingState state;
  Vec4 stable_direction = Vec4::Zero();
  Vec4 unstable_direction = Vec4::Zero();
};

std::vector<OrbitPoint> orbit_points(const LyapunovOrbit& orbit, const std::vector<double>& phases,
                                     const SystemParams& params, const CorrectionOptions& opt = {});

}  // namespace wsb
