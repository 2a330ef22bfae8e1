#pragma once

#include <array>

#include "wsb/types.hpp"

namespace wsb {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// The five equilibria, indexed 0..4 for L1..L5. L1 lies between the
/// primaries, L2 beyond P2 and L3 beyond P1.
struct LagrangePointSet {
  std::array<Point2, 5> position;
  std::array<double, 5> energy{};
  double x_plus = 0.0;  // distance from L1 to P2

  const Point2& l(int i) const { return position.at(i - 1); }
  double h(int i) const { return energy.at(i - 1); }
};

/// Linearization at L1 has eigenvalues {+-lambda, +-i nu}.
struct L1Spectrum {
  double lambda = 0.0;
  double nu = 0.0;
};

/// Left-hand side of Euler's quintic for the L1-P2 distance.
double euler_quintic(double x, double mu);

/// Unique root of the quintic in (0, 1); safeguarded Newton with bisection.
double quintic_root(const SystemParams& params);

LagrangePointSet lagrange_points(const SystemParams& params);

/// Eigen-decomposition of the Jacobian at L1. Throws SpectrumMismatch if the
/// eigenvalues do not have the saddle-center pattern.
L1Spectrum l1_spectrum(const SystemParams& params);

}  // namespace wsb
