#pragma once

#include <vector>

#include "wsb/propagation.hpp"
#include "wsb/types.hpp"

namespace wsb {

/// Slab a <= x <= b about L1.
struct BlockSpec {
  double a = 0.0;
  double b = 0.0;
  bool validated = false;
};

/// a = x_L1 - d, b = x_L1 + d with d = 0.4 x_plus. Not yet validated.
BlockSpec default_block(const SystemParams& params);

/// H(L1) + 0.5 (H(L2) - H(L1)).
double default_energy_cap(const SystemParams& params);

enum class HillMembership { Inside, Outside, Boundary };
const char* to_string(HillMembership m);

HillMembership hill_membership(double x, double y, double energy, const SystemParams& params,
                               double tol = 1e-12);

struct ZvcSegment {
  double x0, y0, x1, y1;
};

/// Marching squares on omega + H = 0 over [-extent, extent]^2 with
/// `resolution` cells per side; endpoints projected onto the level set.
/// Throws OutOfRange when H >= H(L4) (no forbidden region).
std::vector<ZvcSegment> zero_velocity_curve(double energy, const SystemParams& params, int resolution = 400,
                                            double extent = 2.0);

/// Groups segments into connected components by shared endpoints.
std::vector<std::vector<ZvcSegment>> zvc_components(const std::vector<ZvcSegment>& segs, double tol = 1e-9);

enum class BlockSide { A, B };
enum class BoundaryKind { Exit, Entry, Tangency };

struct BoundaryClass {
  BlockSide side = BlockSide::A;
  BoundaryKind kind = BoundaryKind::Tangency;
};

const char* to_string(BlockSide s);
const char* to_string(BoundaryKind k);

BoundaryClass classify_boundary_point(const RotatingState& s, const BlockSpec& spec, double tol = 1e-10);

struct BlockValidation {
  BlockSpec spec;
  int samples = 0;
  /// Smallest of -xddot on x = a and +xddot on x = b over the samples.
  double min_margin = 0.0;
};

/// Samples tangency states on both planes over the bounded Hill component
/// and checks the isolating sign conditions. Throws NotIsolating.
BlockValidation validate_block(const BlockSpec& spec, double energy, const SystemParams& params,
                               int n_samples = 200);

/// Upper end of the bounded Hill segment on the vertical line x = c,
/// searching from y = 0. Returns 0 if (c, 0) is itself forbidden.
double hill_half_width(double c, double energy, const SystemParams& params);

enum class TransitKind { Transit, Bounce, Dwell };
const char* to_string(TransitKind k);

struct TransitOutcome {
  TransitKind kind = TransitKind::Dwell;
  RotatingState entry;
  RotatingState exit;
  double exit_time = 0.0;
  double min_x = 0.0;  // smallest x reached before leaving the slab
};

/// Follows an entry state on x = b until it leaves through either plane or
/// the time budget runs out.
TransitOutcome block_transit(const RotatingState& entry, const BlockSpec& spec, const SystemParams& params,
                             double t_max = 50.0, const PropagationOptions& options = {});

struct SectionGeometry {
  double a = 0.0;
  double b = 0.0;
  double H_star = 0.0;
  double y_b = 0.0;
  double theta1 = 0.0;
  double D1 = 0.0;

  /// theta0 restricted to (-pi + theta1, pi - theta1).
  bool admissible_angle(double theta0) const;
};

SectionGeometry section_geometry(const BlockSpec& spec, double H_star, const SystemParams& params);

}  // namespace wsb
