#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "wsb/block.hpp"
#include "wsb/lyapunov.hpp"
#include "wsb/propagation.hpp"

namespace wsb {

enum class ManifoldKind { Stable, Unstable };
const char* to_string(ManifoldKind k);

struct ManifoldOptions {
  int n_seeds = 200;
  double epsilon = 1e-6;
  /// Trajectories stop once |theta - theta_seed| exceeds 2 pi max_turns + 1,
  /// so cut indices 0 .. max_turns - 1 are reachable for every section.
  int max_turns = 3;
  double max_time = 250.0;
  double rtol = 1e-13;
  double atol = 1e-13;
  bool parallel = true;
};

struct ManifoldTrajectory {
  double phase = 0.0;  // seed phase along the orbit, in [0, 1)
  RotatingState seed;
  double seed_theta = 0.0;
  Trajectory trajectory;
  bool failed = false;
  std::string error;
};

struct ManifoldBranch {
  LyapunovOrbit orbit;
  ManifoldKind kind = ManifoldKind::Stable;
  double epsilon = 0.0;
  /// +1 or -1 applied to the transported eigenvector; fixed so that the
  /// displacement at phase 0 points toward P1.
  int sign = 1;
  int max_turns = 0;
  BlockSpec block;
  ManifoldOptions options;
  std::vector<ManifoldTrajectory> bundle;
};

/// Seed states (orbit point plus signed displacement, energy re-projected)
/// at the given phases.
std::vector<ManifoldTrajectory> manifold_seeds(const LyapunovOrbit& orbit, ManifoldKind kind, int sign,
                                               double epsilon, const std::vector<double>& phases,
                                               const SystemParams& params);

/// Propagates one seed (backward for the stable kind). Never throws;
/// failures are stored in the record.
void globalize_seed(ManifoldTrajectory& seed, ManifoldKind kind, const BlockSpec& block, int max_turns,
                    const ManifoldOptions& opt, const SystemParams& params);

/// Throws WrongBranch if most seeds leave through x = a first.
ManifoldBranch globalize(const LyapunovOrbit& orbit, ManifoldKind kind, const BlockSpec& block,
                         const SystemParams& params, const ManifoldOptions& opt = {});

struct CutPoint {
  double phase = 0.0;
  double r = 0.0;
  double rdot = 0.0;
  RotatingState state;
  double t = 0.0;       // time of the crossing relative to the seed
  double rate = 0.0;    // rotating angular rate at the crossing
};

struct ManifoldCut {
  double theta0 = 0.0;
  int index = 0;
  double energy = 0.0;
  /// Ordered by seed phase; when closed the first point is repeated last.
  std::vector<CutPoint> points;
  bool closed = false;
  double max_gap = 0.0;
  int refinements = 0;
};

struct CutOptions {
  /// Adjacent points further apart than this in (r, rdot) get a midpoint seed.
  double max_gap = 2e-3;
  int max_rounds = 12;
  /// Phase spacing below which refinement stops.
  double min_phase_step = 1e-9;
};

/// Crossing of seed trajectory `traj` with the half-line at theta0 whose
/// accumulated angle from the seed lies in [2 pi i, 2 pi (i + 1)). Positive
/// rotating rate only. Returns false if none exists.
bool cut_crossing(const ManifoldTrajectory& traj, ManifoldKind kind, double theta0, int index,
                  const ManifoldOptions& opt, const SystemParams& params, CutPoint& out);

/// Throws CutNotReached when no seed reaches index i and CutNotClosed when
/// only some do.
ManifoldCut cut(const ManifoldBranch& branch, double theta0, int index, const SystemParams& params,
                const CutOptions& copt = {});

/// Single-seed evaluation: cut point for the seed at `phase`.
bool cut_point_at_phase(const ManifoldBranch& branch, double phase, double theta0, int index,
                        const SystemParams& params, CutPoint& out);

/// Points where the cut crosses rdot = rdot0, refined by root-finding on
/// the seed phase. Sorted by r.
std::vector<CutPoint> cut_line_intersections(const ManifoldBranch& branch, const ManifoldCut& c,
                                             double rdot0, const SystemParams& params, double tol = 1e-13);

enum class Location { Inside, Outside, OnCurve };
const char* to_string(Location l);

/// Crossing-number test in coordinates scaled by the cut's bounding box;
/// points within `band` of the polyline are OnCurve.
Location point_location(const ManifoldCut& c, double r, double rdot, double band = 1e-7);

/// Euclidean distance in (r, rdot) from a point to the cut polyline.
double distance_to_cut(const ManifoldCut& c, double r, double rdot);

/// True if no two non-adjacent segments intersect.
bool is_simple(const ManifoldCut& c);

/// Header `mu,H,theta0,cut_index`, then rows `point_index,r,rdot`.
void write_cut_csv(std::ostream& os, const ManifoldCut& c, const SystemParams& params);

struct LoadedCut {
  double mu = 0.0;
  ManifoldCut cut;
};
LoadedCut read_cut_csv(std::istream& is);

}  // namespace wsb
