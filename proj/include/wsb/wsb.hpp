#pragma once

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "wsb/block.hpp"
#include "wsb/dynamics.hpp"
#include "wsb/manifolds.hpp"

namespace wsb {

/// One radial line l_theta0 with fixed (rdot0, e0), classified to order n.
struct WsbQuery {
  double rdot0 = 0.0;
  double theta0 = 0.0;
  double e0 = 0.0;
  int n = 1;
  /// Scan window; NaN means the whole admissible range.
  double r_lo = std::numeric_limits<double>::quiet_NaN();
  double r_hi = std::numeric_limits<double>::quiet_NaN();
  double grid_step = 1e-5;
  double delta_r = 1e-8;
  EllipseRoot root = EllipseRoot::NearPeriapsis;
  /// Time allowance per turn before a run is called budget-exhausted.
  double turn_budget = 100.0;
  double transversality_floor = 1e-8;
  double rtol = 1e-13;
  double atol = 1e-13;
  bool parallel = true;

  void validate(const SectionGeometry& geom) const;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct AdmissibleRange {
  std::vector<Interval> intervals;
};

/// Maximal r0-intervals on which the start state exists and its energy lies
/// in (H(L1), H_star). Throws EmptyRange.
AdmissibleRange admissible_range(const WsbQuery& q, const SectionGeometry& geom, const SystemParams& params);

enum class Failure { None, DistanceExceeded, Nontransverse, Collision, BudgetExhausted, Inadmissible, IntegrationError };
const char* to_string(Failure f);

struct TurnRecord {
  double t = 0.0;
  double r = 0.0;
  double rdot = 0.0;
  double theta = 0.0;  // unwrapped
  double rate = 0.0;
};

struct StabilityVerdict {
  int stable_order = 0;
  Failure failure = Failure::None;
  double energy = 0.0;
  double t_end = 0.0;
  /// Smallest |rate| over every crossing of the half-line.
  double min_crossing_rate = std::numeric_limits<double>::infinity();
  std::vector<TurnRecord> turns;
  std::string detail;

  bool stable(int n) const { return stable_order >= n; }
};

/// Turn counting from an arbitrary state with theta = theta0 on the section.
StabilityVerdict classify_state(const RotatingState& s0, int n, const WsbQuery& q, const SectionGeometry& geom,
                                const SystemParams& params);

/// Never throws for dynamical failures; they land in the verdict.
StabilityVerdict classify_stability(double r0, const WsbQuery& q, const SectionGeometry& geom,
                                    const SystemParams& params);

struct ScanSample {
  double r = 0.0;
  int order = 0;
  Failure failure = Failure::None;
};

struct StableScan {
  std::vector<ScanSample> samples;  // sorted by r, grouped by admissible interval
  std::vector<Interval> stable_intervals;  // extents of runs of n-stable samples
  /// Adjacent sample pairs with different verdicts: (stable r, unstable r).
  std::vector<std::pair<double, double>> brackets;
};

StableScan stable_set_scan(const WsbQuery& q, const SectionGeometry& geom, const SystemParams& params);

struct WsbPoint {
  double r_star = 0.0;
  double H_star = 0.0;
  double r_stable = 0.0;
  double r_unstable = 0.0;
  /// "upper" when r_star closes a stable interval from above, "lower" otherwise.
  std::string side;
  /// Turns completed at the unstable end; the point sits on that cut.
  int unstable_order = 0;
  Failure unstable_failure = Failure::None;
};

/// Bisection on a bracket whose ends classify differently. Throws BracketInvalid.
WsbPoint refine_boundary(double r_stable, double r_unstable, const WsbQuery& q, const SectionGeometry& geom,
                         const SystemParams& params);

/// Scan plus refinement of every bracket.
std::vector<WsbPoint> wsb_points(const WsbQuery& q, const SectionGeometry& geom, const SystemParams& params,
                                 StableScan* scan_out = nullptr);

struct CompareOptions {
  /// Cut index = n - 1 + index_shift; the negative control uses +1.
  int index_shift = 0;
  /// Compare each point against the cut of its own unstable order instead.
  bool use_unstable_order = false;
  int grid_size = 15;
  double tolerance = 1e-6;
  ManifoldOptions manifold;
  CutOptions cut;
};

struct PointComparison {
  double r_star = 0.0;
  double H_star = 0.0;
  int cut_index = 0;
  double r_cut = std::numeric_limits<double>::quiet_NaN();
  double distance = std::numeric_limits<double>::infinity();
  std::string method;  // "grid", "exact", or "polyline" when the cut misses the line
  std::string error;
};

struct ComparisonReport {
  std::vector<PointComparison> points;
  double max_distance = 0.0;
  double mean_distance = 0.0;
};

/// Radii where the cut of index `index` at energy H meets rdot = rdot0.
std::vector<double> cut_radii_on_line(double energy, int index, double rdot0, double theta0,
                                      const BlockSpec& block, const SystemParams& params,
                                      const ManifoldOptions& mopt = {}, const CutOptions& copt = {},
                                      ManifoldCut* cut_out = nullptr);

ComparisonReport compare_with_manifold(const std::vector<WsbPoint>& points, const WsbQuery& q,
                                       const SectionGeometry& geom, const BlockSpec& block,
                                       const SystemParams& params, const CompareOptions& opt = {});

/// r0 values on the query line that lie on the cut of index `index` at their
/// own energy, found from an energy grid and polished exactly.
std::vector<double> locus_intersections(int index, const WsbQuery& q, const SectionGeometry& geom,
                                        const BlockSpec& block, const SystemParams& params,
                                        const CompareOptions& opt = {});

struct ProfileSample {
  double r0 = 0.0;
  double distance = 0.0;  // |r0 - r_star|
  bool stable = false;
  int order = 0;
  double return_time = std::numeric_limits<double>::quiet_NaN();
  double return_r = std::numeric_limits<double>::quiet_NaN();
  double return_rdot = std::numeric_limits<double>::quiet_NaN();
};

/// n-th return time and state against r0 on both sides of a WSB point:
/// log-spaced distances in [d_min, d_max] on each side.
std::vector<ProfileSample> return_time_profile(const WsbPoint& point, const WsbQuery& q, const SectionGeometry& geom,
                                               const SystemParams& params, double d_min, double d_max,
                                               int samples_per_side = 16);

struct E0Candidate {
  double e0 = 0.0;
  double range_width = 0.0;
  int brackets = 0;
};

/// Coarse scan over e0; the pick maximizes the number of stability
/// transitions at order q.n, ties broken by the wider admissible range.
struct E0Prescan {
  std::vector<E0Candidate> candidates;
  double e0 = std::numeric_limits<double>::quiet_NaN();
};

E0Prescan prescan_e0(const WsbQuery& q, const SectionGeometry& geom, const SystemParams& params,
                     const std::vector<double>& e_grid, int samples_per_range = 200);

/// Header `mu,theta0,rdot0,e0,n` and its values, then rows
/// `r_star,H_star,bracket_lo,bracket_hi,side`.
void write_wsb_csv(std::ostream& os, const std::vector<WsbPoint>& pts, const WsbQuery& q, const SystemParams& params);

}  // namespace wsb
