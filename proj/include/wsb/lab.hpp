#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "wsb/block.hpp"
#include "wsb/wsb.hpp"

namespace wsb {

inline constexpr const char* kVersion = "0.1.0";

/// Everything a run depends on. Keys mirror the JSON config document.
struct RunConfig {
  double mu = kEarthMoonMu;
  std::optional<double> block_a;
  std::optional<double> block_b;
  std::optional<double> H_star;
  double rtol = 1e-13;
  double atol = 1e-13;

  double theta0 = 0.0;
  double rdot0 = 0.0;
  std::optional<double> e0;  // empty: admissibility pre-scan
  int n = 2;  // at the default query the order-1 set has no boundary points
  double grid_step = 1e-5;
  double delta_r = 1e-8;
  std::optional<double> r_lo;
  std::optional<double> r_hi;

  std::optional<double> energy;  // absolute H for zvc / lyapunov / manifold / cut
  int cut_index = 0;
  int n_seeds = 200;
  double epsilon = 1e-6;
  int max_turns = 3;

  int zvc_resolution = 400;
  int compare_grid = 15;
  double profile_d_min = 1e-8;
  double profile_d_max = 1e-5;
  int profile_samples = 16;

  std::string out = "wsb_out";
  int threads = 0;  // 0: OpenMP default

  void validate() const;
  nlohmann::json to_json() const;
  /// Unknown keys are rejected with ConfigError.
  static RunConfig from_json(const nlohmann::json& j);
};

struct Lab {
  SystemParams params;
  BlockSpec block;
  BlockValidation validation;
  SectionGeometry geom;
  /// Number of times H_star was pulled toward H(L1) before validation passed.
  int tightenings = 0;
};

/// Resolves block and H_star, validating the block at both ends of the
/// band. A default H_star is tightened when validation fails, or when
/// closure_index >= 0 and that cut is not closed at the top of the band.
Lab setup_lab(const RunConfig& cfg, int closure_index = -1);

ManifoldOptions manifold_options(const RunConfig& cfg);

/// Query for cfg; e0 comes from the pre-scan when not configured.
WsbQuery make_query(const RunConfig& cfg, const Lab& lab, E0Prescan* prescan = nullptr);

std::vector<double> default_e0_grid();

/// {mu, a, b, H_star, D1, y_b, theta1, validation, samples} plus command,
/// version and the effective config.
nlohmann::json manifest_json(const RunConfig& cfg, const Lab& lab, const std::string& command);

nlohmann::json lagrange_json(const SystemParams& params);
nlohmann::json orbit_json(const LyapunovOrbit& orbit);
nlohmann::json comparison_json(const ComparisonReport& rep);

}  // namespace wsb
