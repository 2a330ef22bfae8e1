#include <doctest.h>

#include <omp.h>

#include "wsb/equilibria.hpp"
#include "wsb/wsb.hpp"

using namespace wsb;

// The OpenMP kernels must reproduce their serial reference bit for bit.

TEST_CASE("globalize: OpenMP equals serial") {
  const SystemParams p;
  const LyapunovOrbit o = orbit_at_energy(lagrange_points(p).h(1) + 5e-4, p);
  ManifoldOptions par, ser;
  par.n_seeds = ser.n_seeds = 64;
  ser.parallel = false;
  omp_set_num_threads(4);
  const ManifoldBranch a = globalize(o, ManifoldKind::Stable, default_block(p), p, par);
  const ManifoldBranch b = globalize(o, ManifoldKind::Stable, default_block(p), p, ser);
  REQUIRE(a.bundle.size() == b.bundle.size());
  for (std::size_t i = 0; i < a.bundle.size(); ++i) {
    CHECK(a.bundle[i].trajectory.final_state.as_vector() == b.bundle[i].trajectory.final_state.as_vector());
    CHECK(a.bundle[i].trajectory.steps == b.bundle[i].trajectory.steps);
  }
  const ManifoldCut ca = cut(a, 0.0, 1, p), cb = cut(b, 0.0, 1, p);
  REQUIRE(ca.points.size() == cb.points.size());
  for (std::size_t i = 0; i < ca.points.size(); ++i) {
    CHECK(ca.points[i].r == cb.points[i].r);
    CHECK(ca.points[i].rdot == cb.points[i].rdot);
  }
}

TEST_CASE("scan, refinement and profile: OpenMP equals serial") {
  const SystemParams p;
  const SectionGeometry g = section_geometry(default_block(p), default_energy_cap(p), p);
  WsbQuery q;
  q.e0 = 0.41;
  q.n = 2;
  WsbQuery s = q;
  s.parallel = false;
  omp_set_num_threads(4);
  StableScan sa, sb;
  const auto pa = wsb_points(q, g, p, &sa);
  const auto pb = wsb_points(s, g, p, &sb);
  REQUIRE(sa.samples.size() == sb.samples.size());
  for (std::size_t i = 0; i < sa.samples.size(); ++i) CHECK(sa.samples[i].order == sb.samples[i].order);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].r_star == pb[i].r_star);
  const auto fa = return_time_profile(pa[0], q, g, p, 1e-8, 1e-5, 6);
  const auto fb = return_time_profile(pb[0], s, g, p, 1e-8, 1e-5, 6);
  for (std::size_t i = 0; i < fa.size(); ++i) {
    CHECK(fa[i].order == fb[i].order);
    if (fa[i].stable) CHECK(fa[i].return_time == fb[i].return_time);
  }
}
