// Serial reference vs OpenMP kernels. Argument 0 runs serial, 1 parallel.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "wsb/equilibria.hpp"
#include "wsb/lab.hpp"
#include "wsb/manifolds.hpp"
#include "wsb/wsb.hpp"

using namespace wsb;

namespace {

struct Fixture {
  RunConfig cfg;
  Lab lab;
  LyapunovOrbit orbit;
  WsbQuery query;

  Fixture() {
    lab = setup_lab(cfg);
    orbit = orbit_at_energy(lagrange_points(lab.params).h(1) + 5e-4, lab.params);
    cfg.e0 = 0.41;
    query = make_query(cfg, lab);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_Globalize(benchmark::State& st) {
  const Fixture& f = fixture();
  ManifoldOptions opt;
  opt.parallel = st.range(0) != 0;
  for (auto _ : st) {
    ManifoldBranch br = globalize(f.orbit, ManifoldKind::Stable, f.lab.block, f.lab.params, opt);
    benchmark::DoNotOptimize(br.bundle.data());
  }
  st.counters["seeds"] = opt.n_seeds;
}

void BM_Cut(benchmark::State& st) {
  const Fixture& f = fixture();
  ManifoldOptions opt;
  opt.parallel = st.range(0) != 0;
  const ManifoldBranch br = globalize(f.orbit, ManifoldKind::Stable, f.lab.block, f.lab.params, opt);
  for (auto _ : st) {
    ManifoldCut c = cut(br, 0.0, 1, f.lab.params);
    benchmark::DoNotOptimize(c.points.data());
  }
}

void BM_StableScan(benchmark::State& st) {
  const Fixture& f = fixture();
  WsbQuery q = f.query;
  q.parallel = st.range(0) != 0;
  std::size_t n = 0;
  for (auto _ : st) {
    StableScan s = stable_set_scan(q, f.lab.geom, f.lab.params);
    n = s.samples.size();
    benchmark::DoNotOptimize(s.samples.data());
  }
  st.counters["samples"] = static_cast<double>(n);
}

void BM_Prescan(benchmark::State& st) {
  const Fixture& f = fixture();
  WsbQuery q = f.query;
  q.parallel = st.range(0) != 0;
  for (auto _ : st) {
    E0Prescan p = prescan_e0(q, f.lab.geom, f.lab.params, default_e0_grid());
    benchmark::DoNotOptimize(p.e0);
  }
}

}  // namespace

BENCHMARK(BM_Globalize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Cut)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_StableScan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Prescan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime()->Iterations(1);

int main(int argc, char** argv) {
  benchmark::Initialize(&argc, argv);
  benchmark::AddCustomContext("omp_max_threads", std::to_string(omp_get_max_threads()));
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
}
