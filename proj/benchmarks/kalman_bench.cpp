#include <benchmark/benchmark.h>

#include "sparsedfm/kalman.hpp"
#include "sparsedfm/statespace.hpp"

namespace {

sdfm::KfsInput make_input(bool ar1, Eigen::Index p) {
  const sdfm::Simulation s = sdfm::simulate_dfm(100, p, 2, 1, 0.0);
  if (!ar1) return sdfm::KfsInput::from_params(s.panel, s.params);
  sdfm::Ar1Params a;
  a.phi = Eigen::VectorXd::Constant(p, 0.5);
  a.sigma_e = Eigen::VectorXd::Constant(p, 0.75);
  return sdfm::KfsInput::from_augmented(s.panel, sdfm::build_ar1_augmented(s.params, a));
}

void BM_Kalman(benchmark::State& state) {
  const bool ar1 = state.range(0) != 0;
  const auto engine = state.range(1) != 0 ? sdfm::KalmanEngine::kUnivariate : sdfm::KalmanEngine::kMultivariate;
  const sdfm::KfsInput in = make_input(ar1, state.range(2));
  for (auto _ : state) benchmark::DoNotOptimize(sdfm::run_kalman(in, engine).loglik);
  state.SetLabel(std::string(ar1 ? "AR1 " : "IID ") + std::string(sdfm::to_string(engine)));
}

}  // namespace

BENCHMARK(BM_Kalman)
    ->ArgsProduct({{0, 1}, {0, 1}, {50, 200}})
    ->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
