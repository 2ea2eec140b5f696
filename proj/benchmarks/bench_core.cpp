#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "ncmest/loss.hpp"
#include "ncmest/penalty.hpp"
#include "ncmest/rng.hpp"
#include "ncmest/solver.hpp"

using namespace ncmest;

namespace {

PenaltySpec penalty_for(int kind) {
  switch (kind) {
    case 0:
      return PenaltySpec::l1(0.1);
    case 1:
      return PenaltySpec::scad(0.1, 3.7);
    case 2:
      return PenaltySpec::mcp(0.1, 3.5);
    default:
      return PenaltySpec::capped_l1(0.1, 2.0);
  }
}

void BM_ProxVector(benchmark::State& state) {
  const PenaltySpec pen = penalty_for(static_cast<int>(state.range(0)));
  Rng rng(1);
  ProxRequest req;
  req.z = rng.normal_vector(1 << 16);
  req.nu = 0.5;
  req.shrink = 0.9;
  for (auto _ : state) {
    Eigen::VectorXd out = prox_vector(pen, req);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * req.z.size());
}
BENCHMARK(BM_ProxVector)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

void BM_CompositeStep(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Rng rng(2);
  Eigen::MatrixXd A(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) A(i, j) = rng.normal();
  CorrectedLinearData d;
  d.gamma_hat = A.transpose() * A / p + Eigen::MatrixXd::Identity(p, p);
  d.gamma_vec = rng.normal_vector(p);
  const LossHandle loss = LossHandle::corrected_linear(std::move(d));
  const PenaltySpec pen = PenaltySpec::scad(0.1, 3.7);
  SolverConfig cfg;
  cfg.R = 5.0;
  SolverState st = init_state(loss, pen, cfg);
  for (auto _ : state) {
    composite_step(st, loss, pen, cfg);
    benchmark::DoNotOptimize(st.beta.data());
  }
}
BENCHMARK(BM_CompositeStep)->Arg(128)->Arg(512)->Unit(benchmark::kMicrosecond);

void BM_ProjectGBall(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Rng rng(3);
  const Eigen::VectorXd v = rng.normal_vector(p) * 3.0;
  const PenaltySpec pen = PenaltySpec::mcp(0.3, 3.5);
  const double R = 0.3 * side_function(pen, v);
  for (auto _ : state) {
    Eigen::VectorXd w = project_g_ball(v, pen, R);
    benchmark::DoNotOptimize(w.data());
  }
}
BENCHMARK(BM_ProjectGBall)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);

void BM_LogisticGradient(benchmark::State& state) {
  const int n = 2000, p = static_cast<int>(state.range(0));
  Rng rng(4);
  GlmData d;
  d.X = Eigen::MatrixXd::NullaryExpr(n, p, [&](Eigen::Index, Eigen::Index) { return rng.normal(); });
  d.y = Eigen::VectorXd::NullaryExpr(n, [&](Eigen::Index) { return rng.bernoulli(0.5) ? 1.0 : 0.0; });
  const LossHandle loss = LossHandle::glm(std::move(d));
  const Eigen::VectorXd beta = rng.normal_vector(p) * 0.1;
  for (auto _ : state) {
    Eigen::VectorXd g = loss.gradient(beta);
    benchmark::DoNotOptimize(g.data());
  }
}
BENCHMARK(BM_LogisticGradient)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
