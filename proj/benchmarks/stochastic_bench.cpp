#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

#include "specgal/stochastic.hpp"

using namespace specgal;

namespace {

void BM_SamplerDraw(benchmark::State& state) {
  const auto b = build_basis({DomainKind::kDirichletCube, std::numbers::pi, 2, static_cast<int>(state.range(0))});
  Eigen::VectorXd mu(static_cast<Eigen::Index>(b->size()));
  for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = std::pow(1.0 + b->eigenvalue(static_cast<std::size_t>(i)), -2.0);
  const GaussianSampler s(b, mu.asDiagonal().toDenseMatrix());
  auto rng = make_member_rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(s.sample_coeffs(rng));
}

void BM_SamplerFactor(benchmark::State& state) {
  const auto b = build_basis({DomainKind::kDirichletCube, std::numbers::pi, 2, static_cast<int>(state.range(0))});
  const auto n = static_cast<Eigen::Index>(b->size());
  const Eigen::MatrixXd r = Eigen::MatrixXd::Random(n, n);
  const Eigen::MatrixXd k = r * r.transpose();
  for (auto _ : state) benchmark::DoNotOptimize(GaussianSampler(b, k).factor());
}

}  // namespace

BENCHMARK(BM_SamplerDraw)->Arg(4)->Arg(8)->Arg(16);
BENCHMARK(BM_SamplerFactor)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
