// Serial reference kernels against their OpenMP counterparts at the sizes
// the training loop sees (d = 3, n = batch size).
#include <benchmark/benchmark.h>

#include <random>

#include "mlc/kernels.hpp"
#include "mlc/transport.hpp"

namespace {

using namespace mlc;

struct Inputs {
  FeatureMatrix z;
  MembershipMatrix gamma;
  DenseMatrix logits;
  DenseVector x;
  DenseVector y;
};

Inputs make_inputs(Eigen::Index n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g(0.0, 1.0);
  Inputs in;
  in.z = DenseMatrix::NullaryExpr(3, n, [&] { return g(rng); });
  in.z.colwise().normalize();
  in.gamma = transport::sinkhorn_project(in.z.transpose() * in.z, {}).gamma;
  in.logits = DenseMatrix::NullaryExpr(n, n, [&] { return g(rng); });
  in.x = DenseVector::NullaryExpr(n, [&] { return g(rng); });
  in.y = DenseVector::NullaryExpr(n, [&] { return g(rng); });
  return in;
}

template <auto Fn>
void bm_membership_rate(benchmark::State& state) {
  const auto in = make_inputs(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(in.z, in.gamma, 30.0, true));
}

template <auto Fn>
void bm_gram(benchmark::State& state) {
  const auto in = make_inputs(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(in.z));
}

template <auto Fn>
void bm_neg_lse_cols(benchmark::State& state) {
  const auto in = make_inputs(state.range(0));
  DenseVector out;
  for (auto _ : state) {
    Fn(in.logits, in.x, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Fn>
void bm_materialize_log(benchmark::State& state) {
  const auto in = make_inputs(state.range(0));
  DenseMatrix out;
  for (auto _ : state) {
    Fn(in.logits, in.x, in.y, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(bm_membership_rate<kernels::serial::membership_rate>)->Arg(64)->Arg(200);
BENCHMARK(bm_membership_rate<kernels::omp::membership_rate>)->Arg(64)->Arg(200);
BENCHMARK(bm_gram<kernels::serial::gram>)->Arg(200)->Arg(1024);
BENCHMARK(bm_gram<kernels::omp::gram>)->Arg(200)->Arg(1024);
BENCHMARK(bm_neg_lse_cols<kernels::serial::neg_lse_cols>)->Arg(200)->Arg(1024);
BENCHMARK(bm_neg_lse_cols<kernels::omp::neg_lse_cols>)->Arg(200)->Arg(1024);
BENCHMARK(bm_materialize_log<kernels::serial::materialize_log>)->Arg(200)->Arg(1024);
BENCHMARK(bm_materialize_log<kernels::omp::materialize_log>)->Arg(200)->Arg(1024);

BENCHMARK_MAIN();
