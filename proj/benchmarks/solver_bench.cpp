// Copyright 2026 The ecloo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "ecloo/data_io.hpp"
#include "ecloo/ec.hpp"
#include "ecloo/loocv.hpp"
#include "ecloo/prior.hpp"

namespace ecloo {
namespace {

Dataset instance(Index N) {
  SynthConfig c;
  c.N = N;
  c.alpha = 0.5;
  c.seed = 3;
  return gen_synthetic(c).train;
}

const PriorSpec kPrior = PriorSpec::bernoulli_gauss(0.1, 10.0);

void BM_Moments(benchmark::State& state) {
  const PriorSpec prior = state.range(0) ? kPrior : PriorSpec::bernoulli_uniform(0.1);
  double h = -3.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(moments(prior, h, 1.5));
    h = h > 3.0 ? -3.0 : h + 0.01;
  }
}
BENCHMARK(BM_Moments)->Arg(1)->Arg(0);

void BM_Fit(benchmark::State& state) {
  const Dataset d = instance(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, kPrior, 10.0));
}
BENCHMARK(BM_Fit)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ApproxLooe(benchmark::State& state) {
  const Dataset d = instance(state.range(0));
  const FitResult f = fit(d, kPrior, 10.0);
  for (auto _ : state) benchmark::DoNotOptimize(approx_looe(f, d, 10.0));
}
BENCHMARK(BM_ApproxLooe)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_LiteralLoocv(benchmark::State& state) {
  const Dataset d = instance(state.range(0));
  const FitResult f = fit(d, kPrior, 10.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(literal_loocv(d, kPrior, 10.0, {}, &f));
  }
}
BENCHMARK(BM_LiteralLoocv)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ecloo

BENCHMARK_MAIN();
