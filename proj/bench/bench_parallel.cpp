// Serial reference vs OpenMP kernel for the two data-parallel steps:
// GA population fitness and leave-one-out folds.

#include "mortlaw/likelihood.hpp"
#include "mortlaw/optimizer.hpp"
#include "mortlaw/parallel.hpp"
#include "mortlaw/rng.hpp"
#include "mortlaw/simulator.hpp"
#include "mortlaw/validation.hpp"

#include <benchmark/benchmark.h>

using namespace mortlaw;

namespace {

MortalityDataset mixture_data() {
    SimSpec spec;
    spec.theta = from_reported({0.1155, 0.0163, 0.2061, 0.0126});
    spec.exposure = 1e5;
    spec.seed = 1;
    return simulate_counts(spec);
}

void population(benchmark::State &state, Execution execution) {
    const auto data = mixture_data();
    const auto sample = DeathSample::from(data);
    const Objective f = [&](std::span<const double> v) {
        return detail::poisson_loglik(ModelKind::Mixture, v, sample);
    };
    const auto box = default_bounds(ModelKind::Mixture);
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<double> individuals(n * box.size());
    Rng rng{7};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < box.size(); ++j) {
            individuals[i * box.size() + j] = rng.uniform(box[j].lower, box[j].upper);
        }
    }
    std::vector<double> fitness(n);
    for (auto _ : state) {
        evaluate_population(f, individuals, box.size(), fitness, execution);
        benchmark::DoNotOptimize(fitness.data());
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
    state.counters["threads"] = execution == Execution::Parallel ? worker_threads() : 1;
}

void loocv(benchmark::State &state, Execution execution) {
    const auto data = mixture_data();
    FitConfig config;
    config.ga.population_size = 60;
    config.ga.generations = 100;
    for (auto _ : state) {
        benchmark::DoNotOptimize(loocv_mape(ModelKind::Gompertz, data, config, execution).mape);
    }
    state.counters["threads"] = execution == Execution::Parallel ? worker_threads() : 1;
}

} // namespace

BENCHMARK_CAPTURE(population, serial, Execution::Serial)->Arg(200)->Arg(2000);
BENCHMARK_CAPTURE(population, parallel, Execution::Parallel)->Arg(200)->Arg(2000);
BENCHMARK_CAPTURE(loocv, serial, Execution::Serial)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(loocv, parallel, Execution::Parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
