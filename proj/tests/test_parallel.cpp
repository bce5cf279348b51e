#include "oracles.hpp"

#include "mortlaw/likelihood.hpp"
#include "mortlaw/optimizer.hpp"
#include "mortlaw/parallel.hpp"
#include "mortlaw/simulator.hpp"
#include "mortlaw/validation.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace mortlaw;

namespace {

// Oversubscribe on purpose so the parallel paths really interleave even on one core.
struct ThreadScope {
    ThreadScope() {
#ifdef _OPENMP
        omp_set_num_threads(4);
#endif
        unsetenv("MORTLAW_THREADS");
    }
    ~ThreadScope() { unsetenv("MORTLAW_THREADS"); }
};

MortalityDataset sample_data() {
    SimSpec spec;
    spec.theta = from_reported(oracle::japan2015_mixture);
    spec.exposure = 5e4;
    spec.seed = 77;
    return simulate_counts(spec);
}

} // namespace

TEST_CASE("thread count honours MORTLAW_THREADS as a cap") {
    ThreadScope scope;
    const int base = worker_threads();
    CHECK(base >= 1);
    if (openmp_enabled()) {
        CHECK(base == 4);
        setenv("MORTLAW_THREADS", "2", 1);
        CHECK(worker_threads() == 2);
    }
    for (const char *ignored : {"0", "-3", "abc", "2x", "", "99"}) {
        setenv("MORTLAW_THREADS", ignored, 1);
        INFO("MORTLAW_THREADS=" << ignored);
        CHECK(worker_threads() == base);
    }
}

TEST_CASE("population evaluation is identical serially and in parallel") {
    ThreadScope scope;
    const auto data = sample_data();
    const auto sample = DeathSample::from(data);
    const Objective f = [&](std::span<const double> v) {
        if (v[0] > 0.9) {
            throw std::runtime_error{"rejected"};
        }
        if (v[1] > 0.19) {
            return std::numeric_limits<double>::quiet_NaN();
        }
        return detail::poisson_loglik(ModelKind::Mixture, v, sample);
    };
    const auto box = default_bounds(ModelKind::Mixture);
    Rng rng{5};
    const std::size_t n = 1000, dim = box.size();
    std::vector<double> population(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            population[i * dim + j] = rng.uniform(box[j].lower, box[j].upper);
        }
    }
    std::vector<double> serial(n), parallel(n);
    const auto nan_serial = evaluate_population(f, population, dim, serial, Execution::Serial);
    const auto nan_parallel = evaluate_population(f, population, dim, parallel, Execution::Parallel);
    CHECK(nan_serial == nan_parallel);
    CHECK(nan_serial > 0);
    CHECK(serial == parallel);
    std::size_t neg_inf = 0;
    for (double v : parallel) {
        CHECK_FALSE(std::isnan(v));
        neg_inf += v == -std::numeric_limits<double>::infinity();
    }
    CHECK(neg_inf >= nan_serial);
}

TEST_CASE("GA and cross-validation agree across thread counts") {
    ThreadScope scope;
    const auto data = sample_data();
    FitConfig config;
    config.ga.population_size = 60;
    config.ga.generations = 80;
    config.execution = Execution::Serial;
    const auto serial = fit(ModelKind::Mixture, data, config);
    config.execution = Execution::Parallel;
    const auto parallel = fit(ModelKind::Mixture, data, config);
    setenv("MORTLAW_THREADS", "3", 1);
    const auto capped = fit(ModelKind::Mixture, data, config);
    CHECK(serial.theta_hat == parallel.theta_hat);
    CHECK(serial.ga_trace == parallel.ga_trace);
    CHECK(capped.theta_hat == parallel.theta_hat);

    const auto cv_serial = loocv_mape(ModelKind::Gompertz, data, config, Execution::Serial);
    const auto cv_parallel = loocv_mape(ModelKind::Gompertz, data, config, Execution::Parallel);
    CHECK(cv_serial.mape == cv_parallel.mape);
    CHECK(cv_serial.fold_warnings == cv_parallel.fold_warnings);
}
