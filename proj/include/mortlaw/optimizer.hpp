#pragma once

#include "mortlaw/dataset.hpp"
#include "mortlaw/laws.hpp"
#include "mortlaw/likelihood.hpp"
#include "mortlaw/parallel.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mortlaw {

/// Genetic algorithm settings: tournament selection (size 3), blend crossover,
/// Gaussian mutation clipped to the box, elitism, stall-based early stop.
struct GaConfig {
    std::size_t population_size{200};
    std::size_t generations{500};
    double crossover_rate{0.8};
    double mutation_rate{0.1};
    /// Mutation standard deviation as a fraction of each box width.
    double mutation_scale{0.05};
    std::size_t elitism_count{2};
    std::uint64_t seed{20240101};
    /// Stop after this many generations without improvement above 1e-10.
    std::size_t stall_generations{50};

    /// Throws ConfigError on inconsistent settings.
    void validate() const;
};

struct GaResult {
    std::vector<double> best;
    double best_value{0.0};
    /// Best objective after each generation (index 0 is the initial population).
    std::vector<double> trace;
    std::size_t generations_used{0};
    /// Best objective among the initial random individuals.
    double initial_best{0.0};
};

/// Maximises objective over the box. Deterministic in (objective, bounds, seed)
/// and independent of the execution mode: every random draw is made by the
/// driver before fitness evaluation, which is the only parallel step.
GaResult ga_maximize(const Objective &objective, std::span<const Interval> bounds,
                     const GaConfig &config, Execution execution = Execution::Parallel);

/// Evaluates objective on every row of a population (row-major, dim columns).
/// Returns how many evaluations produced NaN; those are stored as -infinity.
std::size_t evaluate_population(const Objective &objective, std::span<const double> population,
                                std::size_t dim, std::span<double> fitness, Execution execution);

struct RefineOptions {
    int max_iter{100};
    double tol{1e-8};
    /// Box the iterate is kept in; defaults to default_bounds(model).
    std::optional<std::vector<Interval>> bounds;
    /// Parameters held at their starting value.
    std::vector<bool> fixed;
};

struct RefineResult {
    ParamVector theta;
    double loglik{0.0};
    int iterations{0};
    bool converged{false};
    /// Max-norm of the projected gradient at exit.
    double gradient_norm{0.0};
};

/// Damped Newton ascent of poisson_loglik with a finite-difference Hessian of
/// the analytic gradient. Parameters on a box edge whose gradient points
/// outward are held fixed (projected gradient). Never returns a point with a
/// lower log-likelihood than the start, up to the rounding noise of the sum
/// (about 16 eps * sum D_k (|log D_k| + 1)). Requires an interior start for every
/// parameter that is not held fixed.
RefineResult newton_refine(const ParamVector &theta0, const DeathSample &sample,
                           const RefineOptions &options = {});
RefineResult newton_refine(const ParamVector &theta0, const MortalityDataset &data,
                           const RefineOptions &options = {});

struct FitConfig {
    GaConfig ga;
    int refine_max_iter{100};
    double refine_tol{1e-8};
    /// Per-parameter search box; default_bounds(model) when empty.
    std::optional<std::vector<Interval>> bounds;
    /// Parameters frozen at a value, by label (e.g. {"p", 1.0}).
    std::map<std::string, double> fixed;
    /// Run the GA on log coordinates for parameters with a positive lower bound.
    bool log_scale_search{true};
    /// Independent GA runs, each refined; the highest log-likelihood wins.
    /// Run 0 uses ga.seed, later runs derive their seed from it.
    std::size_t ga_runs{2};
    Execution execution{Execution::Parallel};
};

struct FitResult {
    ModelKind model{ModelKind::Gompertz};
    ParamVector theta_hat;
    double loglik{0.0};
    /// Refinement reached its tolerance and no free parameter sits on a bound.
    bool converged{false};
    /// Refinement reached a stationary point of the box-constrained problem.
    bool refine_converged{false};
    std::size_t generations_used{0};
    int refine_iterations{0};
    std::uint64_t seed{0};
    std::vector<std::string> bounds_hit;
    double ga_loglik{0.0};
    double initial_best_loglik{0.0};
    double gradient_norm{0.0};
    std::vector<double> ga_trace;
    /// Index of the GA run that produced theta_hat.
    std::size_t selected_run{0};
};

/// Seed of GA run `run` within a fit seeded with `seed`.
std::uint64_t ga_run_seed(std::uint64_t seed, std::size_t run) noexcept;

/// Global GA search followed by local Newton refinement.
FitResult fit(ModelKind model, const DeathSample &sample, const FitConfig &config = {});
FitResult fit(ModelKind model, const MortalityDataset &data, const FitConfig &config = {});

} // namespace mortlaw
