#include "mortlaw/optimizer.hpp"

#include "mortlaw/error.hpp"
#include "mortlaw/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>

namespace mortlaw {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kBlendAlpha = 0.5;
constexpr std::size_t kTournamentSize = 3;
constexpr double kStallImprovement = 1e-10;

bool improves(double candidate, double incumbent, double margin) {
    if (candidate == kNegInf) {
        return false;
    }
    if (incumbent == kNegInf) {
        return true;
    }
    return candidate - incumbent > margin;
}

std::size_t argmax(std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

void check_box(std::span<const Interval> bounds) {
    if (bounds.empty()) {
        throw ConfigError{"search box has no dimensions"};
    }
    for (const auto &b : bounds) {
        if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || b.lower > b.upper) {
            throw ConfigError{"search box bounds must be finite with lower <= upper"};
        }
    }
}

// ---- local refinement -------------------------------------------------------

struct Problem {
    ModelKind model;
    const DeathSample &sample;
    std::vector<Interval> bounds;
    std::vector<bool> fixed;

    double loglik(std::span<const double> v) const {
        return detail::centered_loglik(model, v, sample);
    }

    std::vector<double> gradient(std::span<const double> v) const {
        std::vector<double> g(v.size());
        detail::loglik_gradient(model, v, sample, g);
        return g;
    }

    // Rounding scale of centered_loglik: its terms are D_k (log lambda_k - log D_k),
    // each carrying an error of a few ulps of D_k |log D_k|.
    double rounding_noise() const {
        double scale = 0.0;
        for (double d : sample.deaths) {
            if (d > 0.0) {
                scale += d * (std::abs(std::log(d)) + 1.0);
            }
        }
        return 16.0 * std::numeric_limits<double>::epsilon() * scale;
    }

    double domain_upper(std::size_t i) const {
        return model == ModelKind::Mixture && i == 3 ? 1.0
                                                     : std::numeric_limits<double>::infinity();
    }
};

bool at_lower(const Interval &b, double v) {
    return b.lower > 0.0 ? v <= b.lower * (1.0 + 1e-9) : v <= 1e-14;
}

bool at_upper(const Interval &b, double v) { return v >= b.upper * (1.0 - 1e-12); }

double clip(double v, const Interval &b) { return std::clamp(v, b.lower, b.upper); }

std::vector<std::size_t> free_coordinates(const Problem &problem, std::span<const double> theta,
                                          std::span<const double> grad) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (problem.fixed[i]) {
            continue;
        }
        const auto &b = problem.bounds[i];
        if ((at_lower(b, theta[i]) && grad[i] <= 0.0) || (at_upper(b, theta[i]) && grad[i] >= 0.0)) {
            continue;
        }
        free.push_back(i);
    }
    return free;
}

// Hessian of the log-likelihood restricted to the free coordinates, by finite
// differences of the analytic gradient, symmetrised.
Eigen::MatrixXd free_hessian(const Problem &problem, const std::vector<double> &theta,
                             const std::vector<double> &grad, std::span<const std::size_t> free) {
    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd h(m, m);
    std::vector<double> probe = theta;
    for (Eigen::Index c = 0; c < m; ++c) {
        const std::size_t j = free[static_cast<std::size_t>(c)];
        const double step = 1e-5 * std::max(std::abs(theta[j]), 1e-8);
        const bool central = theta[j] - step >= 0.0 && theta[j] + step <= problem.domain_upper(j);
        std::vector<double> up_grad, down_grad;
        double span = 0.0;
        if (central) {
            probe[j] = theta[j] + step;
            up_grad = problem.gradient(probe);
            probe[j] = theta[j] - step;
            down_grad = problem.gradient(probe);
            span = (theta[j] + step) - (theta[j] - step);
        } else if (theta[j] + step <= problem.domain_upper(j)) {
            probe[j] = theta[j] + step;
            up_grad = problem.gradient(probe);
            down_grad = grad;
            span = (theta[j] + step) - theta[j];
        } else {
            probe[j] = theta[j] - step;
            up_grad = grad;
            down_grad = problem.gradient(probe);
            span = theta[j] - (theta[j] - step);
        }
        probe[j] = theta[j];
        for (Eigen::Index r = 0; r < m; ++r) {
            const std::size_t i = free[static_cast<std::size_t>(r)];
            h(r, c) = (up_grad[i] - down_grad[i]) / span;
        }
    }
    return 0.5 * (h + h.transpose());
}

double projected_norm(const Problem &problem, const std::vector<double> &theta) {
    const auto grad = problem.gradient(theta);
    double norm = 0.0;
    for (auto i : free_coordinates(problem, theta, grad)) {
        norm = std::max(norm, std::abs(grad[i]));
    }
    return std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
}

RefineResult refine(const Problem &problem, std::vector<double> theta, int max_iter, double tol) {
    double current = problem.loglik(theta);
    if (!std::isfinite(current)) {
        throw NumericalError{"log-likelihood is not finite at the refinement start"};
    }
    const double start_value = current;
    const std::vector<double> start_theta = theta;
    const double base_noise = problem.rounding_noise();

    int iter = 0;
    bool converged = false;
    double grad_norm = 0.0;
    for (;; ++iter) {
        const auto grad = problem.gradient(theta);
        if (std::any_of(grad.begin(), grad.end(), [](double g) { return !std::isfinite(g); })) {
            break;
        }
        const auto free = free_coordinates(problem, theta, grad);
        grad_norm = 0.0;
        for (auto i : free) {
            grad_norm = std::max(grad_norm, std::abs(grad[i]));
        }
        if (grad_norm < tol) {
            converged = true;
            break;
        }
        if (iter >= max_iter) {
            break;
        }

        const Eigen::MatrixXd neg_h = -free_hessian(problem, theta, grad, free);
        const auto m = static_cast<Eigen::Index>(free.size());
        Eigen::VectorXd g(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            g(r) = grad[free[static_cast<std::size_t>(r)]];
        }
        Eigen::VectorXd scale = neg_h.diagonal().cwiseAbs();
        for (Eigen::Index r = 0; r < m; ++r) {
            if (!(scale(r) > 0.0) || !std::isfinite(scale(r))) {
                scale(r) = 1.0;
            }
        }
        auto take = [&](const Eigen::VectorXd &step, double alpha) {
            std::vector<double> trial = theta;
            for (Eigen::Index r = 0; r < m; ++r) {
                const std::size_t i = free[static_cast<std::size_t>(r)];
                trial[i] = clip(theta[i] + alpha * step(r), problem.bounds[i]);
            }
            return trial;
        };
        const double noise = base_noise + 1e-13 * std::abs(current);

        bool accepted = false;
        bool stationary = false;
        double damping = 0.0;
        for (int attempt = 0; attempt < 12 && !accepted && !stationary; ++attempt) {
            Eigen::MatrixXd system = neg_h;
            system.diagonal() += damping * scale;
            damping = damping == 0.0 ? 1e-6 : damping * 10.0;
            Eigen::LLT<Eigen::MatrixXd> llt(system);
            if (llt.info() != Eigen::Success) {
                continue;
            }
            const Eigen::VectorXd step = llt.solve(g);
            if (!step.allFinite()) {
                continue;
            }
            const double decrement = 0.5 * g.dot(step);
            if (decrement <= noise) {
                // The objective cannot resolve the remaining gain; a full step is
                // still worth taking when it clearly shrinks the projected gradient.
                auto full = take(step, 1.0);
                const double value = problem.loglik(full);
                if (std::isfinite(value) && value >= current - noise &&
                    projected_norm(problem, full) < 0.5 * grad_norm) {
                    theta = std::move(full);
                    current = value;
                    accepted = true;
                } else {
                    stationary = true;
                }
                break;
            }
            double alpha = 1.0;
            for (int halving = 0; halving < 40; ++halving, alpha *= 0.5) {
                auto trial = take(step, alpha);
                const double value = problem.loglik(trial);
                if (std::isfinite(value) && value > current) {
                    theta = std::move(trial);
                    current = value;
                    accepted = true;
                    break;
                }
            }
        }
        if (!accepted) {
            converged = stationary;
            break;
        }
    }

    // Compared on the centered scale: near the optimum real gains are smaller than
    // the rounding of the uncentered sum. Steps accepted within the noise band
    // may not register as gains, so the same band applies here.
    if (problem.loglik(theta) < start_value - (base_noise + 1e-13 * std::abs(start_value))) {
        theta = start_theta;
        grad_norm = projected_norm(problem, theta);
        converged = grad_norm < tol;
    }
    RefineResult result;
    result.loglik = detail::poisson_loglik(problem.model, theta, problem.sample);
    result.theta = ParamVector{problem.model, std::move(theta)};
    result.iterations = std::min(iter, max_iter);
    result.converged = converged;
    result.gradient_norm = grad_norm;
    return result;
}

} // namespace

void GaConfig::validate() const {
    if (population_size < 2) {
        throw ConfigError{"GA population_size must be at least 2"};
    }
    if (generations < 1) {
        throw ConfigError{"GA generations must be positive"};
    }
    if (elitism_count >= population_size) {
        throw ConfigError{"GA elitism_count must be smaller than population_size"};
    }
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0) ||
        !(mutation_rate >= 0.0 && mutation_rate <= 1.0)) {
        throw ConfigError{"GA crossover and mutation rates must lie in [0, 1]"};
    }
    if (!(mutation_scale > 0.0) || !std::isfinite(mutation_scale)) {
        throw ConfigError{"GA mutation_scale must be positive"};
    }
    if (stall_generations < 1) {
        throw ConfigError{"GA stall_generations must be positive"};
    }
}

std::size_t evaluate_population(const Objective &objective, std::span<const double> population,
                                std::size_t dim, std::span<double> fitness, Execution execution) {
    const auto n = static_cast<std::ptrdiff_t>(fitness.size());
    auto eval = [&](std::ptrdiff_t i) {
        const auto row = population.subspan(static_cast<std::size_t>(i) * dim, dim);
        double value = std::numeric_limits<double>::quiet_NaN();
        try {
            value = objective(row);
        } catch (...) {
        }
        fitness[static_cast<std::size_t>(i)] = value;
    };
    if (execution == Execution::Parallel) {
#pragma omp parallel for schedule(dynamic, 4) num_threads(worker_threads())
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            eval(i);
        }
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            eval(i);
        }
    }
    std::size_t nan_count = 0;
    for (auto &f : fitness) {
        if (std::isnan(f)) {
            f = kNegInf;
            ++nan_count;
        }
    }
    return nan_count;
}

GaResult ga_maximize(const Objective &objective, std::span<const Interval> bounds,
                     const GaConfig &config, Execution execution) {
    config.validate();
    check_box(bounds);
    const std::size_t dim = bounds.size();
    const std::size_t n = config.population_size;
    Rng rng{config.seed};

    std::vector<double> population(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            population[i * dim + j] = rng.uniform(bounds[j].lower, bounds[j].upper);
        }
    }
    std::vector<double> fitness(n);
    if (evaluate_population(objective, population, dim, fitness, execution) == n) {
        throw NumericalError{"objective returned NaN for every initial individual"};
    }

    GaResult result;
    std::size_t best_index = argmax(fitness);
    result.initial_best = fitness[best_index];
    result.best_value = fitness[best_index];
    result.best.assign(population.begin() + static_cast<std::ptrdiff_t>(best_index * dim),
                       population.begin() + static_cast<std::ptrdiff_t>((best_index + 1) * dim));
    result.trace.push_back(result.best_value);

    auto tournament = [&]() {
        std::size_t winner = rng.index(n);
        for (std::size_t t = 1; t < kTournamentSize; ++t) {
            const std::size_t challenger = rng.index(n);
            if (fitness[challenger] > fitness[winner]) {
                winner = challenger;
            }
        }
        return winner;
    };

    std::vector<std::size_t> order(n);
    std::vector<double> next(n * dim);
    std::vector<double> next_fitness(n);
    std::size_t stall = 0;
    for (std::size_t gen = 1; gen <= config.generations; ++gen) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return fitness[l] > fitness[r]; });
        for (std::size_t e = 0; e < config.elitism_count; ++e) {
            std::copy_n(population.begin() + static_cast<std::ptrdiff_t>(order[e] * dim), dim,
                        next.begin() + static_cast<std::ptrdiff_t>(e * dim));
            next_fitness[e] = fitness[order[e]];
        }
        for (std::size_t i = config.elitism_count; i < n; ++i) {
            const std::size_t mother = tournament();
            const std::size_t father = tournament();
            double *child = next.data() + i * dim;
            const double *m = population.data() + mother * dim;
            const double *f = population.data() + father * dim;
            if (rng.uniform() < config.crossover_rate) {
                for (std::size_t j = 0; j < dim; ++j) {
                    const double lo = std::min(m[j], f[j]);
                    const double hi = std::max(m[j], f[j]);
                    const double spread = kBlendAlpha * (hi - lo);
                    child[j] = clip(rng.uniform(lo - spread, hi + spread), bounds[j]);
                }
            } else {
                std::copy_n(m, dim, child);
            }
            for (std::size_t j = 0; j < dim; ++j) {
                if (rng.uniform() < config.mutation_rate) {
                    child[j] = clip(child[j] + rng.normal() * config.mutation_scale *
                                                   bounds[j].width(),
                                    bounds[j]);
                }
            }
        }
        const auto offspring = config.elitism_count * dim;
        evaluate_population(objective, std::span<const double>{next}.subspan(offspring), dim,
                            std::span<double>{next_fitness}.subspan(config.elitism_count),
                            execution);
        population.swap(next);
        fitness.swap(next_fitness);

        best_index = argmax(fitness);
        if (improves(fitness[best_index], result.best_value, kStallImprovement)) {
            stall = 0;
        } else {
            ++stall;
        }
        if (fitness[best_index] > result.best_value) {
            result.best_value = fitness[best_index];
            result.best.assign(
                population.begin() + static_cast<std::ptrdiff_t>(best_index * dim),
                population.begin() + static_cast<std::ptrdiff_t>((best_index + 1) * dim));
        }
        result.trace.push_back(result.best_value);
        result.generations_used = gen;
        if (stall >= config.stall_generations) {
            break;
        }
    }
    return result;
}

RefineResult newton_refine(const ParamVector &theta0, const DeathSample &sample,
                           const RefineOptions &options) {
    validate_domain(theta0);
    validate_sample(sample);
    // Held parameters may sit on the domain edge (p = 1 gives the exponential law).
    for (std::size_t i = 0; i < theta0.size(); ++i) {
        const bool held = i < options.fixed.size() && options.fixed[i];
        const bool edge = theta0[i] <= 0.0 || (theta0.model == ModelKind::Mixture && i == 3 &&
                                               theta0[i] >= 1.0);
        if (!held && edge) {
            throw DomainError{"newton_refine requires an interior starting point"};
        }
    }
    if (options.max_iter < 0 || !(options.tol > 0.0)) {
        throw ConfigError{"refinement needs max_iter >= 0 and tol > 0"};
    }
    Problem problem{theta0.model, sample, options.bounds.value_or(default_bounds(theta0.model)),
                    options.fixed};
    if (problem.bounds.size() != theta0.size()) {
        throw ConfigError{"refinement bounds have the wrong dimension"};
    }
    problem.fixed.resize(theta0.size(), false);
    for (std::size_t i = 0; i < theta0.size(); ++i) {
        if (!problem.bounds[i].contains(theta0[i])) {
            throw DomainError{"refinement start lies outside the search box"};
        }
    }
    return refine(problem, theta0.values, options.max_iter, options.tol);
}

RefineResult newton_refine(const ParamVector &theta0, const MortalityDataset &data,
                           const RefineOptions &options) {
    return newton_refine(theta0, DeathSample::from(data), options);
}

std::uint64_t ga_run_seed(std::uint64_t seed, std::size_t run) noexcept {
    return run == 0 ? seed : mix_seed(seed, (std::uint64_t{1} << 32) + run);
}

FitResult fit(ModelKind model, const DeathSample &sample, const FitConfig &config) {
    config.ga.validate();
    validate_sample(sample);
    const std::size_t dim = param_count(model);
    const auto bounds = config.bounds.value_or(default_bounds(model));
    if (bounds.size() != dim) {
        throw ConfigError{"search box for " + std::string{to_string(model)} + " needs " +
                          std::to_string(dim) + " intervals"};
    }
    check_box(bounds);

    std::vector<double> base(dim, 0.0);
    std::vector<bool> fixed(dim, false);
    for (const auto &[name, value] : config.fixed) {
        const auto i = param_index(model, name);
        if (i >= dim) {
            throw ConfigError{"cannot fix unknown parameter '" + name + "' of " +
                              std::string{to_string(model)}};
        }
        base[i] = value;
        fixed[i] = true;
    }
    if (!config.fixed.empty()) {
        std::vector<double> probe = base;
        for (std::size_t i = 0; i < dim; ++i) {
            if (!fixed[i]) {
                probe[i] = bounds[i].upper;
            }
        }
        validate_domain(ParamVector{model, probe});
    }

    std::vector<std::size_t> free;
    std::vector<bool> log_coord;
    std::vector<Interval> search_box;
    for (std::size_t i = 0; i < dim; ++i) {
        if (fixed[i]) {
            continue;
        }
        free.push_back(i);
        const bool use_log = config.log_scale_search && bounds[i].lower > 0.0;
        log_coord.push_back(use_log);
        search_box.push_back(use_log ? Interval{std::log(bounds[i].lower), std::log(bounds[i].upper)}
                                     : bounds[i]);
    }

    auto decode = [&](std::span<const double> genes) {
        std::vector<double> v = base;
        for (std::size_t g = 0; g < free.size(); ++g) {
            const std::size_t i = free[g];
            v[i] = clip(log_coord[g] ? std::exp(genes[g]) : genes[g], bounds[i]);
        }
        return v;
    };

    if (config.ga_runs == 0) {
        throw ConfigError{"ga_runs must be at least 1"};
    }
    Problem problem{model, sample, bounds, fixed};
    const auto names = param_names(model);

    auto run_once = [&](std::size_t run) {
        FitResult result;
        result.model = model;
        result.seed = config.ga.seed;
        result.selected_run = run;

        std::vector<double> start = base;
        if (!free.empty()) {
            const Objective objective = [&](std::span<const double> genes) {
                const auto v = decode(genes);
                return detail::centered_loglik(model, v, sample);
            };
            GaConfig ga_config = config.ga;
            ga_config.seed = ga_run_seed(config.ga.seed, run);
            const auto ga = ga_maximize(objective, search_box, ga_config, config.execution);
            start = decode(ga.best);
            result.generations_used = ga.generations_used;
            const double offset = detail::poisson_loglik(model, start, sample) -
                                  detail::centered_loglik(model, start, sample);
            result.ga_loglik = ga.best_value + offset;
            result.initial_best_loglik = ga.initial_best + offset;
            result.ga_trace = ga.trace;
        } else {
            result.ga_loglik = detail::poisson_loglik(model, start, sample);
            result.initial_best_loglik = result.ga_loglik;
        }

        auto refined = refine(problem, start, config.refine_max_iter, config.refine_tol);
        result.theta_hat = std::move(refined.theta);
        result.loglik = detail::poisson_loglik(model, result.theta_hat.values, sample);
        result.refine_iterations = refined.iterations;
        result.refine_converged = refined.converged;
        result.gradient_norm = refined.gradient_norm;

        for (std::size_t i : free) {
            const double v = result.theta_hat[i];
            if (at_lower(bounds[i], v) || at_upper(bounds[i], v)) {
                result.bounds_hit.emplace_back(names[i]);
            }
        }
        result.converged = result.refine_converged && result.bounds_hit.empty();
        return result;
    };

    // A single GA run occasionally collapses into a poor basin (for the mixture,
    // one with b pinned at its upper bound). Independent runs make that unlikely.
    const std::size_t runs = free.empty() ? 1 : config.ga_runs;
    FitResult best = run_once(0);
    for (std::size_t run = 1; run < runs; ++run) {
        auto candidate = run_once(run);
        if (candidate.loglik > best.loglik) {
            best = std::move(candidate);
        }
    }
    return best;
}

FitResult fit(ModelKind model, const MortalityDataset &data, const FitConfig &config) {
    return fit(model, DeathSample::from(data), config);
}

} // namespace mortlaw
