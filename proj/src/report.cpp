#include "mortlaw/report.hpp"

#include "mortlaw/error.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mortlaw {

using nlohmann::json;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_escape(const std::string &s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else if (c == '\n') {
            out += ' ';
        } else {
            out += c;
        }
    }
    return out + "\"";
}

std::string join(const std::vector<std::string> &items, char sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        out += (i ? std::string(1, sep) : std::string{}) + items[i];
    }
    return out;
}

} // namespace

const std::vector<std::string> &comparison_param_columns() {
    static const std::vector<std::string> columns{"a", "b", "c", "gamma", "delta", "lambda", "p"};
    return columns;
}

std::string format6(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", value);
    return buf;
}

json to_json(const ParamVector &theta) {
    json params = json::object();
    const auto names = param_names(theta.model);
    for (std::size_t i = 0; i < names.size(); ++i) {
        params[std::string{names[i]}] = theta[i];
    }
    return {{"model", std::string{to_string(theta.model)}}, {"params", params}};
}

ParamVector params_from_json(const json &j) {
    try {
        const auto model = model_from_string(j.at("model").get<std::string>());
        const auto &params = j.at("params");
        std::vector<double> values;
        for (auto name : param_names(model)) {
            values.push_back(params.at(std::string{name}).get<double>());
        }
        ParamVector theta{model, std::move(values)};
        validate_domain(theta);
        return theta;
    } catch (const json::exception &e) {
        throw ConfigError{std::string{"malformed parameter JSON: "} + e.what()};
    }
}

json to_json(const GaConfig &config) {
    return {{"population_size", config.population_size},
            {"generations", config.generations},
            {"crossover_rate", config.crossover_rate},
            {"mutation_rate", config.mutation_rate},
            {"mutation_scale", config.mutation_scale},
            {"elitism_count", config.elitism_count},
            {"seed", config.seed},
            {"stall_generations", config.stall_generations}};
}

json to_json(const FitConfig &config) {
    json j{{"ga", to_json(config.ga)},
           {"refine_max_iter", config.refine_max_iter},
           {"refine_tol", config.refine_tol},
           {"log_scale_search", config.log_scale_search},
           {"ga_runs", config.ga_runs},
           {"fixed", config.fixed}};
    if (config.bounds) {
        json bounds = json::array();
        for (const auto &b : *config.bounds) {
            bounds.push_back({b.lower, b.upper});
        }
        j["bounds"] = bounds;
    } else {
        j["bounds"] = nullptr;
    }
    return j;
}

json to_json(const FitResult &result) {
    json j = to_json(result.theta_hat);
    j["loglik"] = finite_or_null(result.loglik);
    j["converged"] = result.converged;
    j["refine_converged"] = result.refine_converged;
    j["generations_used"] = result.generations_used;
    j["refine_iterations"] = result.refine_iterations;
    j["seed"] = result.seed;
    j["selected_run"] = result.selected_run;
    j["bounds_hit"] = result.bounds_hit;
    j["ga_loglik"] = finite_or_null(result.ga_loglik);
    j["gradient_norm"] = finite_or_null(result.gradient_norm);
    if (result.model == ModelKind::Mixture) {
        const auto reported = to_reported(result.theta_hat);
        j["reported"] = {{"shape", reported.shape},
                         {"rate", reported.rate},
                         {"lambda", reported.lambda},
                         {"p", reported.p}};
    }
    return j;
}

json to_json(const CvReport &report) {
    json per_age = json::array();
    for (const auto &e : report.per_age) {
        per_age.push_back({{"age_index", e.age_index},
                           {"observed_log_rate", e.observed_log_rate},
                           {"predicted_log_hazard", e.predicted_log_hazard},
                           {"abs_pct_error", e.abs_pct_error},
                           {"bounds_hit", e.bounds_hit}});
    }
    json skips = json::array();
    for (const auto &s : report.skips) {
        skips.push_back(
            {{"age_index", s.age_index}, {"reason", to_string(s.reason)}, {"detail", s.detail}});
    }
    return {{"model", std::string{to_string(report.model)}},
            {"mape", report.mape},
            {"per_age", per_age},
            {"skipped_ages", report.skipped_ages},
            {"skips", skips},
            {"fold_warnings", report.fold_warnings}};
}

json to_json(const ModalAge &mode) {
    return {{"age", mode.age}, {"offset", mode.offset}, {"boundary", mode.boundary}};
}

json comparison_to_json(const std::vector<ComparisonRow> &rows) {
    json out = json::array();
    int rank = 0;
    for (const auto &row : rows) {
        json j{{"model", std::string{to_string(row.model)}}};
        if (row.ok()) {
            j["rank"] = ++rank;
            j["fit"] = to_json(*row.fit);
            j["mape"] = row.cv->mape;
            j["cv"] = to_json(*row.cv);
            j["error"] = nullptr;
        } else {
            j["rank"] = nullptr;
            j["fit"] = nullptr;
            j["mape"] = nullptr;
            j["cv"] = nullptr;
            j["error"] = row.error;
        }
        out.push_back(std::move(j));
    }
    return out;
}

void write_comparison_csv(const std::vector<ComparisonRow> &rows, std::ostream &out) {
    const auto &columns = comparison_param_columns();
    out << "rank,model," << join(columns, ',')
        << ",loglik,mape,folds_used,fold_warnings,converged,bounds_hit,error\n";
    int rank = 0;
    for (const auto &row : rows) {
        out << (row.ok() ? std::to_string(++rank) : std::string{}) << ',' << to_string(row.model);
        for (const auto &name : columns) {
            out << ',';
            if (row.fit && param_index(row.model, name) < param_count(row.model)) {
                out << format6(row.fit->theta_hat.get(name));
            }
        }
        if (row.ok()) {
            out << ',' << format6(row.fit->loglik) << ',' << format6(row.cv->mape) << ','
                << row.cv->per_age.size() << ',' << row.cv->fold_warnings << ','
                << (row.fit->converged ? "true" : "false") << ','
                << csv_escape(join(row.fit->bounds_hit, ';')) << ",\n";
        } else {
            out << ",,,,,,," << csv_escape(row.error) << '\n';
        }
    }
}

json to_json(const SimSpec &spec) {
    json j = to_json(spec.theta);
    j["truncation_age"] = spec.truncation_age;
    j["max_age"] = spec.max_age;
    if (const auto *constant = std::get_if<double>(&spec.exposure)) {
        j["exposure"] = *constant;
    } else {
        j["exposure"] = std::get<std::vector<double>>(spec.exposure);
    }
    j["seed"] = spec.seed;
    return j;
}

SimSpec sim_spec_from_json(const json &j) {
    try {
        SimSpec spec;
        spec.theta = params_from_json(j);
        spec.truncation_age = j.value("truncation_age", default_truncation_age);
        spec.max_age = j.value("max_age", 110);
        const auto &exposure = j.at("exposure");
        if (exposure.is_array()) {
            spec.exposure = exposure.get<std::vector<double>>();
        } else {
            spec.exposure = exposure.get<double>();
        }
        spec.seed = j.at("seed").get<std::uint64_t>();
        return spec;
    } catch (const json::exception &e) {
        throw ConfigError{std::string{"malformed simulation spec: "} + e.what()};
    }
}

} // namespace mortlaw
