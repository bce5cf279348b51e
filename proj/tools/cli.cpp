#include "cli.hpp"

#include "mortlaw/dataset.hpp"
#include "mortlaw/decomposition.hpp"
#include "mortlaw/error.hpp"
#include "mortlaw/laws.hpp"
#include "mortlaw/likelihood.hpp"
#include "mortlaw/optimizer.hpp"
#include "mortlaw/report.hpp"
#include "mortlaw/simulator.hpp"
#include "mortlaw/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace mortlaw::cli {

using nlohmann::json;

namespace {

/// Raised for bad flags or inputs; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// SOURCE_DATE_EPOCH (reproducible-builds convention) pins the timestamp.
std::string utc_timestamp() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char *epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char *end = nullptr;
        const long long value = std::strtoll(epoch, &end, 10);
        if (end != epoch && *end == '\0' && value >= 0) {
            t = static_cast<std::time_t>(value);
        }
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

void write_file(const std::string &path, const std::string &content) {
    std::ofstream out{path, std::ios::binary};
    if (!out) {
        throw UsageError{"cannot write " + path};
    }
    out << content;
    if (!out) {
        throw UsageError{"failed writing " + path};
    }
}

json read_json_file(const std::string &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        throw UsageError{"cannot open " + path};
    }
    try {
        return json::parse(in);
    } catch (const json::exception &e) {
        throw UsageError{path + ": invalid JSON: " + e.what()};
    }
}

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    json config = json::object();
    std::vector<std::string> inputs;
    std::uint64_t seed{0};

    json to_json() const {
        json in = json::array();
        for (const auto &path : inputs) {
            in.push_back({{"path", path}, {"sha256", sha256_file(path)}});
        }
        return {{"command", command},        {"argv", argv},       {"config", config},
                {"inputs", in},              {"seed", seed},       {"version", version},
                {"created_at", utc_timestamp()}};
    }
};

std::string dump(const json &j) { return j.dump(2) + "\n"; }

void write_with_sidecar(const std::string &path, const std::string &content,
                        const Manifest &manifest) {
    write_file(path, content);
    write_file(path + ".manifest.json", dump(manifest.to_json()));
}

json dataset_summary(const MortalityDataset &data) {
    return {{"label", data.label()},
            {"truncation_age", data.truncation_age()},
            {"max_age", data.max_age()},
            {"rows", data.size()},
            {"total_deaths", data.total_deaths()},
            {"total_exposure", data.total_exposure()}};
}

std::map<std::string, double> parse_assignments(const std::string &text, const std::string &flag) {
    std::map<std::string, double> values;
    std::istringstream ss{text};
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw UsageError{flag + ": expected name=value, got '" + item + "'"};
        }
        const auto name = item.substr(0, eq);
        const auto raw = item.substr(eq + 1);
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(raw, &used);
        } catch (const std::exception &) {
            used = 0;
        }
        if (used != raw.size() || raw.empty()) {
            throw UsageError{flag + ": value for '" + name + "' is not a number: '" + raw + "'"};
        }
        if (values.contains(name)) {
            throw UsageError{flag + ": '" + name + "' given twice"};
        }
        values[name] = value;
    }
    if (values.empty()) {
        throw UsageError{flag + ": no parameters given"};
    }
    return values;
}

ParamVector params_from_assignments(ModelKind model, const std::string &text,
                                    const std::string &convention) {
    auto values = parse_assignments(text, "--params");
    auto take = [&](const std::string &name) {
        const auto it = values.find(name);
        if (it == values.end()) {
            throw UsageError{"--params: missing '" + name + "'"};
        }
        const double v = it->second;
        values.erase(it);
        return v;
    };
    ParamVector theta;
    if (convention == "reported") {
        if (model != ModelKind::Mixture) {
            throw UsageError{"--convention reported applies to the mixture model only"};
        }
        ReportedMixture reported;
        reported.shape = take("shape");
        reported.rate = take("rate");
        reported.lambda = take("lambda");
        reported.p = take("p");
        if (!values.empty()) {
            throw UsageError{"--params: unknown parameter '" + values.begin()->first + "'"};
        }
        try {
            return from_reported(reported);
        } catch (const DomainError &e) {
            throw UsageError{e.what()};
        }
    }
    std::vector<double> ordered;
    for (auto name : param_names(model)) {
        ordered.push_back(take(std::string{name}));
    }
    if (!values.empty()) {
        throw UsageError{"--params: unknown parameter '" + values.begin()->first + "' for " +
                         std::string{to_string(model)}};
    }
    theta = ParamVector{model, std::move(ordered)};
    try {
        validate_domain(theta);
    } catch (const DomainError &e) {
        throw UsageError{e.what()};
    }
    return theta;
}

ModelKind parse_model(const std::string &name) {
    try {
        return model_from_string(name);
    } catch (const ConfigError &e) {
        throw UsageError{e.what()};
    }
}

// Options shared by fit, cv and compare.
struct FitFlags {
    std::string input;
    int truncate{default_truncation_age};
    std::uint64_t seed{GaConfig{}.seed};
    std::size_t population{GaConfig{}.population_size};
    std::size_t generations{GaConfig{}.generations};
    double crossover{GaConfig{}.crossover_rate};
    double mutation{GaConfig{}.mutation_rate};
    double mutation_scale{GaConfig{}.mutation_scale};
    std::size_t elitism{GaConfig{}.elitism_count};
    std::size_t stall{GaConfig{}.stall_generations};
    std::size_t runs{FitConfig{}.ga_runs};
    int refine_max_iter{100};
    double refine_tol{1e-8};
    std::vector<std::string> fix;

    void attach(CLI::App *sub) {
        sub->add_option("--input", input, "Dataset CSV (age,deaths,exposure)")->required();
        sub->add_option("--truncate", truncate, "Truncation age")->capture_default_str();
        sub->add_option("--seed", seed, "GA seed")->capture_default_str();
        sub->add_option("--ga-pop", population, "GA population size")->capture_default_str();
        sub->add_option("--ga-gens", generations, "GA generations")->capture_default_str();
        sub->add_option("--ga-crossover", crossover, "GA crossover rate")->capture_default_str();
        sub->add_option("--ga-mutation", mutation, "GA mutation rate")->capture_default_str();
        sub->add_option("--ga-mutation-scale", mutation_scale,
                        "GA mutation scale (fraction of box width)")
            ->capture_default_str();
        sub->add_option("--ga-elitism", elitism, "GA elite count")->capture_default_str();
        sub->add_option("--ga-stall", stall, "GA stall generations")->capture_default_str();
        sub->add_option("--ga-runs", runs, "Independent GA runs, best refined fit kept")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
        sub->add_option("--refine-max-iter", refine_max_iter, "Newton iterations")
            ->capture_default_str();
        sub->add_option("--refine-tol", refine_tol, "Gradient tolerance")->capture_default_str();
        sub->add_option("--fix", fix, "Freeze a parameter, e.g. --fix p=1");
    }

    FitConfig config() const {
        FitConfig cfg;
        cfg.ga.seed = seed;
        cfg.ga.population_size = population;
        cfg.ga.generations = generations;
        cfg.ga.crossover_rate = crossover;
        cfg.ga.mutation_rate = mutation;
        cfg.ga.mutation_scale = mutation_scale;
        cfg.ga.elitism_count = elitism;
        cfg.ga.stall_generations = stall;
        cfg.ga_runs = runs;
        cfg.refine_max_iter = refine_max_iter;
        cfg.refine_tol = refine_tol;
        for (const auto &item : fix) {
            for (const auto &[name, value] : parse_assignments(item, "--fix")) {
                cfg.fixed[name] = value;
            }
        }
        try {
            cfg.ga.validate();
        } catch (const ConfigError &e) {
            throw UsageError{e.what()};
        }
        return cfg;
    }

    MortalityDataset load() const { return parse_csv_file(input, truncate).dataset; }
};

std::string hazard_curve_csv(const FitResult &result, const MortalityDataset &data) {
    std::ostringstream out;
    out << "age,deaths,exposure,observed_log_rate,log_hazard\n";
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto &row = data[k];
        const auto observed = observed_log_rate(data, k);
        out << data.truncation_age() + row.age_index << ',' << format_roundtrip(row.deaths) << ','
            << format_roundtrip(row.exposure) << ',' << (observed ? format6(*observed) : "") << ','
            << format6(log_hazard(result.theta_hat, row.age_index)) << '\n';
    }
    return out.str();
}

int finish_fit(const FitResult &result, bool allow_nonconverged, std::ostream &out,
               std::ostream &err) {
    out << to_string(result.model) << ":";
    for (std::size_t i = 0; i < result.theta_hat.size(); ++i) {
        out << ' ' << param_names(result.model)[i] << '=' << format6(result.theta_hat[i]);
    }
    out << " loglik=" << format6(result.loglik) << '\n';
    if (!result.converged) {
        std::string why = result.refine_converged ? "parameter on a bound:" : "refinement did not converge";
        for (const auto &name : result.bounds_hit) {
            why += " " + name;
        }
        err << "warning: fit not converged (" << why << ")\n";
        if (!allow_nonconverged) {
            return not_converged;
        }
    }
    return ok;
}

} // namespace

std::string sha256_file(const std::string &path) {
    std::ifstream in{path, std::ios::binary};
    if (!in) {
        return {};
    }
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), EVP_MD_CTX_free};
    EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
    char buf[1 << 15];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return hex.str();
}

int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Old-age mortality law estimation", "mortlaw"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version);

    // ingest-hmd
    auto *ingest_hmd = app.add_subcommand("ingest-hmd", "Convert HMD 1x1 deaths/exposures to CSV");
    std::string hmd_deaths, hmd_exposures, hmd_sex = "total", ingest_out;
    int hmd_year = 0, ingest_truncate = default_truncation_age;
    std::optional<int> hmd_max_age;
    ingest_hmd->add_option("--deaths", hmd_deaths, "HMD Deaths_1x1 file")->required();
    ingest_hmd->add_option("--exposures", hmd_exposures, "HMD Exposures_1x1 file")->required();
    ingest_hmd->add_option("--year", hmd_year, "Calendar year")->required();
    ingest_hmd->add_option("--sex", hmd_sex, "female, male or total")->capture_default_str();
    ingest_hmd->add_option("--truncate", ingest_truncate, "Truncation age")->capture_default_str();
    ingest_hmd->add_option("--max-age", hmd_max_age, "Drop ages above this");
    ingest_hmd->add_option("--out", ingest_out, "Output CSV")->required();

    // ingest-csv
    auto *ingest_csv = app.add_subcommand("ingest-csv", "Validate and canonicalise a CSV dataset");
    std::string csv_input;
    ingest_csv->add_option("--input", csv_input, "Input CSV")->required();
    ingest_csv->add_option("--truncate", ingest_truncate, "Truncation age")->capture_default_str();
    ingest_csv->add_option("--out", ingest_out, "Output CSV")->required();

    // fit
    auto *fit_cmd = app.add_subcommand("fit", "Fit one mortality law by maximum likelihood");
    FitFlags fit_flags;
    std::string fit_model, fit_out, fit_curve;
    bool allow_nonconverged = false;
    fit_cmd->add_option("--model", fit_model, "beard|gompertz|makeham|perks|mixture")->required();
    fit_flags.attach(fit_cmd);
    fit_cmd->add_option("--out", fit_out, "Fit JSON")->required();
    fit_cmd->add_option("--curve", fit_curve, "Hazard curve CSV");
    fit_cmd->add_flag("--allow-nonconverged", allow_nonconverged, "Exit 0 even if not converged");

    // cv
    auto *cv_cmd = app.add_subcommand("cv", "Leave-one-out cross-validated MAPE of one law");
    FitFlags cv_flags;
    std::string cv_model, cv_out;
    cv_cmd->add_option("--model", cv_model, "beard|gompertz|makeham|perks|mixture")->required();
    cv_flags.attach(cv_cmd);
    cv_cmd->add_option("--out", cv_out, "CV report JSON")->required();

    // compare
    auto *compare_cmd = app.add_subcommand("compare", "Fit and cross-validate several laws");
    FitFlags compare_flags;
    std::string compare_models_arg = "all", compare_out, compare_json;
    compare_cmd->add_option("--models", compare_models_arg, "'all' or comma-separated list")
        ->capture_default_str();
    compare_flags.attach(compare_cmd);
    compare_cmd->add_option("--out", compare_out, "Comparison table (.csv or .json)")->required();
    compare_cmd->add_option("--json", compare_json, "Also write the JSON table here");

    // decompose
    auto *decompose_cmd = app.add_subcommand("decompose", "Premature/senescent density components");
    std::string decompose_fit, decompose_params, decompose_convention = "canonical", decompose_out,
                                                 decompose_svg;
    double grid_step = 0.25;
    std::optional<double> grid_from, grid_to;
    int decompose_truncate = default_truncation_age;
    decompose_cmd->add_option("--fit", decompose_fit, "Mixture fit JSON");
    decompose_cmd->add_option("--params", decompose_params, "Mixture parameters name=value,...");
    decompose_cmd->add_option("--convention", decompose_convention, "canonical|reported")
        ->capture_default_str();
    decompose_cmd->add_option("--truncate", decompose_truncate, "Truncation age (with --params)")
        ->capture_default_str();
    decompose_cmd->add_option("--grid-step", grid_step, "Grid step in years")->capture_default_str();
    decompose_cmd->add_option("--from", grid_from, "First age (default: truncation age)");
    decompose_cmd->add_option("--to", grid_to, "Last age (default: fit data max age or 110)");
    decompose_cmd->add_option("--out", decompose_out, "Components CSV")->required();
    decompose_cmd->add_option("--svg", decompose_svg, "SVG chart");

    // simulate
    auto *simulate_cmd = app.add_subcommand("simulate", "Simulate Poisson death counts");
    std::string sim_model = "mixture", sim_params, sim_convention = "canonical", sim_ages = "70:110",
                sim_out, sim_spec;
    double sim_exposure = 1e5;
    std::uint64_t sim_seed = 1;
    simulate_cmd->add_option("--model", sim_model, "Law to simulate")->capture_default_str();
    simulate_cmd->add_option("--params", sim_params, "Parameters name=value,...");
    simulate_cmd->add_option("--convention", sim_convention, "canonical|reported")
        ->capture_default_str();
    simulate_cmd->add_option("--ages", sim_ages, "first:last true ages")->capture_default_str();
    simulate_cmd->add_option("--exposure", sim_exposure, "Exposure per age")->capture_default_str();
    simulate_cmd->add_option("--seed", sim_seed, "Seed")->capture_default_str();
    simulate_cmd->add_option("--spec", sim_spec, "Simulation spec JSON (overrides other flags)");
    simulate_cmd->add_option("--out", sim_out, "Output CSV")->required();

    // rerun
    auto *rerun_cmd = app.add_subcommand("rerun", "Re-execute the command recorded in a manifest");
    std::string rerun_manifest;
    rerun_cmd->add_option("--manifest", rerun_manifest, "Manifest JSON or fit JSON")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion &) {
        out << version << '\n';
        return ok;
    } catch (const CLI::ParseError &e) {
        err << "error: " << e.what() << '\n';
        if (!app.get_subcommands().empty()) {
            err << app.get_subcommands().front()->help();
        }
        return usage_error;
    }

    Manifest manifest;
    manifest.argv = args;
    try {
        if (ingest_hmd->parsed()) {
            manifest.command = "ingest-hmd";
            HmdSelection selection;
            selection.year = hmd_year;
            selection.sex = sex_from_string(hmd_sex);
            selection.truncation_age = ingest_truncate;
            selection.max_age = hmd_max_age;
            const auto data = parse_hmd_files(hmd_deaths, hmd_exposures, selection);
            manifest.inputs = {hmd_deaths, hmd_exposures};
            manifest.config = {{"year", hmd_year},
                               {"sex", to_string(selection.sex)},
                               {"truncation_age", ingest_truncate},
                               {"max_age", hmd_max_age ? json(*hmd_max_age) : json(nullptr)},
                               {"label", data.label()}};
            std::ostringstream csv;
            write_csv(data, csv);
            write_with_sidecar(ingest_out, csv.str(), manifest);
            out << "wrote " << data.size() << " ages (" << data.truncation_age() << "-"
                << data.max_age() << ") to " << ingest_out << '\n';
            return ok;
        }
        if (ingest_csv->parsed()) {
            manifest.command = "ingest-csv";
            const auto parsed = parse_csv_file(csv_input, ingest_truncate);
            manifest.inputs = {csv_input};
            manifest.config = {{"truncation_age", ingest_truncate},
                               {"dropped_rows", parsed.dropped_rows}};
            std::ostringstream csv;
            write_csv(parsed.dataset, csv);
            write_with_sidecar(ingest_out, csv.str(), manifest);
            out << "wrote " << parsed.dataset.size() << " ages to " << ingest_out << " ("
                << parsed.dropped_rows << " rows below age " << ingest_truncate << " dropped)\n";
            return ok;
        }
        if (fit_cmd->parsed()) {
            manifest.command = "fit";
            const auto model = parse_model(fit_model);
            const auto config = fit_flags.config();
            const auto data = fit_flags.load();
            manifest.inputs = {fit_flags.input};
            manifest.config = to_json(config);
            manifest.config["model"] = to_string(model);
            manifest.config["truncation_age"] = fit_flags.truncate;
            manifest.seed = config.ga.seed;
            const auto result = fit(model, data, config);
            json j = to_json(result);
            j["dataset"] = dataset_summary(data);
            j["manifest"] = manifest.to_json();
            write_file(fit_out, dump(j));
            if (!fit_curve.empty()) {
                write_with_sidecar(fit_curve, hazard_curve_csv(result, data), manifest);
            }
            return finish_fit(result, allow_nonconverged, out, err);
        }
        if (cv_cmd->parsed()) {
            manifest.command = "cv";
            const auto model = parse_model(cv_model);
            const auto config = cv_flags.config();
            const auto data = cv_flags.load();
            manifest.inputs = {cv_flags.input};
            manifest.config = to_json(config);
            manifest.config["model"] = to_string(model);
            manifest.config["truncation_age"] = cv_flags.truncate;
            manifest.seed = config.ga.seed;
            const auto report = loocv_mape(model, data, config);
            json j = to_json(report);
            j["dataset"] = dataset_summary(data);
            j["manifest"] = manifest.to_json();
            write_file(cv_out, dump(j));
            out << to_string(model) << ": LOOCV MAPE = " << format6(report.mape) << "% over "
                << report.per_age.size() << " ages";
            if (report.fold_warnings > 0) {
                out << " (" << report.fold_warnings << " folds excluded)";
            }
            out << '\n';
            return ok;
        }
        if (compare_cmd->parsed()) {
            manifest.command = "compare";
            std::vector<ModelKind> models;
            if (compare_models_arg == "all") {
                models.assign(all_models.begin(), all_models.end());
            } else {
                std::istringstream ss{compare_models_arg};
                std::string name;
                while (std::getline(ss, name, ',')) {
                    models.push_back(parse_model(name));
                }
            }
            if (models.empty()) {
                throw UsageError{"--models: no models given"};
            }
            const auto config = compare_flags.config();
            const auto data = compare_flags.load();
            manifest.inputs = {compare_flags.input};
            manifest.config = to_json(config);
            json names = json::array();
            for (auto m : models) {
                names.push_back(to_string(m));
            }
            manifest.config["models"] = names;
            manifest.config["truncation_age"] = compare_flags.truncate;
            manifest.seed = config.ga.seed;
            const auto rows = compare_models(data, models, config);
            json table{{"dataset", dataset_summary(data)},
                       {"rows", comparison_to_json(rows)},
                       {"manifest", manifest.to_json()}};
            const bool json_out = compare_out.ends_with(".json");
            if (json_out) {
                write_file(compare_out, dump(table));
            } else {
                std::ostringstream csv;
                write_comparison_csv(rows, csv);
                write_with_sidecar(compare_out, csv.str(), manifest);
            }
            if (!compare_json.empty()) {
                write_file(compare_json, dump(table));
            }
            bool any_ok = false;
            for (const auto &row : rows) {
                out << std::left << std::setw(10) << to_string(row.model);
                if (row.ok()) {
                    any_ok = true;
                    out << " MAPE " << format6(row.cv->mape) << "  loglik "
                        << format6(row.fit->loglik) << '\n';
                } else {
                    out << " error: " << row.error << '\n';
                }
            }
            return any_ok ? ok : usage_error;
        }
        if (decompose_cmd->parsed()) {
            manifest.command = "decompose";
            ParamVector theta;
            int truncation = decompose_truncate;
            double to_age = 110.0;
            if (!decompose_fit.empty() == !decompose_params.empty()) {
                throw UsageError{"decompose needs exactly one of --fit or --params"};
            }
            if (!decompose_fit.empty()) {
                const auto j = read_json_file(decompose_fit);
                try {
                    theta = params_from_json(j);
                } catch (const std::exception &e) {
                    throw UsageError{decompose_fit + ": " + e.what()};
                }
                if (j.contains("dataset")) {
                    truncation = j["dataset"].value("truncation_age", truncation);
                    to_age = j["dataset"].value("max_age", to_age);
                }
                manifest.inputs = {decompose_fit};
            } else {
                theta = params_from_assignments(ModelKind::Mixture, decompose_params,
                                                decompose_convention);
            }
            if (theta.model != ModelKind::Mixture) {
                throw UsageError{"decompose requires a mixture fit, got " +
                                 std::string{to_string(theta.model)}};
            }
            const double from = grid_from.value_or(truncation);
            const double to = grid_to.value_or(to_age);
            if (from < truncation) {
                throw UsageError{"--from must not be below the truncation age"};
            }
            const auto grid = make_age_grid(from - truncation, to - truncation, grid_step);
            const auto curves = decompose_density(theta, grid, truncation);
            std::optional<ModalAge> mode;
            if (theta[3] < 1.0) {
                mode = senescent_modal_age(theta, truncation);
            }
            manifest.config = {{"params", to_json(theta)},
                               {"grid_step", grid_step},
                               {"from", from},
                               {"to", to},
                               {"truncation_age", truncation}};
            std::ostringstream csv;
            csv << "# premature_share=" << format6(curves.premature_share) << '\n'
                << "# premature_mass=" << format6(curves.premature_mass) << '\n'
                << "# senescent_mass=" << format6(curves.senescent_mass) << '\n'
                << "# window_premature_mass=" << format6(curves.window_premature_mass) << '\n'
                << "# window_senescent_mass=" << format6(curves.window_senescent_mass) << '\n';
            if (mode) {
                csv << "# senescent_modal_age=" << format6(mode->age) << '\n'
                    << "# modal_age_on_boundary=" << (mode->boundary ? "true" : "false") << '\n';
            }
            write_components_csv(curves, csv);
            write_with_sidecar(decompose_out, csv.str(), manifest);
            if (!decompose_svg.empty()) {
                write_file(decompose_svg, components_svg(curves, "Mortality components"));
            }
            out << "premature share " << format6(curves.premature_share);
            if (mode) {
                out << ", senescent modal age " << format6(mode->age)
                    << (mode->boundary ? " (bracket boundary)" : "");
            }
            out << '\n';
            return ok;
        }
        if (simulate_cmd->parsed()) {
            manifest.command = "simulate";
            SimSpec spec;
            if (!sim_spec.empty()) {
                spec = sim_spec_from_json(read_json_file(sim_spec));
                manifest.inputs = {sim_spec};
            } else {
                if (sim_params.empty()) {
                    throw UsageError{"simulate needs --params or --spec"};
                }
                const auto model = parse_model(sim_model);
                spec.theta = params_from_assignments(model, sim_params, sim_convention);
                const auto colon = sim_ages.find(':');
                try {
                    if (colon == std::string::npos) {
                        throw std::invalid_argument{"no colon"};
                    }
                    std::size_t used_first = 0, used_last = 0;
                    const auto first_text = sim_ages.substr(0, colon);
                    const auto last_text = sim_ages.substr(colon + 1);
                    spec.truncation_age = std::stoi(first_text, &used_first);
                    spec.max_age = std::stoi(last_text, &used_last);
                    if (used_first != first_text.size() || used_last != last_text.size()) {
                        throw std::invalid_argument{"trailing characters"};
                    }
                } catch (const std::exception &) {
                    throw UsageError{"--ages must look like 70:110, got '" + sim_ages + "'"};
                }
                spec.exposure = sim_exposure;
                spec.seed = sim_seed;
            }
            manifest.config = to_json(spec);
            manifest.seed = spec.seed;
            const auto data = simulate_counts(spec);
            std::ostringstream csv;
            write_csv(data, csv);
            write_with_sidecar(sim_out, csv.str(), manifest);
            out << "wrote " << data.size() << " simulated ages to " << sim_out << '\n';
            return ok;
        }
        if (rerun_cmd->parsed()) {
            auto j = read_json_file(rerun_manifest);
            if (j.contains("manifest")) {
                j = j["manifest"];
            }
            if (!j.contains("argv") || !j["argv"].is_array()) {
                throw UsageError{rerun_manifest + ": no recorded argv"};
            }
            for (const auto &input : j.value("inputs", json::array())) {
                const auto path = input.at("path").get<std::string>();
                const auto expected = input.at("sha256").get<std::string>();
                if (sha256_file(path) != expected) {
                    throw UsageError{"input " + path + " changed since the recorded run"};
                }
            }
            return run(j["argv"].get<std::vector<std::string>>(), out, err);
        }
    } catch (const UsageError &e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const ParseError &e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const ConfigError &e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const DataError &e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const DomainError &e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const NumericalError &e) {
        err << "error: " << e.what() << '\n';
        return not_converged;
    } catch (const json::exception &e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    }
    return usage_error;
}

} // namespace mortlaw::cli
