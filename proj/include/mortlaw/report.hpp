#pragma once

#include "mortlaw/decomposition.hpp"
#include "mortlaw/optimizer.hpp"
#include "mortlaw/simulator.hpp"
#include "mortlaw/validation.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace mortlaw {

inline constexpr const char *version = "1.0.0";

/// Union of parameter labels across all laws, in CSV column order.
const std::vector<std::string> &comparison_param_columns();

/// Fixed-width human formatting: 6 significant digits.
std::string format6(double value);

nlohmann::json to_json(const ParamVector &theta);
ParamVector params_from_json(const nlohmann::json &j);

nlohmann::json to_json(const GaConfig &config);
nlohmann::json to_json(const FitConfig &config);
nlohmann::json to_json(const FitResult &result);
nlohmann::json to_json(const CvReport &report);
nlohmann::json to_json(const ModalAge &mode);
nlohmann::json comparison_to_json(const std::vector<ComparisonRow> &rows);

/// Columns: rank,model,<params>,loglik,mape,folds_used,fold_warnings,converged,bounds_hit,error.
void write_comparison_csv(const std::vector<ComparisonRow> &rows, std::ostream &out);

nlohmann::json to_json(const SimSpec &spec);
/// {"model": ..., "params": {...}, "truncation_age": .., "max_age": .., "exposure": x | [..], "seed": n}
SimSpec sim_spec_from_json(const nlohmann::json &j);

} // namespace mortlaw
