#pragma once

// JSON model specification files.
//
//   {
//     "p": 5, "m": 2,
//     "metric": "correlation",
//     "lambda_pattern": [["free", "0"], [{"trunc": "+"}, {"fixed": 0.7}], ...],
//     "lambda": [[...], ...], "phi": [[...], ...], "psi": [...],
//     "sample_cov": [[...], ...]
//   }
//
// Cells: "free", "0" (fixed zero), {"fixed": v} with v != 0,
// {"trunc": "+" | "-", "threshold": c} with c >= 0 (default 0).
// lambda, phi, psi and sample_cov are optional.

#include "fident/conditions.hpp"
#include "fident/model.hpp"

#include <json.hpp>

#include <Eigen/Dense>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fident {

/// Malformed or invalid specification file.
class SpecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ModelSpec {
    LoadingPattern pattern{1, 1};
    Metric metric = Metric::Correlation;
    ModelValues values;
    std::optional<Eigen::MatrixXd> sample_cov;
};

/// Throws SpecError; JSON syntax errors carry line and column.
ModelSpec parse_model_spec(std::string_view text);

ModelSpec load_model_spec(const std::filesystem::path& path);

nlohmann::json cell_to_json(const CellSpec& cell);
nlohmann::json spec_to_json(const ModelSpec& spec);

const char* to_string(Metric metric);

}  // namespace fident
