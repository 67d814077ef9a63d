#include "fident/spec_file.hpp"

#include "fident/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fident {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw SpecError(where + ": " + what);
}

std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

int read_dimension(const json& doc, const char* key) {
    if (!doc.contains(key)) {
        fail(key, "missing");
    }
    const json& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 100000) {
        fail(key, "must be a positive integer");
    }
    return v.get<int>();
}

double read_number(const json& v, const std::string& where) {
    if (!v.is_number()) {
        fail(where, "expected a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        fail(where, "must be finite");
    }
    return x;
}

Eigen::MatrixXd read_matrix(const json& doc, const char* key, int rows, int cols) {
    const json& v = doc.at(key);
    if (!v.is_array() || static_cast<int>(v.size()) != rows) {
        fail(key, "expected an array of " + std::to_string(rows) + " rows");
    }
    Eigen::MatrixXd out(rows, cols);
    for (int i = 0; i < rows; ++i) {
        const json& row = v[static_cast<std::size_t>(i)];
        const std::string where = std::string(key) + "[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != cols) {
            fail(where, "expected an array of " + std::to_string(cols) + " numbers");
        }
        for (int j = 0; j < cols; ++j) {
            out(i, j) = read_number(row[static_cast<std::size_t>(j)], where + "[" + std::to_string(j) + "]");
        }
    }
    return out;
}

Eigen::VectorXd read_vector(const json& doc, const char* key, int size) {
    const json& v = doc.at(key);
    if (!v.is_array() || static_cast<int>(v.size()) != size) {
        fail(key, "expected an array of " + std::to_string(size) + " numbers");
    }
    Eigen::VectorXd out(size);
    for (int i = 0; i < size; ++i) {
        out(i) = read_number(v[static_cast<std::size_t>(i)], std::string(key) + "[" + std::to_string(i) + "]");
    }
    return out;
}

CellSpec read_cell(const json& v, const std::string& where) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "free") {
            return CellSpec::free();
        }
        if (s == "0") {
            return CellSpec::zero();
        }
        fail(where, "unknown cell \"" + s + "\" (expected \"free\", \"0\", {\"fixed\": v} or {\"trunc\": ...})");
    }
    if (!v.is_object()) {
        fail(where, "cell must be a string or an object");
    }
    try {
        if (v.contains("fixed")) {
            if (v.size() != 1) {
                fail(where, "fixed cell takes only the \"fixed\" key");
            }
            const double value = read_number(v.at("fixed"), where + ".fixed");
            if (value == 0.0) {
                fail(where, "fixed value must be nonzero (use \"0\" for a fixed zero)");
            }
            return CellSpec::fixed(value);
        }
        if (v.contains("trunc")) {
            for (const auto& [key, _] : v.items()) {
                if (key != "trunc" && key != "threshold") {
                    fail(where, "unexpected key \"" + key + "\" in truncated cell");
                }
            }
            const json& t = v.at("trunc");
            const double threshold = v.contains("threshold") ? read_number(v.at("threshold"), where + ".threshold") : 0.0;
            if (threshold < 0.0) {
                fail(where, "truncation threshold must be >= 0");
            }
            if (t == "+") {
                return CellSpec::positive(threshold);
            }
            if (t == "-") {
                return CellSpec::negative(threshold);
            }
            fail(where, "\"trunc\" must be \"+\" or \"-\"");
        }
    } catch (const ValidationError& e) {
        fail(where, e.what());
    }
    fail(where, "cell object needs a \"fixed\" or \"trunc\" key");
}

json raw_matrix_json(const Eigen::MatrixXd& a) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            row.push_back(a(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

const char* to_string(Metric metric) {
    return metric == Metric::Correlation ? "correlation" : "covariance";
}

ModelSpec parse_model_spec(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw SpecError("malformed JSON at " + line_column(text, e.byte > 0 ? e.byte - 1 : 0) + ": " + e.what());
    }
    if (!doc.is_object()) {
        throw SpecError("specification must be a JSON object");
    }
    static const char* const kKnown[] = {"p", "m", "metric", "lambda_pattern", "lambda", "phi", "psi", "sample_cov"};
    for (const auto& [key, _] : doc.items()) {
        if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
            fail(key, "unknown key");
        }
    }

    const int p = read_dimension(doc, "p");
    const int m = read_dimension(doc, "m");
    if (m > p) {
        fail("m", "must not exceed p");
    }

    ModelSpec spec;
    if (!doc.contains("metric")) {
        fail("metric", "missing");
    }
    const json& metric = doc.at("metric");
    if (metric == "correlation") {
        spec.metric = Metric::Correlation;
    } else if (metric == "covariance") {
        spec.metric = Metric::Covariance;
    } else {
        fail("metric", "must be \"correlation\" or \"covariance\"");
    }

    if (!doc.contains("lambda_pattern")) {
        fail("lambda_pattern", "missing");
    }
    const json& grid = doc.at("lambda_pattern");
    if (!grid.is_array() || static_cast<int>(grid.size()) != p) {
        fail("lambda_pattern", "expected an array of " + std::to_string(p) + " rows");
    }
    std::vector<CellSpec> cells;
    for (int j = 0; j < p; ++j) {
        const json& row = grid[static_cast<std::size_t>(j)];
        const std::string where = "lambda_pattern[" + std::to_string(j) + "]";
        if (!row.is_array() || static_cast<int>(row.size()) != m) {
            fail(where, "expected an array of " + std::to_string(m) + " cells");
        }
        for (int k = 0; k < m; ++k) {
            cells.push_back(read_cell(row[static_cast<std::size_t>(k)], where + "[" + std::to_string(k) + "]"));
        }
    }
    spec.pattern = LoadingPattern(p, m, std::move(cells));

    if (doc.contains("lambda")) {
        spec.values.lambda = read_matrix(doc, "lambda", p, m);
        if (auto v = find_violation(spec.pattern, *spec.values.lambda)) {
            fail("lambda", "does not realize the pattern: " + v->message);
        }
    }
    if (doc.contains("phi")) {
        spec.values.phi = read_matrix(doc, "phi", m, m);
        if (!numeric::is_symmetric(*spec.values.phi, kDefaultTolerance)) {
            fail("phi", "must be symmetric");
        }
        if (!numeric::is_positive_definite(*spec.values.phi)) {
            fail("phi", "must be positive definite");
        }
    }
    if (doc.contains("psi")) {
        spec.values.psi = read_vector(doc, "psi", p);
        for (int j = 0; j < p; ++j) {
            if (!((*spec.values.psi)(j) > 0.0)) {
                fail("psi[" + std::to_string(j) + "]", "must be positive (regularity (b))");
            }
        }
    }
    if (doc.contains("sample_cov")) {
        spec.sample_cov = read_matrix(doc, "sample_cov", p, p);
        if (!numeric::is_symmetric(*spec.sample_cov, kDefaultTolerance)) {
            fail("sample_cov", "must be symmetric");
        }
        if (!numeric::is_positive_definite(*spec.sample_cov)) {
            fail("sample_cov", "must be positive definite");
        }
    }
    return spec;
}

ModelSpec load_model_spec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw SpecError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model_spec(buf.str());
}

json cell_to_json(const CellSpec& cell) {
    switch (cell.kind()) {
        case CellKind::Free: return "free";
        case CellKind::FixedZero: return "0";
        case CellKind::FixedValue: return json{{"fixed", cell.value()}};
        case CellKind::TruncatedPositive:
        case CellKind::TruncatedNegative: {
            json j{{"trunc", cell.polarity() > 0 ? "+" : "-"}};
            if (cell.threshold() != 0.0) {
                j["threshold"] = cell.threshold();
            }
            return j;
        }
    }
    return nullptr;
}

json spec_to_json(const ModelSpec& spec) {
    json doc;
    doc["p"] = spec.pattern.p();
    doc["m"] = spec.pattern.m();
    doc["metric"] = to_string(spec.metric);
    json grid = json::array();
    for (int j = 0; j < spec.pattern.p(); ++j) {
        json row = json::array();
        for (int k = 0; k < spec.pattern.m(); ++k) {
            row.push_back(cell_to_json(spec.pattern.at(j, k)));
        }
        grid.push_back(std::move(row));
    }
    doc["lambda_pattern"] = std::move(grid);
    if (spec.values.lambda) {
        doc["lambda"] = raw_matrix_json(*spec.values.lambda);
    }
    if (spec.values.phi) {
        doc["phi"] = raw_matrix_json(*spec.values.phi);
    }
    if (spec.values.psi) {
        doc["psi"] = json(std::vector<double>(spec.values.psi->data(), spec.values.psi->data() + spec.values.psi->size()));
    }
    if (spec.sample_cov) {
        doc["sample_cov"] = raw_matrix_json(*spec.sample_cov);
    }
    return doc;
}

}  // namespace fident
