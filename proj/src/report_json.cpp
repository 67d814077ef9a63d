#include "fident/report_json.hpp"

#include "fident/spec_file.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace fident {

using nlohmann::json;

namespace {

json optional_row(const std::optional<int>& row) {
    return row ? json(*row + 1) : json(nullptr);
}

std::optional<int> optional_row_from(const json& j) {
    return j.is_null() ? std::nullopt : std::optional<int>(j.get<int>() - 1);
}

json rows_to_json(const std::vector<std::optional<int>>& rows) {
    json out = json::array();
    for (const auto& r : rows) {
        out.push_back(optional_row(r));
    }
    return out;
}

std::vector<std::optional<int>> rows_from_json(const json& j) {
    std::vector<std::optional<int>> out;
    for (const auto& r : j) {
        out.push_back(optional_row_from(r));
    }
    return out;
}

Metric metric_from_string(const std::string& s) {
    if (s == "correlation") {
        return Metric::Correlation;
    }
    if (s == "covariance") {
        return Metric::Covariance;
    }
    throw std::invalid_argument("unknown metric " + s);
}

}  // namespace

double round_significant(double x, int digits) {
    if (!std::isfinite(x) || x == 0.0) {
        return x == 0.0 ? 0.0 : x;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return std::strtod(buf, nullptr);
}

std::string format_number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", kReportDigits, x == 0.0 ? 0.0 : x);
    return buf;
}

json matrix_to_json(const Eigen::MatrixXd& a) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            row.push_back(round_significant(a(i, j)));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    Eigen::MatrixXd a(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            a(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
        }
    }
    return a;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(round_significant(v(i)));
    }
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v(i) = j[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
}

void to_json(json& j, const C1Result& r) {
    j = json{{"pass", r.pass}, {"zero_counts", r.zero_counts}};
}
void from_json(const json& j, C1Result& r) {
    r.pass = j.at("pass").get<bool>();
    r.zero_counts = j.at("zero_counts").get<std::vector<int>>();
}

void to_json(json& j, const C2Result& r) {
    j = json{{"pass", r.pass}, {"ranks", r.ranks}, {"generic", r.generic}};
}
void from_json(const json& j, C2Result& r) {
    r.pass = j.at("pass").get<bool>();
    r.ranks = j.at("ranks").get<std::vector<int>>();
    r.generic = j.at("generic").get<bool>();
}

void to_json(json& j, const C3Result& r) {
    j = json{{"pass", r.pass},
             {"max_deviation", round_significant(r.max_deviation)},
             {"positive_definite", r.positive_definite}};
}
void from_json(const json& j, C3Result& r) {
    r.pass = j.at("pass").get<bool>();
    r.max_deviation = j.at("max_deviation").get<double>();
    r.positive_definite = j.at("positive_definite").get<bool>();
}

void to_json(json& j, const C4Result& r) {
    j = json{{"pass", r.pass}, {"truncated_row", rows_to_json(r.truncated_row)}, {"truncated_count", r.truncated_count}};
}
void from_json(const json& j, C4Result& r) {
    r.pass = j.at("pass").get<bool>();
    r.truncated_row = rows_from_json(j.at("truncated_row"));
    r.truncated_count = j.at("truncated_count").get<std::vector<int>>();
}

void to_json(json& j, const CStarResult& r) {
    j = json{{"pass", r.pass},
             {"c1_pass", r.c1_pass},
             {"fixed_row", rows_to_json(r.fixed_row)},
             {"distinct_rows", r.distinct_rows}};
}
void from_json(const json& j, CStarResult& r) {
    r.pass = j.at("pass").get<bool>();
    r.c1_pass = j.at("c1_pass").get<bool>();
    r.fixed_row = rows_from_json(j.at("fixed_row"));
    r.distinct_rows = j.at("distinct_rows").get<bool>();
}

void to_json(json& j, const RegularityResult& r) {
    j = json{{"lambda_rank", r.lambda_rank}, {"rank_ok", r.rank_ok}, {"psi_positive", r.psi_positive},
             {"df", r.df},                   {"df_ok", r.df_ok},     {"pass", r.pass()}};
}
void from_json(const json& j, RegularityResult& r) {
    r.lambda_rank = j.at("lambda_rank").get<int>();
    r.rank_ok = j.at("rank_ok").get<bool>();
    r.psi_positive = j.at("psi_positive").get<bool>();
    r.df = j.at("df").get<int>();
    r.df_ok = j.at("df_ok").get<bool>();
}

void to_json(json& j, const ConditionReport& r) {
    j = json{{"metric", to_string(r.metric)},
             {"c1", r.c1},
             {"c2", r.c2},
             {"c3", r.c3},
             {"c4", r.c4},
             {"cstar", r.cstar},
             {"regularity", r.regularity ? json(*r.regularity) : json(nullptr)},
             {"c1_c4", r.c1_c4()},
             {"c2_cstar", r.c2_cstar()}};
}
void from_json(const json& j, ConditionReport& r) {
    r.metric = metric_from_string(j.at("metric").get<std::string>());
    r.c1 = j.at("c1").get<C1Result>();
    r.c2 = j.at("c2").get<C2Result>();
    r.c3 = j.at("c3").get<C3Result>();
    r.c4 = j.at("c4").get<C4Result>();
    r.cstar = j.at("cstar").get<CStarResult>();
    if (j.at("regularity").is_null()) {
        r.regularity.reset();
    } else {
        r.regularity = j.at("regularity").get<RegularityResult>();
    }
}

void to_json(json& j, const RestrictionCount& r) {
    j = json{{"fixed_zero_count", r.fixed_zero_count},
             {"fixed_value_count", r.fixed_value_count},
             {"truncation_count", r.truncation_count},
             {"minimal_c1c4", r.minimal_c1c4},
             {"minimal_c2cstar", r.minimal_c2cstar}};
}
void from_json(const json& j, RestrictionCount& r) {
    r.fixed_zero_count = j.at("fixed_zero_count").get<int>();
    r.fixed_value_count = j.at("fixed_value_count").get<int>();
    r.truncation_count = j.at("truncation_count").get<int>();
    r.minimal_c1c4 = j.at("minimal_c1c4").get<int>();
    r.minimal_c2cstar = j.at("minimal_c2cstar").get<int>();
}

void to_json(json& j, const FactorSolution& s) {
    j = json{{"lambda", matrix_to_json(s.lambda)}, {"phi", matrix_to_json(s.phi)}, {"psi", vector_to_json(s.psi)}};
}
void from_json(const json& j, FactorSolution& s) {
    s.lambda = matrix_from_json(j.at("lambda"));
    s.phi = matrix_from_json(j.at("phi"));
    s.psi = vector_from_json(j.at("psi"));
}

RotationStructure rotation_structure_from_string(const std::string& s) {
    for (auto v : {RotationStructure::FullGroup, RotationStructure::DiagonalScalings, RotationStructure::SignFlips,
                   RotationStructure::Identity, RotationStructure::Empty}) {
        if (s == to_string(v)) {
            return v;
        }
    }
    throw std::invalid_argument("unknown rotation structure " + s);
}

void to_json(json& j, const AdmissibleRotationSet& r) {
    json basis = json::array();
    for (const auto& v : r.scaling_basis) {
        basis.push_back(vector_to_json(v));
    }
    json flips = json::array();
    for (const auto& f : r.sign_flips) {
        flips.push_back(vector_to_json(f.diagonal()));
    }
    j = json{{"structure", to_string(r.structure)},
             {"nullspace_dims", r.nullspace_dims},
             {"axis_aligned", r.axis_aligned},
             {"scaling_basis", std::move(basis)},
             {"sign_flips", std::move(flips)},
             {"member_count", r.member_count},
             {"pinned_by_fixed_value", r.pinned_by_fixed_value},
             {"sign_fixed_by_truncation", r.sign_fixed_by_truncation}};
}
void from_json(const json& j, AdmissibleRotationSet& r) {
    r.structure = rotation_structure_from_string(j.at("structure").get<std::string>());
    r.nullspace_dims = j.at("nullspace_dims").get<std::vector<int>>();
    r.axis_aligned = j.at("axis_aligned").get<std::vector<bool>>();
    r.scaling_basis.clear();
    for (const auto& v : j.at("scaling_basis")) {
        r.scaling_basis.push_back(vector_from_json(v));
    }
    r.sign_flips.clear();
    for (const auto& v : j.at("sign_flips")) {
        r.sign_flips.push_back(vector_from_json(v).asDiagonal().toDenseMatrix());
    }
    r.member_count = j.at("member_count").get<std::uint64_t>();
    r.pinned_by_fixed_value = j.at("pinned_by_fixed_value").get<std::vector<bool>>();
    r.sign_fixed_by_truncation = j.at("sign_fixed_by_truncation").get<std::vector<bool>>();
}

void to_json(json& j, const IdentificationReport& r) {
    json nulls = json::array();
    for (Eigen::Index c = 0; c < r.null_directions.cols(); ++c) {
        nulls.push_back(vector_to_json(r.null_directions.col(c)));
    }
    std::vector<int> boundary;
    for (int b : r.boundary_parameters) {
        boundary.push_back(b + 1);
    }
    j = json{{"t", r.t},
             {"s", r.s},
             {"jacobian_rank", r.jacobian_rank},
             {"df", r.df},
             {"locally_identified", r.locally_identified},
             {"generic", r.generic},
             {"draw_ranks", r.draw_ranks},
             {"singular_values", vector_to_json(r.singular_values)},
             {"null_directions", std::move(nulls)},
             {"boundary_parameters", boundary}};
}
void from_json(const json& j, IdentificationReport& r) {
    r.t = j.at("t").get<int>();
    r.s = j.at("s").get<int>();
    r.jacobian_rank = j.at("jacobian_rank").get<int>();
    r.df = j.at("df").get<int>();
    r.locally_identified = j.at("locally_identified").get<bool>();
    r.generic = j.at("generic").get<bool>();
    r.draw_ranks = j.at("draw_ranks").get<std::vector<int>>();
    r.singular_values = vector_from_json(j.at("singular_values"));
    const json& nulls = j.at("null_directions");
    r.null_directions = Eigen::MatrixXd(r.t, static_cast<Eigen::Index>(nulls.size()));
    for (std::size_t c = 0; c < nulls.size(); ++c) {
        r.null_directions.col(static_cast<Eigen::Index>(c)) = vector_from_json(nulls[c]);
    }
    r.boundary_parameters.clear();
    for (int b : j.at("boundary_parameters").get<std::vector<int>>()) {
        r.boundary_parameters.push_back(b - 1);
    }
}

void to_json(json& j, const FitResult& r) {
    j = json{{"start_index", r.start_index},
             {"discrepancy", round_significant(r.discrepancy)},
             {"converged", r.converged},
             {"iterations", r.iterations},
             {"gradient_norm", round_significant(r.gradient_norm)},
             {"at_truncation_bound", r.at_truncation_bound},
             {"orbit_label", r.orbit_label ? json(*r.orbit_label) : json(nullptr)},
             {"solution", r.solution}};
}
void from_json(const json& j, FitResult& r) {
    r.start_index = j.at("start_index").get<int>();
    r.discrepancy = j.at("discrepancy").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<int>();
    r.gradient_norm = j.at("gradient_norm").get<double>();
    r.at_truncation_bound = j.value("at_truncation_bound", false);
    if (j.at("orbit_label").is_null()) {
        r.orbit_label.reset();
    } else {
        r.orbit_label = j.at("orbit_label").get<std::vector<int>>();
    }
    r.solution = j.at("solution").get<FactorSolution>();
}

void to_json(json& j, const ModeCensus& c) {
    json modes = json::array();
    for (const Mode& m : c.modes) {
        modes.push_back(json{{"label", m.label ? json(*m.label) : json(nullptr)},
                             {"count", m.count},
                             {"start_indices", m.start_indices},
                             {"max_spread", round_significant(m.max_spread)},
                             {"min_discrepancy", round_significant(m.min_discrepancy)},
                             {"max_discrepancy", round_significant(m.max_discrepancy)}});
    }
    j = json{{"modes", std::move(modes)},
             {"converged", c.converged},
             {"not_converged", c.not_converged},
             {"between_mode_distance", matrix_to_json(c.between_mode_distance)},
             {"discrepancies_equal", c.discrepancies_equal}};
}
void from_json(const json& j, ModeCensus& c) {
    c.modes.clear();
    for (const auto& m : j.at("modes")) {
        Mode mode;
        if (!m.at("label").is_null()) {
            mode.label = m.at("label").get<std::vector<int>>();
        }
        mode.count = m.at("count").get<int>();
        mode.start_indices = m.at("start_indices").get<std::vector<int>>();
        mode.max_spread = m.at("max_spread").get<double>();
        mode.min_discrepancy = m.at("min_discrepancy").get<double>();
        mode.max_discrepancy = m.at("max_discrepancy").get<double>();
        c.modes.push_back(std::move(mode));
    }
    c.converged = j.at("converged").get<int>();
    c.not_converged = j.at("not_converged").get<int>();
    c.between_mode_distance = matrix_from_json(j.at("between_mode_distance"));
    c.discrepancies_equal = j.at("discrepancies_equal").get<bool>();
}

}  // namespace fident
