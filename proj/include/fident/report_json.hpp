#pragma once

// JSON forms of the analysis reports. Reals are rounded to 12 significant
// digits; row and column indices are 1-based.

#include "fident/conditions.hpp"
#include "fident/estimation.hpp"
#include "fident/identification.hpp"
#include "fident/model.hpp"
#include "fident/rotation.hpp"

#include <json.hpp>

namespace fident {

inline constexpr int kReportDigits = 12;

double round_significant(double x, int digits = kReportDigits);

/// "%.12g" formatting used in text output.
std::string format_number(double x);

nlohmann::json matrix_to_json(const Eigen::MatrixXd& a);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j);
nlohmann::json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const C1Result& r);
void from_json(const nlohmann::json& j, C1Result& r);
void to_json(nlohmann::json& j, const C2Result& r);
void from_json(const nlohmann::json& j, C2Result& r);
void to_json(nlohmann::json& j, const C3Result& r);
void from_json(const nlohmann::json& j, C3Result& r);
void to_json(nlohmann::json& j, const C4Result& r);
void from_json(const nlohmann::json& j, C4Result& r);
void to_json(nlohmann::json& j, const CStarResult& r);
void from_json(const nlohmann::json& j, CStarResult& r);
void to_json(nlohmann::json& j, const RegularityResult& r);
void from_json(const nlohmann::json& j, RegularityResult& r);
void to_json(nlohmann::json& j, const ConditionReport& r);
void from_json(const nlohmann::json& j, ConditionReport& r);
void to_json(nlohmann::json& j, const RestrictionCount& r);
void from_json(const nlohmann::json& j, RestrictionCount& r);

void to_json(nlohmann::json& j, const FactorSolution& s);
void from_json(const nlohmann::json& j, FactorSolution& s);
void to_json(nlohmann::json& j, const AdmissibleRotationSet& r);
void from_json(const nlohmann::json& j, AdmissibleRotationSet& r);
void to_json(nlohmann::json& j, const IdentificationReport& r);
void from_json(const nlohmann::json& j, IdentificationReport& r);
void to_json(nlohmann::json& j, const FitResult& r);
void from_json(const nlohmann::json& j, FitResult& r);
void to_json(nlohmann::json& j, const ModeCensus& c);
void from_json(const nlohmann::json& j, ModeCensus& c);

RotationStructure rotation_structure_from_string(const std::string& s);

}  // namespace fident
