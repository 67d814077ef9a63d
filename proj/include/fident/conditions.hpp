#pragma once

// Checks of the fixed-zero, rank, metric, polarity and fixed-value conditions
// for rotational uniqueness, the regularity assumptions, and restriction counts.

#include "fident/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace fident {

/// C1: at least m-1 fixed zeros in every column.
struct C1Result {
    std::vector<int> zero_counts;
    bool pass = false;

    bool operator==(const C1Result&) const = default;
};

/// C2: rank of each zero-row submatrix equals m-1.
struct C2Result {
    std::vector<int> ranks;
    bool pass = false;
    /// True when evaluated on a random realization of the pattern rather than
    /// on user-supplied values.
    bool generic = false;

    bool operator==(const C2Result&) const = default;
};

/// C3: Phi is a correlation matrix.
struct C3Result {
    bool pass = false;
    double max_deviation = 0.0;
    bool positive_definite = false;

    bool operator==(const C3Result&) const = default;
};

/// C4: a polarity truncation in every column.
struct C4Result {
    /// First truncated row per column, absent when the column has none.
    std::vector<std::optional<int>> truncated_row;
    std::vector<int> truncated_count;
    bool pass = false;

    bool operator==(const C4Result&) const = default;
};

/// C*: C1 plus one fixed nonzero value per column, in distinct rows.
struct CStarResult {
    bool pass = false;
    bool c1_pass = false;
    /// Row of the fixed value selected for each column by the matching.
    std::vector<std::optional<int>> fixed_row;
    bool distinct_rows = false;

    bool operator==(const CStarResult&) const = default;
};

/// Regularity assumptions (a) rank(Lambda) = m, (b) psi > 0, (c) df >= 0.
struct RegularityResult {
    int lambda_rank = 0;
    bool rank_ok = false;
    bool psi_positive = false;
    /// (p - m)^2 - p - m.
    int df = 0;
    bool df_ok = false;

    bool pass() const { return rank_ok && psi_positive && df_ok; }
    bool operator==(const RegularityResult&) const = default;
};

struct ConditionReport {
    Metric metric = Metric::Correlation;
    C1Result c1;
    C2Result c2;
    /// Always fails under the covariance metric. Without Phi values under the
    /// correlation metric it passes on the metric alone.
    C3Result c3;
    C4Result c4;
    CStarResult cstar;
    /// Absent when no numeric solution is available.
    std::optional<RegularityResult> regularity;

    /// C1-C4: C3 requires the correlation metric.
    bool c1_c4() const;
    /// C2 paired with C*.
    bool c2_cstar() const;

    bool operator==(const ConditionReport&) const = default;
};

struct RestrictionCount {
    int fixed_zero_count = 0;
    int fixed_value_count = 0;
    int truncation_count = 0;
    /// m(m-1), the fixed-value restrictions C1-C4 need.
    int minimal_c1c4 = 0;
    /// m^2, the restrictions C2-C* need.
    int minimal_c2cstar = 0;

    bool operator==(const RestrictionCount&) const = default;
};

/// Default relative rank cutoff for a p x m model: max(p, m) * eps.
double default_rank_tol(const LoadingPattern& pat);

C1Result check_c1(const LoadingPattern& pat);

/// Rows of lambda with a fixed zero in column k (ascending), column k deleted.
Eigen::MatrixXd extract_submatrix(const Eigen::MatrixXd& lambda, const LoadingPattern& pat, int k);

/// Numeric rank of every Lambda^[k]. tol is relative to each submatrix's
/// largest singular value; defaults to default_rank_tol(pat).
C2Result check_c2(const Eigen::MatrixXd& lambda, const LoadingPattern& pat,
                  std::optional<double> tol = std::nullopt);

/// check_c2 on realize_generic(pat, ...). Result is labelled generic.
C2Result check_c2_generic(const LoadingPattern& pat, std::uint64_t seed = 1,
                          std::optional<double> tol = std::nullopt);

/// Throws ValidationError for an asymmetric or non-square phi.
C3Result check_c3(const Eigen::MatrixXd& phi, double tol = kDefaultTolerance);

C4Result check_c4(const LoadingPattern& pat);

CStarResult check_cstar(const LoadingPattern& pat);

/// Never throws on bad values; reports them as failed flags.
RegularityResult check_regularity(const FactorSolution& sol, std::optional<double> tol = std::nullopt);

/// (p - m)^2 - p - m.
int regularity_df(int p, int m);

RestrictionCount count_restrictions(const LoadingPattern& pat);

/// Whatever numeric values accompany a pattern.
struct ModelValues {
    std::optional<Eigen::MatrixXd> lambda;
    std::optional<Eigen::MatrixXd> phi;
    std::optional<Eigen::VectorXd> psi;

    /// The full triple when all three parts are present.
    std::optional<FactorSolution> solution() const;
};

/// Runs every check. Without lambda, C2 is evaluated generically; regularity
/// needs the full triple.
ConditionReport check_all(const LoadingPattern& pat, Metric metric, const ModelValues& values,
                          double tol = kDefaultTolerance);

}  // namespace fident
