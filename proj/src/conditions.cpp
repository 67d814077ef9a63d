#include "fident/conditions.hpp"

#include "fident/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace fident {

bool ConditionReport::c1_c4() const {
    return c1.pass && c2.pass && c3.pass && c4.pass;
}

bool ConditionReport::c2_cstar() const {
    return c2.pass && cstar.pass;
}

double default_rank_tol(const LoadingPattern& pat) {
    return numeric::default_rank_tolerance(pat.p(), pat.m());
}

C1Result check_c1(const LoadingPattern& pat) {
    C1Result r;
    r.pass = true;
    for (int k = 0; k < pat.m(); ++k) {
        const int zeros = pat.count_in_column(k, CellKind::FixedZero);
        r.zero_counts.push_back(zeros);
        r.pass = r.pass && zeros >= pat.m() - 1;
    }
    return r;
}

Eigen::MatrixXd extract_submatrix(const Eigen::MatrixXd& lambda, const LoadingPattern& pat, int k) {
    if (lambda.rows() != pat.p() || lambda.cols() != pat.m()) {
        throw ValidationError("lambda dimensions do not match the pattern");
    }
    if (k < 0 || k >= pat.m()) {
        throw std::out_of_range("column index out of range");
    }
    const std::vector<int> rows = pat.zero_rows(k);
    Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), pat.m() - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int out_col = 0;
        for (int l = 0; l < pat.m(); ++l) {
            if (l != k) {
                sub(static_cast<Eigen::Index>(i), out_col++) = lambda(rows[i], l);
            }
        }
    }
    return sub;
}

C2Result check_c2(const Eigen::MatrixXd& lambda, const LoadingPattern& pat, std::optional<double> tol) {
    const double rel_tol = tol.value_or(default_rank_tol(pat));
    C2Result r;
    r.pass = true;
    for (int k = 0; k < pat.m(); ++k) {
        const int rank = numeric::numerical_rank(extract_submatrix(lambda, pat, k), rel_tol).rank;
        r.ranks.push_back(rank);
        r.pass = r.pass && rank == pat.m() - 1;
    }
    return r;
}

C2Result check_c2_generic(const LoadingPattern& pat, std::uint64_t seed, std::optional<double> tol) {
    const FactorSolution sol = realize_generic(pat, Metric::Correlation, seed);
    C2Result r = check_c2(sol.lambda, pat, tol);
    r.generic = true;
    return r;
}

C3Result check_c3(const Eigen::MatrixXd& phi, double tol) {
    if (!numeric::is_symmetric(phi, tol)) {
        throw ValidationError("phi is not symmetric");
    }
    C3Result r;
    r.positive_definite = numeric::is_positive_definite(phi);
    r.max_deviation = (phi.diagonal().array() - 1.0).abs().maxCoeff();
    r.pass = r.positive_definite && r.max_deviation <= tol;
    return r;
}

C4Result check_c4(const LoadingPattern& pat) {
    C4Result r;
    r.pass = true;
    for (int k = 0; k < pat.m(); ++k) {
        std::optional<int> first;
        int count = 0;
        for (int j = 0; j < pat.p(); ++j) {
            if (pat.at(j, k).is_truncated()) {
                if (!first) {
                    first = j;
                }
                ++count;
            }
        }
        r.truncated_row.push_back(first);
        r.truncated_count.push_back(count);
        r.pass = r.pass && count > 0;
    }
    return r;
}

CStarResult check_cstar(const LoadingPattern& pat) {
    CStarResult r;
    r.c1_pass = check_c1(pat).pass;

    // Columns on the left, rows on the right; an edge for each fixed value.
    std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(pat.m()));
    bool every_column_has_value = true;
    for (int k = 0; k < pat.m(); ++k) {
        for (int j = 0; j < pat.p(); ++j) {
            if (pat.at(j, k).kind() == CellKind::FixedValue) {
                adjacency[static_cast<std::size_t>(k)].push_back(j);
            }
        }
        every_column_has_value = every_column_has_value && !adjacency[static_cast<std::size_t>(k)].empty();
    }
    const std::vector<int> matching = numeric::max_bipartite_matching(adjacency, pat.p());
    for (int row : matching) {
        r.fixed_row.push_back(row >= 0 ? std::optional<int>(row) : std::nullopt);
    }
    r.distinct_rows = numeric::matching_size(matching) == pat.m();
    r.pass = r.c1_pass && every_column_has_value && r.distinct_rows;
    return r;
}

int regularity_df(int p, int m) {
    return (p - m) * (p - m) - p - m;
}

RegularityResult check_regularity(const FactorSolution& sol, std::optional<double> tol) {
    RegularityResult r;
    const int p = sol.p();
    const int m = sol.m();
    const double rel_tol = tol.value_or(numeric::default_rank_tolerance(p, m));
    r.lambda_rank = sol.lambda.allFinite() ? numeric::numerical_rank(sol.lambda, rel_tol).rank : 0;
    r.rank_ok = r.lambda_rank == m;
    r.psi_positive = sol.psi.size() == p && sol.psi.allFinite() && (sol.psi.array() > 0.0).all();
    r.df = regularity_df(p, m);
    r.df_ok = r.df >= 0;
    return r;
}

RestrictionCount count_restrictions(const LoadingPattern& pat) {
    RestrictionCount r;
    r.fixed_zero_count = pat.count(CellKind::FixedZero);
    r.fixed_value_count = pat.count(CellKind::FixedValue);
    r.truncation_count = pat.count(CellKind::TruncatedPositive) + pat.count(CellKind::TruncatedNegative);
    r.minimal_c1c4 = pat.m() * (pat.m() - 1);
    r.minimal_c2cstar = pat.m() * pat.m();
    return r;
}

std::optional<FactorSolution> ModelValues::solution() const {
    if (!lambda || !phi || !psi) {
        return std::nullopt;
    }
    return FactorSolution{*lambda, *phi, *psi};
}

ConditionReport check_all(const LoadingPattern& pat, Metric metric, const ModelValues& values, double tol) {
    ConditionReport report;
    report.metric = metric;
    report.c1 = check_c1(pat);
    report.c2 = values.lambda ? check_c2(*values.lambda, pat) : check_c2_generic(pat);
    if (values.phi) {
        report.c3 = check_c3(*values.phi, tol);
    } else {
        report.c3 = C3Result{true, 0.0, true};
    }
    if (metric == Metric::Covariance) {
        report.c3.pass = false;
    }
    report.c4 = check_c4(pat);
    report.cstar = check_cstar(pat);
    if (auto sol = values.solution()) {
        report.regularity = check_regularity(*sol);
    }
    return report;
}

}  // namespace fident
