#include "fident/rotation.hpp"

#include "fident/conditions.hpp"
#include "fident/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace fident {

namespace {

constexpr double kAxisAlignmentTolerance = 1e-8;

Eigen::MatrixXd zero_row_block(const Eigen::MatrixXd& lambda, const LoadingPattern& pat, int k) {
    const std::vector<int> rows = pat.zero_rows(k);
    Eigen::MatrixXd block(static_cast<Eigen::Index>(rows.size()), lambda.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        block.row(static_cast<Eigen::Index>(i)) = lambda.row(rows[i]);
    }
    return block;
}

std::string cell_name(int row, int col) {
    return "(" + std::to_string(row + 1) + ", " + std::to_string(col + 1) + ")";
}

}  // namespace

const char* to_string(RotationStructure s) {
    switch (s) {
        case RotationStructure::FullGroup: return "FullGroup";
        case RotationStructure::DiagonalScalings: return "DiagonalScalings";
        case RotationStructure::SignFlips: return "SignFlips";
        case RotationStructure::Identity: return "Identity";
        case RotationStructure::Empty: return "Empty";
    }
    return "?";
}

bool AdmissibleRotationSet::c2_established() const {
    for (std::size_t k = 0; k < nullspace_dims.size(); ++k) {
        if (nullspace_dims[k] != 1 || !axis_aligned[k]) {
            return false;
        }
    }
    return !nullspace_dims.empty();
}

NullSpace constraint_nullspace(const Eigen::MatrixXd& lambda, const LoadingPattern& pat, int k,
                               std::optional<double> tol) {
    if (lambda.rows() != pat.p() || lambda.cols() != pat.m()) {
        throw ValidationError("lambda dimensions do not match the pattern");
    }
    if (k < 0 || k >= pat.m()) {
        throw std::out_of_range("column index out of range");
    }
    NullSpace ns;
    ns.basis = numeric::null_space(zero_row_block(lambda, pat, k), tol.value_or(default_rank_tol(pat)));
    ns.dimension = static_cast<int>(ns.basis.cols());
    if (ns.dimension == 1) {
        ns.alignment = std::abs(ns.basis(k, 0));
        ns.axis_aligned = ns.alignment >= 1.0 - kAxisAlignmentTolerance;
    }
    return ns;
}

Eigen::VectorXd sign_vector(std::uint64_t index, int m) {
    Eigen::VectorXd s(m);
    for (int k = 0; k < m; ++k) {
        s(k) = ((index >> k) & 1U) != 0 ? -1.0 : 1.0;
    }
    return s;
}

AdmissibleRotationSet admissible_rotations(const Eigen::MatrixXd& lambda, const LoadingPattern& pat,
                                           Metric metric, std::optional<double> tol) {
    if (auto v = find_violation(pat, lambda)) {
        throw ValidationError("lambda does not realize the pattern: " + v->message);
    }
    const int m = pat.m();
    AdmissibleRotationSet set;
    for (int k = 0; k < m; ++k) {
        const NullSpace ns = constraint_nullspace(lambda, pat, k, tol);
        set.nullspace_dims.push_back(ns.dimension);
        set.axis_aligned.push_back(ns.axis_aligned);
        set.pinned_by_fixed_value.push_back(pat.count_in_column(k, CellKind::FixedValue) > 0);
        set.sign_fixed_by_truncation.push_back(pat.truncated_in_column(k) > 0);
        if (ns.dimension == 1) {
            set.scaling_basis.push_back(ns.basis.col(0));
        }
    }
    if (!set.c2_established()) {
        set.scaling_basis.clear();
        set.structure = RotationStructure::FullGroup;
        return set;
    }

    // R is diagonal. Each r_kk is either continuous (covariance metric, no
    // fixed value) or drawn from {+1, -1}, filtered by the column's cells.
    std::vector<std::vector<double>> allowed(static_cast<std::size_t>(m));
    bool continuous = false;
    for (int k = 0; k < m; ++k) {
        const bool finite = set.pinned_by_fixed_value[static_cast<std::size_t>(k)] || metric == Metric::Correlation;
        if (!finite) {
            continuous = true;
            continue;
        }
        for (double s : {1.0, -1.0}) {
            bool ok = true;
            for (int j = 0; j < pat.p() && ok; ++j) {
                ok = pat.at(j, k).admits(s * lambda(j, k), kDefaultTolerance);
            }
            if (ok) {
                allowed[static_cast<std::size_t>(k)].push_back(s);
            }
        }
    }
    if (continuous) {
        set.structure = RotationStructure::DiagonalScalings;
        return set;
    }

    std::uint64_t count = 1;
    for (const auto& a : allowed) {
        count *= a.size();
    }
    set.member_count = count;
    if (count == 0) {
        set.structure = RotationStructure::Empty;
        return set;
    }
    set.structure = count == 1 ? RotationStructure::Identity : RotationStructure::SignFlips;
    if (m <= kMaxSignFlipFactors) {
        for (std::uint64_t i = 0; i < (std::uint64_t{1} << m); ++i) {
            const Eigen::VectorXd s = sign_vector(i, m);
            bool ok = true;
            for (int k = 0; k < m && ok; ++k) {
                const auto& a = allowed[static_cast<std::size_t>(k)];
                ok = std::find(a.begin(), a.end(), s(k)) != a.end();
            }
            if (ok) {
                set.sign_flips.push_back(s.asDiagonal().toDenseMatrix());
            }
        }
    }
    return set;
}

RotationSolve solve_rotation(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& lambda_dag, double tol) {
    if (lambda.rows() != lambda_dag.rows() || lambda.cols() != lambda_dag.cols()) {
        throw ValidationError("loading matrices must have the same dimensions");
    }
    const auto rank =
        numeric::numerical_rank(lambda, numeric::default_rank_tolerance(lambda.rows(), lambda.cols())).rank;
    if (rank < lambda.cols()) {
        throw ValidationError("regularity (a) violated: rank(lambda) = " + std::to_string(rank) + " < m = " +
                              std::to_string(lambda.cols()));
    }
    RotationSolve out;
    out.r = lambda.householderQr().solve(lambda_dag);
    out.residual = numeric::max_abs(lambda * out.r - lambda_dag);
    out.in_orbit = out.residual <= tol;
    return out;
}

std::vector<FactorSolution> enumerate_sign_flips(const FactorSolution& sol) {
    const int m = sol.m();
    if (m > kMaxSignFlipFactors) {
        throw std::length_error("enumerating 2^" + std::to_string(m) +
                                " sign flips is impractical; use admissible_rotations instead");
    }
    std::vector<FactorSolution> orbit;
    orbit.reserve(std::size_t{1} << m);
    for (std::uint64_t i = 0; i < (std::uint64_t{1} << m); ++i) {
        orbit.push_back(apply_rotation(sol, RotationMatrix::sign_flip(sign_vector(i, m))));
    }
    return orbit;
}

FactorSolution canonicalize(const FactorSolution& sol, const LoadingPattern& pat, double tol) {
    if (sol.lambda.rows() != pat.p() || sol.lambda.cols() != pat.m()) {
        throw ValidationError("lambda dimensions do not match the pattern");
    }
    Eigen::VectorXd signs(pat.m());
    for (int k = 0; k < pat.m(); ++k) {
        if (pat.truncated_in_column(k) == 0) {
            throw TruncationError(TruncationError::Kind::MissingTruncation, -1, k,
                                  "column " + std::to_string(k + 1) + " has no polarity truncation");
        }
        bool plus_ok = true;
        bool minus_ok = true;
        int offending = -1;
        for (int j = 0; j < pat.p(); ++j) {
            const CellSpec& cell = pat.at(j, k);
            const double v = sol.lambda(j, k);
            if (cell.is_truncated() && std::abs(v) <= tol) {
                throw TruncationError(TruncationError::Kind::Degenerate, j, k,
                                      "degenerate truncation: loading " + cell_name(j, k) +
                                          " is zero within tolerance, polarity is undetermined");
            }
            const bool plus = cell.admits(v, tol);
            const bool minus = cell.admits(-v, tol);
            if (!plus && !minus && offending < 0) {
                offending = j;
            }
            plus_ok = plus_ok && plus;
            minus_ok = minus_ok && minus;
        }
        if (!plus_ok && !minus_ok) {
            if (offending < 0) {
                for (int j = 0; j < pat.p(); ++j) {
                    if (pat.at(j, k).is_truncated() && !pat.at(j, k).admits(sol.lambda(j, k), tol)) {
                        offending = j;
                        break;
                    }
                }
            }
            std::ostringstream msg;
            msg.precision(12);
            msg << "truncation infeasible: no sign of column " << k + 1 << " satisfies loading "
                << cell_name(offending, k) << " = " << sol.lambda(offending, k);
            throw TruncationError(TruncationError::Kind::Infeasible, offending, k, msg.str());
        }
        if (plus_ok && minus_ok) {
            throw TruncationError(TruncationError::Kind::Degenerate, -1, k,
                                  "degenerate truncation: both polarities of column " + std::to_string(k + 1) +
                                      " are admissible");
        }
        signs(k) = plus_ok ? 1.0 : -1.0;
    }
    return apply_rotation(sol, RotationMatrix::sign_flip(signs));
}

}  // namespace fident
