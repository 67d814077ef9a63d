#pragma once

// Admissible rotations under a loading pattern.
//
// A rotation R maps Lambda to Lambda R. A fixed zero at (j, k) survives only
// if row j of Lambda is orthogonal to column k of R, so column k of R is
// confined to the null space of the rows of Lambda that are fixed to zero in
// column k. Those rows already vanish in position k, hence e_k is always in
// that null space; when the remaining m-1 columns have full rank (C2) it is
// the whole null space and R is diagonal. Unit factor variances then force
// r_kk = +-1, and a polarity truncation in a column rules out r_kk = -1.
// A fixed nonzero value forces r_kk = 1 directly.

#include "fident/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace fident {

struct NullSpace {
    /// Orthonormal basis vectors as columns (m x dimension).
    Eigen::MatrixXd basis;
    int dimension = 0;
    /// |<v, e_k>| for the single basis vector when dimension == 1, else 0.
    double alignment = 0.0;
    /// dimension == 1 and alignment >= 1 - 1e-8.
    bool axis_aligned = false;
};

/// Null space of the rows of lambda that are fixed to zero in column k.
NullSpace constraint_nullspace(const Eigen::MatrixXd& lambda, const LoadingPattern& pat, int k,
                               std::optional<double> tol = std::nullopt);

enum class RotationStructure {
    /// R is not reduced to diagonal form: some column's null space exceeds one
    /// dimension or is not aligned with its axis.
    FullGroup,
    /// R = diag(r_11, ..., r_mm) with at least one continuous r_kk.
    DiagonalScalings,
    /// A finite set of diagonal +-1 matrices, more than one.
    SignFlips,
    /// Only R = I.
    Identity,
    /// No rotation satisfies the constraints.
    Empty,
};

const char* to_string(RotationStructure s);

struct AdmissibleRotationSet {
    RotationStructure structure = RotationStructure::FullGroup;
    std::vector<int> nullspace_dims;
    std::vector<bool> axis_aligned;
    /// Per-column null-space basis vector, filled when every column is 1-dim.
    std::vector<Eigen::VectorXd> scaling_basis;
    /// Admissible diagonal sign matrices, ordered by the binary encoding of
    /// the sign vector (bit k set means r_kk = -1). Filled for SignFlips and
    /// Identity.
    std::vector<Eigen::MatrixXd> sign_flips;
    /// Number of admissible sign matrices (0 for the continuous structures).
    /// The explicit list is only kept for m <= kMaxSignFlipFactors.
    std::uint64_t member_count = 0;
    /// Per column: r_kk pinned to 1 by a fixed nonzero value.
    std::vector<bool> pinned_by_fixed_value;
    /// Per column: r_kk > 0 enforced by a polarity truncation.
    std::vector<bool> sign_fixed_by_truncation;

    bool c2_established() const;
};

/// Rotations preserving every restriction of pat, evaluated at lambda.
/// Throws ValidationError naming the first cell when lambda does not realize pat.
AdmissibleRotationSet admissible_rotations(const Eigen::MatrixXd& lambda, const LoadingPattern& pat,
                                           Metric metric, std::optional<double> tol = std::nullopt);

inline constexpr int kMaxSignFlipFactors = 20;

struct RotationSolve {
    /// Least-squares R with lambda R ~ lambda_dag.
    Eigen::MatrixXd r;
    /// max |lambda R - lambda_dag|.
    double residual = 0.0;
    bool in_orbit = false;
};

inline constexpr double kDefaultOrbitTolerance = 1e-8;

/// Recovers R from lambda_dag = lambda R via the full-column-rank
/// pseudoinverse. Throws ValidationError if rank(lambda) < m.
RotationSolve solve_rotation(const Eigen::MatrixXd& lambda, const Eigen::MatrixXd& lambda_dag,
                             double tol = kDefaultOrbitTolerance);

/// All 2^m sign-flipped versions of sol, ordered by the binary encoding of the
/// sign vector. Throws std::length_error for m > kMaxSignFlipFactors.
std::vector<FactorSolution> enumerate_sign_flips(const FactorSolution& sol);

/// Sign vector of index i in the binary encoding used above.
Eigen::VectorXd sign_vector(std::uint64_t index, int m);

class TruncationError : public std::runtime_error {
public:
    enum class Kind { Infeasible, Degenerate, MissingTruncation };

    TruncationError(Kind kind, int row, int col, const std::string& what)
        : std::runtime_error(what), kind_(kind), row_(row), col_(col) {}

    Kind kind() const { return kind_; }
    int row() const { return row_; }
    int col() const { return col_; }

private:
    Kind kind_;
    int row_;
    int col_;
};

/// The member of sol's sign-flip orbit that satisfies every truncation of pat.
/// A truncated loading with |lambda| <= tol is degenerate; a column no flip can
/// fix is infeasible. Both raise TruncationError, as does a column without a
/// truncation.
FactorSolution canonicalize(const FactorSolution& sol, const LoadingPattern& pat,
                            double tol = kDefaultTolerance);

}  // namespace fident
