#pragma once

// Core types of the oblique factor model Sigma = Lambda Phi Lambda^T + Psi.

#include "fident/random.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fident {

/// Raised when an input violates a model invariant or regularity assumption.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class CellKind { Free, FixedZero, FixedValue, TruncatedPositive, TruncatedNegative };

/// Specification of one loading cell.
class CellSpec {
public:
    CellSpec() = default;

    static CellSpec free() { return CellSpec(CellKind::Free, 0.0); }
    static CellSpec zero() { return CellSpec(CellKind::FixedZero, 0.0); }
    /// Throws ValidationError for zero or non-finite values; use zero() for a fixed zero.
    static CellSpec fixed(double value);
    /// lambda > threshold. threshold 0 is strict positivity.
    static CellSpec positive(double threshold = 0.0);
    /// -lambda > threshold.
    static CellSpec negative(double threshold = 0.0);

    CellKind kind() const { return kind_; }
    /// Fixed value for FixedValue cells, 0 for FixedZero, otherwise 0.
    double value() const { return kind_ == CellKind::FixedValue ? param_ : 0.0; }
    /// Truncation threshold for truncated cells, otherwise 0.
    double threshold() const { return is_truncated() ? param_ : 0.0; }

    bool is_truncated() const {
        return kind_ == CellKind::TruncatedPositive || kind_ == CellKind::TruncatedNegative;
    }
    bool is_fixed() const { return kind_ == CellKind::FixedZero || kind_ == CellKind::FixedValue; }
    /// Free and truncated cells are estimated.
    bool is_estimated() const { return !is_fixed(); }
    /// +1 for TruncatedPositive, -1 for TruncatedNegative, 0 otherwise.
    double polarity() const;

    /// Whether a numeric loading is allowed in this cell.
    bool admits(double lambda, double tol) const;

    bool operator==(const CellSpec&) const = default;

private:
    CellSpec(CellKind kind, double param) : kind_(kind), param_(param) {}

    CellKind kind_ = CellKind::Free;
    double param_ = 0.0;
};

/// p x m grid of cell specifications.
class LoadingPattern {
public:
    /// All cells Free. Requires 1 <= m <= p.
    LoadingPattern(int p, int m);
    /// cells are row-major, size p*m.
    LoadingPattern(int p, int m, std::vector<CellSpec> cells);

    int p() const { return p_; }
    int m() const { return m_; }

    const CellSpec& at(int row, int col) const { return cells_[index(row, col)]; }
    void set(int row, int col, CellSpec cell) { cells_[index(row, col)] = cell; }

    int count(CellKind kind) const;
    int count_in_column(int col, CellKind kind) const;
    int truncated_in_column(int col) const;
    /// Rows (ascending) whose cell in column col is FixedZero.
    std::vector<int> zero_rows(int col) const;

    bool operator==(const LoadingPattern&) const = default;

private:
    std::size_t index(int row, int col) const;

    int p_;
    int m_;
    std::vector<CellSpec> cells_;
};

/// Scale convention for the factors. Correlation fixes diag(Phi) = I.
enum class Metric { Correlation, Covariance };

/// Numeric (Lambda, Phi, Psi). Psi is diagonal and stored as its diagonal.
struct FactorSolution {
    Eigen::MatrixXd lambda;
    Eigen::MatrixXd phi;
    Eigen::VectorXd psi;

    int p() const { return static_cast<int>(lambda.rows()); }
    int m() const { return static_cast<int>(lambda.cols()); }
};

/// Default absolute tolerance for symmetry and Sigma comparisons on unit-scaled data.
inline constexpr double kDefaultTolerance = 1e-10;

/// Throws ValidationError on dimension mismatch, asymmetric or non-PD Phi, or
/// non-positive psi. rank(Lambda) is not checked here; see check_regularity.
void validate(const FactorSolution& sol, double tol = kDefaultTolerance);

/// Nonsingular m x m matrix acting as Lambda -> Lambda R, Phi -> R^-1 Phi R^-T.
class RotationMatrix {
public:
    /// Throws ValidationError when r is not square or |det r| <= det_tol.
    explicit RotationMatrix(Eigen::MatrixXd r, double det_tol = 1e-12);

    static RotationMatrix identity(int m);
    /// diag(signs); every entry must be +1 or -1.
    static RotationMatrix sign_flip(const Eigen::VectorXd& signs);

    const Eigen::MatrixXd& matrix() const { return r_; }
    int m() const { return static_cast<int>(r_.rows()); }

private:
    Eigen::MatrixXd r_;
};

/// Sigma = Lambda Phi Lambda^T + diag(psi). Validates sol first.
Eigen::MatrixXd assemble_sigma(const FactorSolution& sol);

/// (Lambda R, R^-1 Phi R^-T, psi). The implied Sigma is unchanged.
FactorSolution apply_rotation(const FactorSolution& sol, const RotationMatrix& r);

/// Change of measurement units: (D Lambda, Phi, D Psi D) for D = diag(d), d > 0.
FactorSolution rescale_units(const FactorSolution& sol, const Eigen::VectorXd& d);

/// Copy of pat with every truncated cell turned into a free cell.
LoadingPattern strip_truncations(const LoadingPattern& pat);

/// A loading cell that disagrees with its specification.
struct CellViolation {
    int row = 0;
    int col = 0;
    std::string message;
};

/// First cell (row-major order) of lambda not admitted by the pattern, if any.
/// Fixed cells are compared with absolute tolerance tol; truncations are strict.
std::optional<CellViolation> find_violation(const LoadingPattern& pat, const Eigen::MatrixXd& lambda,
                                            double tol = kDefaultTolerance);

/// A random solution realizing pat: free loadings with magnitude in [0.3, 0.9]
/// and random sign, truncated loadings on their admitted side of the threshold,
/// a random PD Phi (unit diagonal under the correlation metric) and psi in
/// [0.2, 0.8]. Used wherever a "generic" point is needed.
FactorSolution realize_generic(const LoadingPattern& pat, Metric metric, std::uint64_t seed);

/// Unit-diagonal PD matrix with off-diagonals drawn uniformly on [lo, hi],
/// redrawn until positive definite. Throws after max_tries rejections.
Eigen::MatrixXd random_correlation_matrix(int m, Rng& rng, double lo, double hi, int max_tries = 100000);

}  // namespace fident
