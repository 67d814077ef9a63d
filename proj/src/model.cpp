#include "fident/model.hpp"

#include "fident/numeric.hpp"

#include <cmath>
#include <sstream>

namespace fident {

CellSpec CellSpec::fixed(double value) {
    if (!std::isfinite(value)) {
        throw ValidationError("fixed value must be finite");
    }
    if (value == 0.0) {
        throw ValidationError("fixed value must be nonzero (use a fixed zero cell)");
    }
    return CellSpec(CellKind::FixedValue, value);
}

CellSpec CellSpec::positive(double threshold) {
    if (!std::isfinite(threshold) || threshold < 0.0) {
        throw ValidationError("truncation threshold must be finite and >= 0");
    }
    return CellSpec(CellKind::TruncatedPositive, threshold);
}

CellSpec CellSpec::negative(double threshold) {
    if (!std::isfinite(threshold) || threshold < 0.0) {
        throw ValidationError("truncation threshold must be finite and >= 0");
    }
    return CellSpec(CellKind::TruncatedNegative, threshold);
}

double CellSpec::polarity() const {
    switch (kind_) {
        case CellKind::TruncatedPositive: return 1.0;
        case CellKind::TruncatedNegative: return -1.0;
        default: return 0.0;
    }
}

bool CellSpec::admits(double lambda, double tol) const {
    if (!std::isfinite(lambda)) {
        return false;
    }
    switch (kind_) {
        case CellKind::Free: return true;
        case CellKind::FixedZero: return std::abs(lambda) <= tol;
        case CellKind::FixedValue: return std::abs(lambda - param_) <= tol;
        case CellKind::TruncatedPositive: return lambda > param_;
        case CellKind::TruncatedNegative: return -lambda > param_;
    }
    return false;
}

LoadingPattern::LoadingPattern(int p, int m)
    : LoadingPattern(p, m, std::vector<CellSpec>(static_cast<std::size_t>(p > 0 && m > 0 ? p * m : 0))) {}

LoadingPattern::LoadingPattern(int p, int m, std::vector<CellSpec> cells)
    : p_(p), m_(m), cells_(std::move(cells)) {
    if (m < 1 || m > p) {
        throw ValidationError("pattern dimensions must satisfy 1 <= m <= p (got p=" + std::to_string(p) +
                              ", m=" + std::to_string(m) + ")");
    }
    if (cells_.size() != static_cast<std::size_t>(p) * static_cast<std::size_t>(m)) {
        throw ValidationError("pattern has " + std::to_string(cells_.size()) + " cells, expected p*m = " +
                              std::to_string(p * m));
    }
}

std::size_t LoadingPattern::index(int row, int col) const {
    if (row < 0 || row >= p_ || col < 0 || col >= m_) {
        throw std::out_of_range("pattern cell (" + std::to_string(row) + ", " + std::to_string(col) +
                                ") out of range");
    }
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(col);
}

int LoadingPattern::count(CellKind kind) const {
    int n = 0;
    for (const auto& c : cells_) {
        n += c.kind() == kind ? 1 : 0;
    }
    return n;
}

int LoadingPattern::count_in_column(int col, CellKind kind) const {
    int n = 0;
    for (int j = 0; j < p_; ++j) {
        n += at(j, col).kind() == kind ? 1 : 0;
    }
    return n;
}

int LoadingPattern::truncated_in_column(int col) const {
    int n = 0;
    for (int j = 0; j < p_; ++j) {
        n += at(j, col).is_truncated() ? 1 : 0;
    }
    return n;
}

std::vector<int> LoadingPattern::zero_rows(int col) const {
    std::vector<int> rows;
    for (int j = 0; j < p_; ++j) {
        if (at(j, col).kind() == CellKind::FixedZero) {
            rows.push_back(j);
        }
    }
    return rows;
}

void validate(const FactorSolution& sol, double tol) {
    const auto p = sol.lambda.rows();
    const auto m = sol.lambda.cols();
    if (p < 1 || m < 1) {
        throw ValidationError("lambda must be non-empty");
    }
    if (sol.phi.rows() != m || sol.phi.cols() != m) {
        throw ValidationError("phi must be m x m");
    }
    if (sol.psi.size() != p) {
        throw ValidationError("psi must have length p");
    }
    if (!sol.lambda.allFinite() || !sol.phi.allFinite() || !sol.psi.allFinite()) {
        throw ValidationError("solution contains non-finite values");
    }
    if (!numeric::is_symmetric(sol.phi, tol)) {
        throw ValidationError("phi is not symmetric");
    }
    if (!numeric::is_positive_definite(sol.phi)) {
        throw ValidationError("phi is not positive definite");
    }
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!(sol.psi(j) > 0.0)) {
            throw ValidationError("regularity (b) violated: psi[" + std::to_string(j + 1) + "] = " +
                                  std::to_string(sol.psi(j)) + " is not positive");
        }
    }
}

RotationMatrix::RotationMatrix(Eigen::MatrixXd r, double det_tol) : r_(std::move(r)) {
    if (r_.rows() != r_.cols() || r_.rows() == 0) {
        throw ValidationError("rotation matrix must be square and non-empty");
    }
    if (!r_.allFinite() || !(std::abs(r_.determinant()) > det_tol)) {
        throw ValidationError("rotation matrix is singular");
    }
}

RotationMatrix RotationMatrix::identity(int m) {
    return RotationMatrix(Eigen::MatrixXd::Identity(m, m));
}

RotationMatrix RotationMatrix::sign_flip(const Eigen::VectorXd& signs) {
    for (Eigen::Index k = 0; k < signs.size(); ++k) {
        if (signs(k) != 1.0 && signs(k) != -1.0) {
            throw ValidationError("sign flip entries must be +1 or -1");
        }
    }
    return RotationMatrix(signs.asDiagonal().toDenseMatrix());
}

Eigen::MatrixXd assemble_sigma(const FactorSolution& sol) {
    validate(sol);
    Eigen::MatrixXd sigma = sol.lambda * sol.phi * sol.lambda.transpose();
    sigma.diagonal() += sol.psi;
    // Exact symmetry regardless of rounding in the triple product.
    return 0.5 * (sigma + sigma.transpose());
}

FactorSolution apply_rotation(const FactorSolution& sol, const RotationMatrix& r) {
    if (r.m() != sol.m()) {
        throw ValidationError("rotation dimension does not match the number of factors");
    }
    const Eigen::MatrixXd r_inv = r.matrix().partialPivLu().inverse();
    FactorSolution out;
    out.lambda = sol.lambda * r.matrix();
    Eigen::MatrixXd phi = r_inv * sol.phi * r_inv.transpose();
    out.phi = 0.5 * (phi + phi.transpose());
    out.psi = sol.psi;
    return out;
}

FactorSolution rescale_units(const FactorSolution& sol, const Eigen::VectorXd& d) {
    if (d.size() != sol.lambda.rows()) {
        throw ValidationError("scale vector must have length p");
    }
    for (Eigen::Index j = 0; j < d.size(); ++j) {
        if (!(d(j) > 0.0) || !std::isfinite(d(j))) {
            throw ValidationError("unit rescaling requires positive finite scales (entry " +
                                  std::to_string(j + 1) + ")");
        }
    }
    FactorSolution out;
    out.lambda = d.asDiagonal() * sol.lambda;
    out.phi = sol.phi;
    out.psi = sol.psi.cwiseProduct(d.cwiseProduct(d));
    return out;
}

LoadingPattern strip_truncations(const LoadingPattern& pat) {
    LoadingPattern out = pat;
    for (int j = 0; j < pat.p(); ++j) {
        for (int k = 0; k < pat.m(); ++k) {
            if (pat.at(j, k).is_truncated()) {
                out.set(j, k, CellSpec::free());
            }
        }
    }
    return out;
}

std::optional<CellViolation> find_violation(const LoadingPattern& pat, const Eigen::MatrixXd& lambda,
                                            double tol) {
    if (lambda.rows() != pat.p() || lambda.cols() != pat.m()) {
        return CellViolation{-1, -1, "lambda dimensions do not match the pattern"};
    }
    for (int j = 0; j < pat.p(); ++j) {
        for (int k = 0; k < pat.m(); ++k) {
            const CellSpec& cell = pat.at(j, k);
            const double v = lambda(j, k);
            if (cell.admits(v, tol)) {
                continue;
            }
            std::ostringstream msg;
            msg.precision(12);
            msg << "loading (" << j + 1 << ", " << k + 1 << ") = " << v;
            switch (cell.kind()) {
                case CellKind::Free: msg << " is not finite"; break;
                case CellKind::FixedZero: msg << " should be a fixed zero"; break;
                case CellKind::FixedValue: msg << " should equal its fixed value " << cell.value(); break;
                case CellKind::TruncatedPositive: msg << " violates truncation > " << cell.threshold(); break;
                case CellKind::TruncatedNegative: msg << " violates truncation < " << -cell.threshold(); break;
            }
            return CellViolation{j, k, msg.str()};
        }
    }
    return std::nullopt;
}

Eigen::MatrixXd random_correlation_matrix(int m, Rng& rng, double lo, double hi, int max_tries) {
    for (int attempt = 0; attempt < max_tries; ++attempt) {
        Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(m, m);
        for (int k = 0; k < m; ++k) {
            for (int l = k + 1; l < m; ++l) {
                phi(k, l) = phi(l, k) = rng.uniform(lo, hi);
            }
        }
        if (numeric::is_positive_definite(phi)) {
            return phi;
        }
    }
    throw ValidationError("could not draw a positive definite correlation matrix");
}

FactorSolution realize_generic(const LoadingPattern& pat, Metric metric, std::uint64_t seed) {
    Rng rng(seed);
    FactorSolution sol;
    sol.lambda = Eigen::MatrixXd::Zero(pat.p(), pat.m());
    for (int j = 0; j < pat.p(); ++j) {
        for (int k = 0; k < pat.m(); ++k) {
            const CellSpec& cell = pat.at(j, k);
            switch (cell.kind()) {
                case CellKind::Free: sol.lambda(j, k) = rng.sign() * rng.uniform(0.3, 0.9); break;
                case CellKind::FixedZero: break;
                case CellKind::FixedValue: sol.lambda(j, k) = cell.value(); break;
                case CellKind::TruncatedPositive:
                case CellKind::TruncatedNegative:
                    sol.lambda(j, k) = cell.polarity() * (cell.threshold() + rng.uniform(0.3, 0.9));
                    break;
            }
        }
    }
    sol.phi = random_correlation_matrix(pat.m(), rng, -0.5, 0.5);
    if (metric == Metric::Covariance) {
        Eigen::VectorXd scale(pat.m());
        for (int k = 0; k < pat.m(); ++k) {
            scale(k) = std::sqrt(rng.uniform(0.5, 2.0));
        }
        sol.phi = scale.asDiagonal() * sol.phi * scale.asDiagonal();
    }
    sol.psi.resize(pat.p());
    for (int j = 0; j < pat.p(); ++j) {
        sol.psi(j) = rng.uniform(0.2, 0.8);
    }
    return sol;
}

}  // namespace fident
