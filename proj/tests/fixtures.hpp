#pragma once

// Shared test models. "RUN-A" is the two-factor, five-variable model used
// throughout the unit tests:
//
//   Lambda = [0.9 0; 0.8 0; 0 0.7; 0 0.6; 0.5 0.4]
//   Phi    = [1 0.3; 0.3 1]
//   psi    = (0.2, 0.3, 0.4, 0.5, 0.6)
//
// with fixed zeros at (3,1), (4,1), (1,2), (2,2) (1-based).

#include "fident/model.hpp"
#include "fident/random.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace fident::testing {

inline FactorSolution run_a() {
    FactorSolution sol;
    sol.lambda.resize(5, 2);
    sol.lambda << 0.9, 0.0,
                  0.8, 0.0,
                  0.0, 0.7,
                  0.0, 0.6,
                  0.5, 0.4;
    sol.phi.resize(2, 2);
    sol.phi << 1.0, 0.3,
               0.3, 1.0;
    sol.psi.resize(5);
    sol.psi << 0.2, 0.3, 0.4, 0.5, 0.6;
    return sol;
}

/// C1-C3 pattern of RUN-A: fixed zeros only.
inline LoadingPattern run_a_pattern() {
    LoadingPattern pat(5, 2);
    pat.set(2, 0, CellSpec::zero());
    pat.set(3, 0, CellSpec::zero());
    pat.set(0, 1, CellSpec::zero());
    pat.set(1, 1, CellSpec::zero());
    return pat;
}

/// RUN-A pattern plus TruncatedPositive(0) at (1,1) and (3,2).
inline LoadingPattern run_a_truncated() {
    LoadingPattern pat = run_a_pattern();
    pat.set(0, 0, CellSpec::positive());
    pat.set(2, 1, CellSpec::positive());
    return pat;
}

/// Uniform random matrix with entries in [lo, hi].
inline Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols, double lo = -1.0, double hi = 1.0) {
    Eigen::MatrixXd a(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            a(i, j) = rng.uniform(lo, hi);
        }
    }
    return a;
}

/// Random solution with p <= 10, m <= 4 and O(1) entries.
inline FactorSolution random_solution(Rng& rng, int p, int m) {
    FactorSolution sol;
    sol.lambda = random_matrix(rng, p, m);
    sol.phi = random_correlation_matrix(m, rng, -0.5, 0.5);
    sol.psi.resize(p);
    for (int j = 0; j < p; ++j) {
        sol.psi(j) = rng.uniform(0.2, 0.8);
    }
    return sol;
}

/// Random nonsingular matrix with 2-norm condition number <= max_cond.
inline Eigen::MatrixXd random_rotation(Rng& rng, int m, double max_cond = 1e3) {
    for (;;) {
        Eigen::MatrixXd r = random_matrix(rng, m, m, -2.0, 2.0);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(r);
        const auto& sv = svd.singularValues();
        if (sv(m - 1) > 0.0 && sv(0) / sv(m - 1) <= max_cond && std::abs(r.determinant()) > 1e-6) {
            return r;
        }
    }
}

/// Sigma by explicit summation, independent of the matrix-product path.
inline Eigen::MatrixXd sigma_by_summation(const FactorSolution& sol) {
    const int p = static_cast<int>(sol.lambda.rows());
    const int m = static_cast<int>(sol.lambda.cols());
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
            double s = a == b ? sol.psi(a) : 0.0;
            for (int k = 0; k < m; ++k) {
                for (int l = 0; l < m; ++l) {
                    s += sol.lambda(a, k) * sol.phi(k, l) * sol.lambda(b, l);
                }
            }
            sigma(a, b) = s;
        }
    }
    return sigma;
}

inline double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace fident::testing
