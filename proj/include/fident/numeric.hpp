#pragma once

#include <Eigen/Dense>

#include <vector>

namespace fident::numeric {

/// Result of a singular-value rank decision.
struct RankInfo {
    int rank = 0;
    Eigen::VectorXd singular_values;
    /// Absolute cutoff: singular values <= threshold count as zero.
    double threshold = 0.0;
};

/// max(rows, cols) * machine epsilon, the usual relative rank cutoff.
double default_rank_tolerance(Eigen::Index rows, Eigen::Index cols);

/// Numerical rank with cutoff rel_tol * sigma_max. Empty matrices have rank 0.
RankInfo numerical_rank(const Eigen::MatrixXd& a, double rel_tol);

/// Orthonormal basis (as columns) of the null space of a, using the same
/// cutoff as numerical_rank. A matrix with no rows has null space R^cols.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, double rel_tol);

/// Smallest eigenvalue > n * eps * largest eigenvalue. Expects a symmetric
/// argument; only the lower triangle is read.
bool is_positive_definite(const Eigen::MatrixXd& sym);

bool is_symmetric(const Eigen::MatrixXd& a, double tol);

double max_abs(const Eigen::MatrixXd& a);

/// Maximum bipartite matching (augmenting paths). adjacency[left] lists the
/// right vertices in [0, right_count) reachable from left. Returns, per left
/// vertex, its matched right vertex or -1.
std::vector<int> max_bipartite_matching(const std::vector<std::vector<int>>& adjacency,
                                        int right_count);

/// Number of matched pairs in a matching returned by max_bipartite_matching.
int matching_size(const std::vector<int>& matching);

}  // namespace fident::numeric
