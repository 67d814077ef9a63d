#include "fident/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fident::numeric {

double default_rank_tolerance(Eigen::Index rows, Eigen::Index cols) {
    return static_cast<double>(std::max(rows, cols)) * std::numeric_limits<double>::epsilon();
}

RankInfo numerical_rank(const Eigen::MatrixXd& a, double rel_tol) {
    RankInfo info;
    if (a.rows() == 0 || a.cols() == 0) {
        info.singular_values = Eigen::VectorXd(0);
        return info;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    info.singular_values = svd.singularValues();
    const double sigma_max = info.singular_values(0);
    info.threshold = rel_tol * sigma_max;
    for (Eigen::Index i = 0; i < info.singular_values.size(); ++i) {
        if (info.singular_values(i) > info.threshold) {
            ++info.rank;
        }
    }
    return info;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, double rel_tol) {
    const Eigen::Index n = a.cols();
    if (a.rows() == 0 || n == 0 || max_abs(a) == 0.0) {
        return Eigen::MatrixXd::Identity(n, n);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = rel_tol * sv(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff) {
            ++rank;
        }
    }
    return svd.matrixV().rightCols(n - rank);
}

bool is_positive_definite(const Eigen::MatrixXd& sym) {
    if (sym.rows() != sym.cols() || sym.rows() == 0) {
        return false;
    }
    if (!sym.allFinite()) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) {
        return false;
    }
    const Eigen::VectorXd& ev = eig.eigenvalues();  // ascending
    const double largest = ev(ev.size() - 1);
    const double n = static_cast<double>(sym.rows());
    return largest > 0.0 && ev(0) > n * std::numeric_limits<double>::epsilon() * largest;
}

bool is_symmetric(const Eigen::MatrixXd& a, double tol) {
    if (a.rows() != a.cols()) {
        return false;
    }
    return max_abs(a - a.transpose()) <= tol;
}

double max_abs(const Eigen::MatrixXd& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

namespace {

bool augment(int left, const std::vector<std::vector<int>>& adjacency, std::vector<int>& match_right,
             std::vector<char>& visited) {
    for (int right : adjacency[static_cast<std::size_t>(left)]) {
        auto r = static_cast<std::size_t>(right);
        if (visited[r]) {
            continue;
        }
        visited[r] = 1;
        if (match_right[r] < 0 || augment(match_right[r], adjacency, match_right, visited)) {
            match_right[r] = left;
            return true;
        }
    }
    return false;
}

}  // namespace

std::vector<int> max_bipartite_matching(const std::vector<std::vector<int>>& adjacency,
                                        int right_count) {
    std::vector<int> match_right(static_cast<std::size_t>(right_count), -1);
    for (int left = 0; left < static_cast<int>(adjacency.size()); ++left) {
        std::vector<char> visited(static_cast<std::size_t>(right_count), 0);
        augment(left, adjacency, match_right, visited);
    }
    std::vector<int> match_left(adjacency.size(), -1);
    for (int r = 0; r < right_count; ++r) {
        if (match_right[static_cast<std::size_t>(r)] >= 0) {
            match_left[static_cast<std::size_t>(match_right[static_cast<std::size_t>(r)])] = r;
        }
    }
    return match_left;
}

int matching_size(const std::vector<int>& matching) {
    return static_cast<int>(std::count_if(matching.begin(), matching.end(), [](int r) { return r >= 0; }));
}

}  // namespace fident::numeric
