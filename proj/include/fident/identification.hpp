#pragma once

// Local identification by the Wald rank rule: the model is locally identified
// at theta when the Jacobian of the distinct covariance elements with respect
// to the free parameters has full column rank.

#include "fident/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fident {

enum class ParamKind { Loading, FactorCov, Uniqueness };

struct Parameter {
    ParamKind kind = ParamKind::Loading;
    /// Loading: (j, k). FactorCov: (k, l) with k >= l. Uniqueness: (j, j).
    int row = 0;
    int col = 0;
    bool truncated = false;
};

/// Display name with 1-based indices, e.g. "lambda[3,2]".
std::string parameter_name(const Parameter& param);

/// Ordered free parameters of a pattern and metric.
///
/// Order: free and truncated loadings column by column, then the lower
/// triangle of Phi column by column (off-diagonals only under the correlation
/// metric), then psi.
class ParameterLayout {
public:
    ParameterLayout(LoadingPattern pat, Metric metric);

    const LoadingPattern& pattern() const { return pattern_; }
    Metric metric() const { return metric_; }
    const std::vector<Parameter>& parameters() const { return params_; }
    int size() const { return static_cast<int>(params_.size()); }

    std::optional<int> loading_index(int j, int k) const;
    std::optional<int> phi_index(int k, int l) const;
    int psi_index(int j) const;

    /// theta from a solution. Fixed cells and a unit Phi diagonal are not checked.
    Eigen::VectorXd pack(const FactorSolution& sol) const;
    /// Solution with fixed cells from the pattern (and unit Phi diagonal under
    /// the correlation metric). No validation.
    FactorSolution unpack(const Eigen::VectorXd& theta) const;

private:
    LoadingPattern pattern_;
    Metric metric_;
    std::vector<Parameter> params_;
    std::vector<int> loading_slot_;  // p*m row-major, -1 when fixed
    std::vector<int> phi_slot_;      // m*m row-major, symmetric, -1 when fixed
};

/// Position of sigma(a, b) in vech order (column-major lower triangle).
int vech_index(int a, int b, int p);

/// vech of a symmetric matrix, column-major lower triangle.
Eigen::VectorXd vech(const Eigen::MatrixXd& sym);

/// Analytic Jacobian d vech(Sigma) / d theta, s x t with s = p(p+1)/2.
Eigen::MatrixXd jacobian_sigma(const ParameterLayout& layout, const Eigen::VectorXd& theta);

struct IdentificationReport {
    int t = 0;
    int s = 0;
    int jacobian_rank = 0;
    int df = 0;
    bool locally_identified = false;
    /// Basis of the Jacobian null space (t x (t - rank)), empty when identified.
    Eigen::MatrixXd null_directions;
    Eigen::VectorXd singular_values;
    /// Evaluated at random realizations rather than given values.
    bool generic = false;
    /// Per-draw ranks when generic.
    std::vector<int> draw_ranks;
    /// Truncated parameters sitting on their bound (rank evaluated there anyway).
    std::vector<int> boundary_parameters;
};

/// Rank rule at theta. tol is relative to sigma_max; defaults to max(s, t) * eps.
IdentificationReport wald_rank(const ParameterLayout& layout, const Eigen::VectorXd& theta,
                               std::optional<double> tol = std::nullopt);

/// Generic rank: the maximum rank over `draws` random realizations of the
/// pattern. The reported null directions and singular values come from the
/// draw attaining it.
IdentificationReport wald_rank_generic(const ParameterLayout& layout, std::uint64_t seed = 1, int draws = 5,
                                       std::optional<double> tol = std::nullopt);

}  // namespace fident
