#pragma once

// Random model generation and a multi-start least-squares fitter.
//
// Under the correlation metric with fixed zeros satisfying the rank condition,
// every minimum of the discrepancy comes with 2^m polarity reflections that fit
// equally well. Enforcing one polarity truncation per column leaves one.

#include "fident/identification.hpp"
#include "fident/model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace fident {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct GeneratorConfig {
    int p = 5;
    int m = 2;
    std::uint64_t seed = 1;
    /// Magnitude range of free loadings.
    Interval loading_range{0.3, 0.9};
    Interval phi_offdiag_range{-0.5, 0.5};
    Interval psi_range{0.2, 0.8};
    /// Minimum |lambda| at truncated cells.
    double truncation_floor = 0.3;
};

struct GeneratedModel {
    LoadingPattern pattern;
    FactorSolution solution;
};

/// A pattern with exactly m-1 fixed zeros per column and one TruncatedPositive(0)
/// cell per column, plus a correlation-metric solution realizing it. The result
/// passes C1-C4 and the regularity assumptions. Deterministic in cfg.seed.
/// Throws ValidationError when (p-m)^2 - p - m < 0 or no placement is found.
GeneratedModel generate_model(const GeneratorConfig& cfg);

/// Adds one FixedValue cell per column at the current loading value, on
/// distinct rows, so the model also satisfies C*. Truncations are removed.
GeneratedModel with_fixed_values(const GeneratedModel& model, std::uint64_t seed);

enum class TruncationMode {
    /// Truncated cells are fitted as free cells.
    Ignore,
    /// Truncated cells are projected onto their admitted side after each step.
    Project,
    /// Unconstrained fit, then canonicalize onto the truncations.
    Canonicalize,
};

enum class SearchDirection {
    /// Damped Gauss-Newton on the least-squares residual.
    GaussNewton,
    /// Negative gradient.
    Steepest,
};

struct FitOptions {
    TruncationMode truncation = TruncationMode::Project;
    SearchDirection direction = SearchDirection::GaussNewton;
    int max_iterations = 2000;
    /// Max-norm of the (projected) gradient at convergence.
    double gradient_tol = 1e-9;
    /// Distance kept from a truncation threshold by the projection.
    double projection_floor = 1e-8;
    /// Lower bound kept on every psi entry.
    double psi_floor = 1e-6;
    /// Tolerance for assigning a result to a sign-flip orbit.
    double orbit_tol = 1e-5;
    /// Magnitude range of random starting loadings.
    Interval start_loading_range{0.3, 0.9};
    /// Used as the start of start_index 0 when present.
    std::optional<FactorSolution> first_start;
};

struct FitResult {
    FactorSolution solution;
    /// ||S - Sigma||_F^2 / 2.
    double discrepancy = 0.0;
    bool converged = false;
    int iterations = 0;
    int start_index = 0;
    double gradient_norm = 0.0;
    /// Stationary only with a truncated loading pinned at its bound. The
    /// truncation is strict, so such a point is not counted as converged.
    bool at_truncation_bound = false;
    /// Sign vector relating this solution to the best one, when it is a
    /// polarity reflection of it.
    std::optional<std::vector<int>> orbit_label;
};

/// ||S - Sigma(theta)||_F^2 / 2.
double discrepancy(const Eigen::MatrixXd& s_matrix, const ParameterLayout& layout, const Eigen::VectorXd& theta);

/// Gradient of discrepancy with respect to theta, via jacobian_sigma.
Eigen::VectorXd discrepancy_gradient(const Eigen::MatrixXd& s_matrix, const ParameterLayout& layout,
                                     const Eigen::VectorXd& theta);

/// Multi-start fit. Start i is seeded with seed + i. Results are sorted by
/// discrepancy (ties by start index) and labelled against the best one.
/// Throws ValidationError for a non-PD s_matrix or starts < 1.
std::vector<FitResult> fit(const Eigen::MatrixXd& s_matrix, const LoadingPattern& pat, Metric metric, int starts,
                           std::uint64_t seed, const FitOptions& options = {});

struct Mode {
    /// Absent for converged results that are not reflections of the best one.
    std::optional<std::vector<int>> label;
    int count = 0;
    std::vector<int> start_indices;
    /// Largest max-abs parameter difference between two members.
    double max_spread = 0.0;
    double min_discrepancy = 0.0;
    double max_discrepancy = 0.0;
};

struct ModeCensus {
    std::vector<Mode> modes;
    int converged = 0;
    int not_converged = 0;
    /// Max-abs loading difference between the first members of two modes.
    Eigen::MatrixXd between_mode_distance;
    /// All converged discrepancies agree within the census tolerance.
    bool discrepancies_equal = false;
};

/// Groups converged results by orbit label, in order of first appearance.
ModeCensus mode_census(const std::vector<FitResult>& results, double tol = 1e-8);

}  // namespace fident
