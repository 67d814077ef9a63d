#include "fident/estimation.hpp"

#include "fident/conditions.hpp"
#include "fident/numeric.hpp"
#include "fident/random.hpp"
#include "fident/rotation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fident {

namespace {

constexpr int kMaxPlacementAttempts = 1000;
constexpr int kMaxLineSearchHalvings = 60;
constexpr double kArmijo = 1e-4;

double draw_magnitude(Rng& rng, const Interval& range) {
    return rng.uniform(range.lo, range.hi);
}

void check_interval(const Interval& r, const char* name, bool positive) {
    if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi) || (positive && !(r.lo > 0.0))) {
        throw ValidationError(std::string("invalid ") + name);
    }
}

/// Rows of column k carrying a nonzero loading.
std::vector<int> nonzero_rows(const LoadingPattern& pat, int k) {
    std::vector<int> rows;
    for (int j = 0; j < pat.p(); ++j) {
        if (pat.at(j, k).kind() != CellKind::FixedZero) {
            rows.push_back(j);
        }
    }
    return rows;
}

/// Structural rank of each Lambda^[k] is m-1 and of Lambda is m.
bool structurally_sound(const LoadingPattern& pat) {
    const int m = pat.m();
    for (int j = 0; j < pat.p(); ++j) {
        bool any = false;
        for (int k = 0; k < m; ++k) {
            any = any || pat.at(j, k).kind() != CellKind::FixedZero;
        }
        if (!any) {
            return false;
        }
    }
    for (int k = 0; k < m; ++k) {
        // Zero rows of column k against the other columns.
        std::vector<std::vector<int>> adjacency;
        for (int j : pat.zero_rows(k)) {
            std::vector<int> cols;
            for (int l = 0; l < m; ++l) {
                if (l != k && pat.at(j, l).kind() != CellKind::FixedZero) {
                    cols.push_back(l);
                }
            }
            adjacency.push_back(std::move(cols));
        }
        if (numeric::matching_size(numeric::max_bipartite_matching(adjacency, m)) != m - 1) {
            return false;
        }
    }
    std::vector<std::vector<int>> by_column(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        by_column[static_cast<std::size_t>(k)] = nonzero_rows(pat, k);
    }
    return numeric::matching_size(numeric::max_bipartite_matching(by_column, pat.p())) == m;
}

bool feasible(const FactorSolution& sol) {
    return (sol.psi.array() > 0.0).all() && numeric::is_positive_definite(sol.phi);
}

Eigen::MatrixXd implied_sigma(const FactorSolution& sol) {
    Eigen::MatrixXd sigma = sol.lambda * sol.phi * sol.lambda.transpose();
    sigma.diagonal() += sol.psi;
    return sigma;
}

/// Frobenius weights on vech: diagonal entries once, off-diagonal twice.
Eigen::VectorXd vech_weights(int p) {
    Eigen::VectorXd w(p * (p + 1) / 2);
    for (int b = 0; b < p; ++b) {
        for (int a = b; a < p; ++a) {
            w(vech_index(a, b, p)) = a == b ? 1.0 : 2.0;
        }
    }
    return w;
}

class Fitter {
public:
    Fitter(const Eigen::MatrixXd& s_matrix, const ParameterLayout& layout, const FitOptions& options)
        : s_(s_matrix), layout_(layout), options_(options), weights_(vech_weights(layout.pattern().p())) {
        set_bounds();
    }

    FitResult run(Eigen::VectorXd theta, int start_index) const {
        project(theta);
        FitResult result;
        result.start_index = start_index;
        double f = value(theta);
        for (int iter = 0;; ++iter) {
            const Eigen::MatrixXd jac = jacobian_sigma(layout_, theta);
            const Eigen::VectorXd resid = vech(s_ - implied_sigma(layout_.unpack(theta)));
            const Eigen::VectorXd grad = -jac.transpose() * weights_.cwiseProduct(resid);
            const std::vector<bool> active = active_set(theta, grad);
            result.gradient_norm = projected_gradient_norm(grad, active);
            if (result.gradient_norm < options_.gradient_tol) {
                result.at_truncation_bound = on_truncation_bound(theta);
                result.converged = !result.at_truncation_bound;
                break;
            }
            if (iter >= options_.max_iterations) {
                break;
            }
            bool stepped = false;
            if (options_.direction == SearchDirection::GaussNewton) {
                stepped = line_search(theta, f, grad, gauss_newton(jac, grad, active));
            }
            if (!stepped) {
                Eigen::VectorXd d = -grad;
                for (Eigen::Index i = 0; i < d.size(); ++i) {
                    if (active[static_cast<std::size_t>(i)]) {
                        d(i) = 0.0;
                    }
                }
                stepped = line_search(theta, f, grad, d);
            }
            if (!stepped) {
                break;
            }
            result.iterations = iter + 1;
        }
        result.solution = layout_.unpack(theta);
        result.discrepancy = f;
        return result;
    }

    double value(const Eigen::VectorXd& theta) const {
        return 0.5 * (s_ - implied_sigma(layout_.unpack(theta))).squaredNorm();
    }

    void project(Eigen::VectorXd& theta) const {
        theta = theta.cwiseMax(lower_).cwiseMin(upper_);
    }

private:
    bool on_truncation_bound(const Eigen::VectorXd& theta) const {
        for (int i = 0; i < layout_.size(); ++i) {
            const bool truncated = layout_.parameters()[static_cast<std::size_t>(i)].truncated;
            if (truncated && (theta(i) <= lower_(i) || theta(i) >= upper_(i))) {
                return true;
            }
        }
        return false;
    }

    std::vector<bool> active_set(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad) const {
        std::vector<bool> active(static_cast<std::size_t>(theta.size()), false);
        for (Eigen::Index i = 0; i < theta.size(); ++i) {
            // On a bound with the descent direction pointing outside.
            active[static_cast<std::size_t>(i)] =
                (theta(i) <= lower_(i) && grad(i) > 0.0) || (theta(i) >= upper_(i) && grad(i) < 0.0);
        }
        return active;
    }

    void set_bounds() {
        const double inf = std::numeric_limits<double>::infinity();
        lower_ = Eigen::VectorXd::Constant(layout_.size(), -inf);
        upper_ = Eigen::VectorXd::Constant(layout_.size(), inf);
        for (int i = 0; i < layout_.size(); ++i) {
            const Parameter& par = layout_.parameters()[static_cast<std::size_t>(i)];
            if (par.kind == ParamKind::Uniqueness) {
                lower_(i) = options_.psi_floor;
            } else if (par.truncated && options_.truncation == TruncationMode::Project) {
                const CellSpec& cell = layout_.pattern().at(par.row, par.col);
                const double bound = cell.threshold() + options_.projection_floor;
                if (cell.polarity() > 0) {
                    lower_(i) = bound;
                } else {
                    upper_(i) = -bound;
                }
            }
        }
    }

    static double projected_gradient_norm(const Eigen::VectorXd& grad, const std::vector<bool>& active) {
        double norm = 0.0;
        for (Eigen::Index i = 0; i < grad.size(); ++i) {
            if (!active[static_cast<std::size_t>(i)]) {
                norm = std::max(norm, std::abs(grad(i)));
            }
        }
        return norm;
    }

    Eigen::VectorXd gauss_newton(const Eigen::MatrixXd& jac, const Eigen::VectorXd& grad,
                                 const std::vector<bool>& active) const {
        std::vector<Eigen::Index> free_idx;
        for (Eigen::Index i = 0; i < grad.size(); ++i) {
            if (!active[static_cast<std::size_t>(i)]) {
                free_idx.push_back(i);
            }
        }
        const auto n = static_cast<Eigen::Index>(free_idx.size());
        Eigen::MatrixXd jf(jac.rows(), n);
        Eigen::VectorXd gf(n);
        for (Eigen::Index c = 0; c < n; ++c) {
            jf.col(c) = jac.col(free_idx[static_cast<std::size_t>(c)]);
            gf(c) = grad(free_idx[static_cast<std::size_t>(c)]);
        }
        Eigen::MatrixXd h = jf.transpose() * weights_.asDiagonal() * jf;
        const double damping = 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
        h.diagonal().array() += damping;
        const Eigen::VectorXd df = h.ldlt().solve(-gf);
        Eigen::VectorXd d = Eigen::VectorXd::Zero(grad.size());
        for (Eigen::Index c = 0; c < n; ++c) {
            d(free_idx[static_cast<std::size_t>(c)]) = df(c);
        }
        return d;
    }

    bool line_search(Eigen::VectorXd& theta, double& f, const Eigen::VectorXd& grad,
                     const Eigen::VectorXd& direction) const {
        if (!direction.allFinite()) {
            return false;
        }
        double alpha = 1.0;
        for (int h = 0; h < kMaxLineSearchHalvings; ++h, alpha *= 0.5) {
            Eigen::VectorXd trial = theta + alpha * direction;
            project(trial);
            const double decrease = grad.dot(trial - theta);
            if (!(decrease < 0.0)) {
                continue;
            }
            const FactorSolution sol = layout_.unpack(trial);
            if (!feasible(sol)) {
                continue;
            }
            const double f_trial = value(trial);
            if (f_trial <= f + kArmijo * decrease) {
                theta = std::move(trial);
                f = f_trial;
                return true;
            }
        }
        return false;
    }

    const Eigen::MatrixXd& s_;
    const ParameterLayout& layout_;
    const FitOptions& options_;
    Eigen::VectorXd weights_;
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

Eigen::VectorXd random_start(const Eigen::MatrixXd& s_matrix, const ParameterLayout& layout,
                             const FitOptions& options, std::uint64_t seed) {
    Rng rng(seed);
    const LoadingPattern& pat = layout.pattern();
    const int m = pat.m();
    FactorSolution start;
    start.lambda = Eigen::MatrixXd::Zero(pat.p(), m);
    for (int j = 0; j < pat.p(); ++j) {
        for (int k = 0; k < m; ++k) {
            const CellSpec& cell = pat.at(j, k);
            if (cell.kind() == CellKind::FixedValue) {
                start.lambda(j, k) = cell.value();
            } else if (cell.is_estimated()) {
                const double sign = rng.sign();
                const double magnitude = draw_magnitude(rng, options.start_loading_range);
                if (cell.is_truncated() && options.truncation == TruncationMode::Project) {
                    start.lambda(j, k) = cell.polarity() * (cell.threshold() + magnitude);
                } else {
                    start.lambda(j, k) = sign * magnitude;
                }
            }
        }
    }
    start.phi = random_correlation_matrix(m, rng, -0.3, 0.3);
    start.psi = 0.5 * s_matrix.diagonal();
    return layout.pack(start);
}

std::optional<std::vector<int>> orbit_label(const FactorSolution& reference, const FactorSolution& sol, double tol) {
    const RotationSolve rs = solve_rotation(reference.lambda, sol.lambda, tol);
    if (!rs.in_orbit) {
        return std::nullopt;
    }
    std::vector<int> label;
    Eigen::MatrixXd signs = Eigen::MatrixXd::Zero(rs.r.rows(), rs.r.cols());
    for (Eigen::Index k = 0; k < rs.r.rows(); ++k) {
        const int s = rs.r(k, k) < 0.0 ? -1 : 1;
        label.push_back(s);
        signs(k, k) = s;
    }
    if (numeric::max_abs(rs.r - signs) > tol) {
        return std::nullopt;
    }
    return label;
}

double parameter_distance(const FactorSolution& a, const FactorSolution& b) {
    return std::max({numeric::max_abs(a.lambda - b.lambda), numeric::max_abs(a.phi - b.phi),
                     numeric::max_abs(a.psi - b.psi)});
}

}  // namespace

GeneratedModel generate_model(const GeneratorConfig& cfg) {
    if (cfg.m < 1 || cfg.m > cfg.p) {
        throw ValidationError("generator needs 1 <= m <= p");
    }
    const int df = regularity_df(cfg.p, cfg.m);
    if (df < 0) {
        throw ValidationError("regularity (c) violated: (p-m)^2 - p - m = " + std::to_string(df) + " < 0");
    }
    check_interval(cfg.loading_range, "loading_range", true);
    check_interval(cfg.phi_offdiag_range, "phi_offdiag_range", false);
    check_interval(cfg.psi_range, "psi_range", true);
    if (!(cfg.truncation_floor > 0.0)) {
        throw ValidationError("truncation_floor must be positive");
    }

    Rng rng(cfg.seed);
    const int p = cfg.p;
    const int m = cfg.m;
    for (int attempt = 0; attempt < kMaxPlacementAttempts; ++attempt) {
        LoadingPattern pat(p, m);
        for (int k = 0; k < m; ++k) {
            std::vector<int> rows(static_cast<std::size_t>(p));
            std::iota(rows.begin(), rows.end(), 0);
            rng.shuffle(rows);
            for (int i = 0; i < m - 1; ++i) {
                pat.set(rows[static_cast<std::size_t>(i)], k, CellSpec::zero());
            }
        }
        if (!structurally_sound(pat)) {
            continue;
        }
        for (int k = 0; k < m; ++k) {
            const std::vector<int> rows = nonzero_rows(pat, k);
            pat.set(rows[static_cast<std::size_t>(rng.index(rows.size()))], k, CellSpec::positive(0.0));
        }

        FactorSolution sol;
        sol.lambda = Eigen::MatrixXd::Zero(p, m);
        const Interval trunc_range{std::max(cfg.loading_range.lo, cfg.truncation_floor),
                                   std::max(cfg.loading_range.hi, cfg.truncation_floor)};
        for (int j = 0; j < p; ++j) {
            for (int k = 0; k < m; ++k) {
                const CellSpec& cell = pat.at(j, k);
                if (cell.kind() == CellKind::Free) {
                    sol.lambda(j, k) = rng.sign() * draw_magnitude(rng, cfg.loading_range);
                } else if (cell.is_truncated()) {
                    sol.lambda(j, k) = draw_magnitude(rng, trunc_range);
                }
            }
        }
        sol.phi = random_correlation_matrix(m, rng, cfg.phi_offdiag_range.lo, cfg.phi_offdiag_range.hi);
        sol.psi.resize(p);
        for (int j = 0; j < p; ++j) {
            sol.psi(j) = draw_magnitude(rng, cfg.psi_range);
        }

        if (check_c1(pat).pass && check_c2(sol.lambda, pat).pass && check_c4(pat).pass &&
            check_c3(sol.phi).pass && check_regularity(sol).pass()) {
            return {std::move(pat), std::move(sol)};
        }
    }
    throw ValidationError("no admissible zero placement found for p=" + std::to_string(p) +
                          ", m=" + std::to_string(m));
}

GeneratedModel with_fixed_values(const GeneratedModel& model, std::uint64_t seed) {
    Rng rng(seed);
    LoadingPattern pat = strip_truncations(model.pattern);
    const int m = pat.m();
    std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        adjacency[static_cast<std::size_t>(k)] = nonzero_rows(pat, k);
        rng.shuffle(adjacency[static_cast<std::size_t>(k)]);
    }
    const std::vector<int> rows = numeric::max_bipartite_matching(adjacency, pat.p());
    if (numeric::matching_size(rows) != m) {
        throw ValidationError("no distinct-row placement for fixed values");
    }
    for (int k = 0; k < m; ++k) {
        const int j = rows[static_cast<std::size_t>(k)];
        pat.set(j, k, CellSpec::fixed(model.solution.lambda(j, k)));
    }
    return {std::move(pat), model.solution};
}

double discrepancy(const Eigen::MatrixXd& s_matrix, const ParameterLayout& layout, const Eigen::VectorXd& theta) {
    return 0.5 * (s_matrix - implied_sigma(layout.unpack(theta))).squaredNorm();
}

Eigen::VectorXd discrepancy_gradient(const Eigen::MatrixXd& s_matrix, const ParameterLayout& layout,
                                     const Eigen::VectorXd& theta) {
    const Eigen::VectorXd resid = vech(s_matrix - implied_sigma(layout.unpack(theta)));
    const Eigen::VectorXd w = vech_weights(layout.pattern().p());
    return -jacobian_sigma(layout, theta).transpose() * w.cwiseProduct(resid);
}

std::vector<FitResult> fit(const Eigen::MatrixXd& s_matrix, const LoadingPattern& pat, Metric metric, int starts,
                           std::uint64_t seed, const FitOptions& options) {
    if (starts < 1) {
        throw ValidationError("fit needs at least one start");
    }
    if (s_matrix.rows() != pat.p() || s_matrix.cols() != pat.p()) {
        throw ValidationError("covariance matrix must be p x p");
    }
    if (!numeric::is_symmetric(s_matrix, kDefaultTolerance) || !numeric::is_positive_definite(s_matrix)) {
        throw ValidationError("covariance matrix must be symmetric positive definite");
    }
    const ParameterLayout layout(pat, metric);
    const Fitter fitter(s_matrix, layout, options);

    std::vector<FitResult> results;
    for (int i = 0; i < starts; ++i) {
        Eigen::VectorXd theta = (i == 0 && options.first_start)
                                    ? layout.pack(*options.first_start)
                                    : random_start(s_matrix, layout, options, seed + static_cast<std::uint64_t>(i));
        FitResult r = fitter.run(std::move(theta), i);
        if (options.truncation == TruncationMode::Canonicalize) {
            try {
                r.solution = canonicalize(r.solution, pat);
            } catch (const TruncationError&) {
                // Left as fitted; its orbit label will show the stray polarity.
            }
        }
        results.push_back(std::move(r));
    }
    std::stable_sort(results.begin(), results.end(), [](const FitResult& a, const FitResult& b) {
        if (a.converged != b.converged) {
            return a.converged;
        }
        return a.discrepancy < b.discrepancy;
    });

    const FactorSolution& reference = results.front().solution;
    for (FitResult& r : results) {
        try {
            r.orbit_label = orbit_label(reference, r.solution, options.orbit_tol);
        } catch (const ValidationError&) {
            r.orbit_label.reset();
        }
    }
    return results;
}

ModeCensus mode_census(const std::vector<FitResult>& results, double tol) {
    if (results.empty()) {
        throw ValidationError("mode census needs at least one result");
    }
    ModeCensus census;
    std::vector<std::vector<const FitResult*>> members;
    for (const FitResult& r : results) {
        if (!r.converged) {
            ++census.not_converged;
            continue;
        }
        ++census.converged;
        auto it = std::find_if(census.modes.begin(), census.modes.end(),
                               [&r](const Mode& mode) { return mode.label == r.orbit_label; });
        if (it == census.modes.end()) {
            census.modes.push_back(Mode{r.orbit_label, 0, {}, 0.0, r.discrepancy, r.discrepancy});
            members.emplace_back();
            it = census.modes.end() - 1;
        }
        Mode& mode = *it;
        auto& group = members[static_cast<std::size_t>(it - census.modes.begin())];
        for (const FitResult* other : group) {
            mode.max_spread = std::max(mode.max_spread, parameter_distance(other->solution, r.solution));
        }
        group.push_back(&r);
        ++mode.count;
        mode.start_indices.push_back(r.start_index);
        mode.min_discrepancy = std::min(mode.min_discrepancy, r.discrepancy);
        mode.max_discrepancy = std::max(mode.max_discrepancy, r.discrepancy);
    }

    const auto n = static_cast<Eigen::Index>(census.modes.size());
    census.between_mode_distance = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
        for (Eigen::Index b = 0; b < n; ++b) {
            census.between_mode_distance(a, b) =
                numeric::max_abs(members[static_cast<std::size_t>(a)].front()->solution.lambda -
                                 members[static_cast<std::size_t>(b)].front()->solution.lambda);
        }
    }
    if (census.converged > 0) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const Mode& mode : census.modes) {
            lo = std::min(lo, mode.min_discrepancy);
            hi = std::max(hi, mode.max_discrepancy);
        }
        census.discrepancies_equal = hi - lo <= tol;
    }
    return census;
}

}  // namespace fident
