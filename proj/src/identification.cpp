#include "fident/identification.hpp"

#include "fident/numeric.hpp"

#include <cmath>

namespace fident {

namespace {

constexpr double kBoundaryTolerance = 1e-8;

}  // namespace

std::string parameter_name(const Parameter& param) {
    const std::string r = std::to_string(param.row + 1);
    const std::string c = std::to_string(param.col + 1);
    switch (param.kind) {
        case ParamKind::Loading: return "lambda[" + r + "," + c + "]";
        case ParamKind::FactorCov: return "phi[" + r + "," + c + "]";
        case ParamKind::Uniqueness: return "psi[" + r + "]";
    }
    return "?";
}

ParameterLayout::ParameterLayout(LoadingPattern pat, Metric metric)
    : pattern_(std::move(pat)), metric_(metric) {
    const int p = pattern_.p();
    const int m = pattern_.m();
    loading_slot_.assign(static_cast<std::size_t>(p * m), -1);
    phi_slot_.assign(static_cast<std::size_t>(m * m), -1);
    for (int k = 0; k < m; ++k) {
        for (int j = 0; j < p; ++j) {
            const CellSpec& cell = pattern_.at(j, k);
            if (cell.is_estimated()) {
                loading_slot_[static_cast<std::size_t>(j * m + k)] = size();
                params_.push_back({ParamKind::Loading, j, k, cell.is_truncated()});
            }
        }
    }
    for (int l = 0; l < m; ++l) {
        for (int k = l; k < m; ++k) {
            if (k == l && metric_ == Metric::Correlation) {
                continue;
            }
            phi_slot_[static_cast<std::size_t>(k * m + l)] = size();
            phi_slot_[static_cast<std::size_t>(l * m + k)] = size();
            params_.push_back({ParamKind::FactorCov, k, l, false});
        }
    }
    for (int j = 0; j < p; ++j) {
        params_.push_back({ParamKind::Uniqueness, j, j, false});
    }
}

std::optional<int> ParameterLayout::loading_index(int j, int k) const {
    const int slot = loading_slot_.at(static_cast<std::size_t>(j * pattern_.m() + k));
    return slot >= 0 ? std::optional<int>(slot) : std::nullopt;
}

std::optional<int> ParameterLayout::phi_index(int k, int l) const {
    const int slot = phi_slot_.at(static_cast<std::size_t>(k * pattern_.m() + l));
    return slot >= 0 ? std::optional<int>(slot) : std::nullopt;
}

int ParameterLayout::psi_index(int j) const {
    return size() - pattern_.p() + j;
}

Eigen::VectorXd ParameterLayout::pack(const FactorSolution& sol) const {
    if (sol.lambda.rows() != pattern_.p() || sol.lambda.cols() != pattern_.m() || sol.phi.rows() != pattern_.m() ||
        sol.phi.cols() != pattern_.m() || sol.psi.size() != pattern_.p()) {
        throw ValidationError("solution dimensions do not match the parameter layout");
    }
    Eigen::VectorXd theta(size());
    for (int i = 0; i < size(); ++i) {
        const Parameter& par = params_[static_cast<std::size_t>(i)];
        switch (par.kind) {
            case ParamKind::Loading: theta(i) = sol.lambda(par.row, par.col); break;
            case ParamKind::FactorCov: theta(i) = sol.phi(par.row, par.col); break;
            case ParamKind::Uniqueness: theta(i) = sol.psi(par.row); break;
        }
    }
    return theta;
}

FactorSolution ParameterLayout::unpack(const Eigen::VectorXd& theta) const {
    if (theta.size() != size()) {
        throw ValidationError("parameter vector has length " + std::to_string(theta.size()) + ", expected " +
                              std::to_string(size()));
    }
    const int p = pattern_.p();
    const int m = pattern_.m();
    FactorSolution sol;
    sol.lambda.resize(p, m);
    for (int j = 0; j < p; ++j) {
        for (int k = 0; k < m; ++k) {
            sol.lambda(j, k) = pattern_.at(j, k).value();
        }
    }
    sol.phi = Eigen::MatrixXd::Identity(m, m);
    sol.psi.resize(p);
    for (int i = 0; i < size(); ++i) {
        const Parameter& par = params_[static_cast<std::size_t>(i)];
        switch (par.kind) {
            case ParamKind::Loading: sol.lambda(par.row, par.col) = theta(i); break;
            case ParamKind::FactorCov:
                sol.phi(par.row, par.col) = theta(i);
                sol.phi(par.col, par.row) = theta(i);
                break;
            case ParamKind::Uniqueness: sol.psi(par.row) = theta(i); break;
        }
    }
    return sol;
}

int vech_index(int a, int b, int p) {
    if (a < b) {
        std::swap(a, b);
    }
    // Columns 0..b-1 hold p + (p-1) + ... + (p-b+1) entries.
    return b * p - b * (b - 1) / 2 + (a - b);
}

Eigen::VectorXd vech(const Eigen::MatrixXd& sym) {
    const int p = static_cast<int>(sym.rows());
    Eigen::VectorXd v(p * (p + 1) / 2);
    for (int b = 0; b < p; ++b) {
        for (int a = b; a < p; ++a) {
            v(vech_index(a, b, p)) = sym(a, b);
        }
    }
    return v;
}

Eigen::MatrixXd jacobian_sigma(const ParameterLayout& layout, const Eigen::VectorXd& theta) {
    const FactorSolution sol = layout.unpack(theta);
    const int p = layout.pattern().p();
    const int s = p * (p + 1) / 2;
    const Eigen::MatrixXd lambda_phi = sol.lambda * sol.phi;  // p x m

    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(s, layout.size());
    for (int i = 0; i < layout.size(); ++i) {
        const Parameter& par = layout.parameters()[static_cast<std::size_t>(i)];
        switch (par.kind) {
            case ParamKind::Loading: {
                // d sigma_ab / d lambda_jk = [a == j] (Lambda Phi)_bk + [b == j] (Lambda Phi)_ak
                const int j = par.row;
                const int k = par.col;
                for (int b = 0; b < p; ++b) {
                    const int a_lo = b;
                    for (int a = a_lo; a < p; ++a) {
                        double d = 0.0;
                        if (a == j) {
                            d += lambda_phi(b, k);
                        }
                        if (b == j) {
                            d += lambda_phi(a, k);
                        }
                        jac(vech_index(a, b, p), i) = d;
                    }
                }
                break;
            }
            case ParamKind::FactorCov: {
                const auto lk = sol.lambda.col(par.row);
                const auto ll = sol.lambda.col(par.col);
                for (int b = 0; b < p; ++b) {
                    for (int a = b; a < p; ++a) {
                        double d = lk(a) * ll(b);
                        if (par.row != par.col) {
                            d += ll(a) * lk(b);
                        }
                        jac(vech_index(a, b, p), i) = d;
                    }
                }
                break;
            }
            case ParamKind::Uniqueness:
                jac(vech_index(par.row, par.row, p), i) = 1.0;
                break;
        }
    }
    return jac;
}

IdentificationReport wald_rank(const ParameterLayout& layout, const Eigen::VectorXd& theta,
                               std::optional<double> tol) {
    IdentificationReport rep;
    const int p = layout.pattern().p();
    rep.t = layout.size();
    rep.s = p * (p + 1) / 2;
    rep.df = rep.s - rep.t;

    const Eigen::MatrixXd jac = jacobian_sigma(layout, theta);
    const double rel_tol = tol.value_or(numeric::default_rank_tolerance(rep.s, rep.t));
    const numeric::RankInfo info = numeric::numerical_rank(jac, rel_tol);
    rep.jacobian_rank = info.rank;
    rep.singular_values = info.singular_values;
    rep.locally_identified = rep.jacobian_rank == rep.t;
    if (rep.locally_identified) {
        rep.null_directions = Eigen::MatrixXd(rep.t, 0);
    } else {
        rep.null_directions = numeric::null_space(jac, rel_tol);
    }

    for (int i = 0; i < layout.size(); ++i) {
        const Parameter& par = layout.parameters()[static_cast<std::size_t>(i)];
        if (!par.truncated) {
            continue;
        }
        const CellSpec& cell = layout.pattern().at(par.row, par.col);
        if (cell.polarity() * theta(i) - cell.threshold() <= kBoundaryTolerance) {
            rep.boundary_parameters.push_back(i);
        }
    }
    return rep;
}

IdentificationReport wald_rank_generic(const ParameterLayout& layout, std::uint64_t seed, int draws,
                                       std::optional<double> tol) {
    if (draws < 1) {
        throw ValidationError("generic rank needs at least one draw");
    }
    IdentificationReport best;
    std::vector<int> ranks;
    for (int d = 0; d < draws; ++d) {
        const FactorSolution sol =
            realize_generic(layout.pattern(), layout.metric(), seed + static_cast<std::uint64_t>(d));
        IdentificationReport rep = wald_rank(layout, layout.pack(sol), tol);
        ranks.push_back(rep.jacobian_rank);
        if (d == 0 || rep.jacobian_rank > best.jacobian_rank) {
            best = std::move(rep);
        }
    }
    best.generic = true;
    best.draw_ranks = std::move(ranks);
    best.boundary_parameters.clear();
    return best;
}

}  // namespace fident
