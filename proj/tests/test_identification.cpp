#include "fident/identification.hpp"

#include "fident/numeric.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <numeric>

namespace fident {
namespace {

using testing::run_a;
using testing::run_a_pattern;
using testing::run_a_truncated;

// Central differences of vech(Sigma) through unpack and assemble_sigma.
Eigen::MatrixXd finite_difference_jacobian(const ParameterLayout& layout, const Eigen::VectorXd& theta,
                                           double h = 1e-6) {
    const int p = layout.pattern().p();
    Eigen::MatrixXd jac(p * (p + 1) / 2, layout.size());
    for (int i = 0; i < layout.size(); ++i) {
        Eigen::VectorXd up = theta;
        Eigen::VectorXd down = theta;
        up(i) += h;
        down(i) -= h;
        jac.col(i) = (vech(assemble_sigma(layout.unpack(up))) - vech(assemble_sigma(layout.unpack(down)))) / (2 * h);
    }
    return jac;
}

TEST(Vech, ColumnMajorLowerTriangle) {
    Eigen::Matrix3d a;
    a << 1, 2, 3,
         2, 4, 5,
         3, 5, 6;
    EXPECT_EQ(vech(a), (Eigen::VectorXd(6) << 1, 2, 3, 4, 5, 6).finished());
    EXPECT_EQ(vech_index(0, 0, 3), 0);
    EXPECT_EQ(vech_index(2, 0, 3), 2);
    EXPECT_EQ(vech_index(1, 1, 3), 3);
    EXPECT_EQ(vech_index(2, 2, 3), 5);
}

TEST(ParameterLayout, RunAOrder) {
    const ParameterLayout layout(run_a_pattern(), Metric::Correlation);
    ASSERT_EQ(layout.size(), 12);
    EXPECT_EQ(parameter_name(layout.parameters()[0]), "lambda[1,1]");
    EXPECT_EQ(parameter_name(layout.parameters()[3]), "lambda[3,2]");
    EXPECT_EQ(*layout.loading_index(4, 1), 5);
    EXPECT_FALSE(layout.loading_index(2, 0));
    EXPECT_EQ(*layout.phi_index(1, 0), 6);
    EXPECT_EQ(*layout.phi_index(0, 1), 6);
    EXPECT_FALSE(layout.phi_index(0, 0));
    EXPECT_EQ(layout.psi_index(0), 7);
    EXPECT_EQ(parameter_name(layout.parameters()[11]), "psi[5]");

    const ParameterLayout cov(run_a_pattern(), Metric::Covariance);
    EXPECT_EQ(cov.size(), 14);
    EXPECT_TRUE(cov.phi_index(0, 0));

    const ParameterLayout trunc(run_a_truncated(), Metric::Correlation);
    EXPECT_TRUE(trunc.parameters()[0].truncated);
    EXPECT_FALSE(trunc.parameters()[1].truncated);
}

TEST(ParameterLayout, PackUnpackRoundTrip) {
    LoadingPattern pat = run_a_pattern();
    pat.set(1, 0, CellSpec::fixed(0.8));
    const ParameterLayout layout(pat, Metric::Correlation);
    const FactorSolution back = layout.unpack(layout.pack(run_a()));
    EXPECT_EQ(back.lambda, run_a().lambda);
    EXPECT_EQ(back.phi, run_a().phi);
    EXPECT_EQ(back.psi, run_a().psi);
}

TEST(JacobianSigma, HandEntries) {
    const ParameterLayout layout(run_a_pattern(), Metric::Correlation);
    const Eigen::MatrixXd jac = jacobian_sigma(layout, layout.pack(run_a()));
    ASSERT_EQ(jac.rows(), 15);
    ASSERT_EQ(jac.cols(), 12);
    // d sigma_12 / d lambda_11 = phi_11 lambda_21 + phi_12 lambda_22 = 0.8.
    EXPECT_DOUBLE_EQ(jac(vech_index(1, 0, 5), 0), 0.8);
    // d sigma_11 / d lambda_11 = 2 (phi_11 lambda_11 + phi_12 lambda_12) = 1.8.
    EXPECT_DOUBLE_EQ(jac(vech_index(0, 0, 5), 0), 1.8);
    // d sigma_13 / d phi_12 = lambda_11 lambda_32 = 0.63.
    EXPECT_DOUBLE_EQ(jac(vech_index(2, 0, 5), 6), 0.9 * 0.7);
    for (int j = 0; j < 5; ++j) {
        for (int a = 0; a < 5; ++a) {
            for (int b = 0; b <= a; ++b) {
                EXPECT_EQ(jac(vech_index(a, b, 5), layout.psi_index(j)), a == j && b == j ? 1.0 : 0.0);
            }
        }
    }
}

TEST(WaldRank, RunAIdentified) {
    const ParameterLayout layout(run_a_pattern(), Metric::Correlation);
    const Eigen::VectorXd theta = layout.pack(run_a());
    const IdentificationReport r = wald_rank(layout, theta);
    EXPECT_EQ(r.t, 12);
    EXPECT_EQ(r.s, 15);
    EXPECT_EQ(r.jacobian_rank, 12);
    EXPECT_EQ(r.df, 3);
    EXPECT_TRUE(r.locally_identified);
    EXPECT_EQ(r.null_directions.cols(), 0);
    const Eigen::MatrixXd fd = finite_difference_jacobian(layout, theta);
    EXPECT_EQ(numeric::numerical_rank(fd, 1e-6).rank, 12);
}

TEST(WaldRank, NoFixedZerosNotIdentified) {
    const ParameterLayout layout(LoadingPattern(5, 2), Metric::Correlation);
    const IdentificationReport r = wald_rank(layout, layout.pack(run_a()));
    EXPECT_EQ(r.t, 16);
    EXPECT_LT(r.jacobian_rank, 16);
    EXPECT_FALSE(r.locally_identified);
    EXPECT_EQ(r.null_directions.cols(), r.t - r.jacobian_rank);
}

TEST(WaldRank, BrokenC2HasNullDirection) {
    FactorSolution sol = run_a();
    sol.lambda(2, 1) = sol.lambda(3, 1) = 0.0;
    const ParameterLayout layout(run_a_pattern(), Metric::Correlation);
    const Eigen::VectorXd theta = layout.pack(sol);
    const IdentificationReport r = wald_rank(layout, theta);
    EXPECT_LT(r.jacobian_rank, r.t);
    EXPECT_FALSE(r.locally_identified);
    ASSERT_GE(r.null_directions.cols(), 1);
    const Eigen::MatrixXd jac = jacobian_sigma(layout, theta);
    EXPECT_LT((jac * r.null_directions).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(WaldRank, TruncationsDoNotChangeRank) {
    const ParameterLayout plain(run_a_pattern(), Metric::Correlation);
    const ParameterLayout trunc(run_a_truncated(), Metric::Correlation);
    EXPECT_EQ(wald_rank(plain, plain.pack(run_a())).jacobian_rank,
              wald_rank(trunc, trunc.pack(run_a())).jacobian_rank);
}

TEST(WaldRank, BoundaryTruncationFlagged) {
    FactorSolution sol = run_a();
    sol.lambda(0, 0) = 0.0;
    const ParameterLayout layout(run_a_truncated(), Metric::Correlation);
    const IdentificationReport r = wald_rank(layout, layout.pack(sol));
    EXPECT_EQ(r.boundary_parameters, (std::vector<int>{0}));
}

TEST(WaldRank, GenericMatchesRunA) {
    const IdentificationReport r = wald_rank_generic(ParameterLayout(run_a_pattern(), Metric::Correlation));
    EXPECT_TRUE(r.generic);
    EXPECT_EQ(r.draw_ranks.size(), 5u);
    EXPECT_EQ(r.jacobian_rank, 12);
    EXPECT_TRUE(r.locally_identified);
}

LoadingPattern random_pattern(Rng& rng, int p, int m) {
    LoadingPattern pat(p, m);
    for (int j = 0; j < p; ++j) {
        for (int k = 0; k < m; ++k) {
            switch (rng.index(4)) {
                case 0: pat.set(j, k, CellSpec::zero()); break;
                case 1: pat.set(j, k, CellSpec::fixed(rng.uniform(0.5, 1.0))); break;
                default: break;
            }
        }
    }
    return pat;
}

TEST(IdentificationProperties, JacobianMatchesFiniteDifferences) {
    Rng rng(401);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 1 + static_cast<int>(rng.index(4));
        const int p = m + 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(10 - m)));
        const Metric metric = rng.index(2) == 0 ? Metric::Correlation : Metric::Covariance;
        const ParameterLayout layout(random_pattern(rng, p, m), metric);
        const Eigen::VectorXd theta = layout.pack(realize_generic(layout.pattern(), metric, 1000 + trial));
        const Eigen::MatrixXd analytic = jacobian_sigma(layout, theta);
        const Eigen::MatrixXd fd = finite_difference_jacobian(layout, theta);
        const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
        EXPECT_LT((analytic - fd).cwiseAbs().maxCoeff() / scale, 1e-6) << "trial " << trial;
    }
}

TEST(IdentificationProperties, RankInvariantToColumnPermutation) {
    Rng rng(402);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 2 + static_cast<int>(rng.index(3));
        const int p = m + 2 + static_cast<int>(rng.index(static_cast<std::uint64_t>(9 - m)));
        const LoadingPattern pat = random_pattern(rng, p, m);
        const FactorSolution sol = realize_generic(pat, Metric::Correlation, 2000 + trial);

        std::vector<int> perm(static_cast<std::size_t>(m));
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(m, m);
        LoadingPattern permuted(p, m);
        for (int k = 0; k < m; ++k) {
            const int src = perm[static_cast<std::size_t>(k)];
            pm(src, k) = 1.0;
            for (int j = 0; j < p; ++j) {
                permuted.set(j, k, pat.at(j, src));
            }
        }
        FactorSolution moved = sol;
        moved.lambda = sol.lambda * pm;
        moved.phi = pm.transpose() * sol.phi * pm;

        const ParameterLayout a(pat, Metric::Correlation);
        const ParameterLayout b(permuted, Metric::Correlation);
        EXPECT_EQ(wald_rank(a, a.pack(sol)).jacobian_rank, wald_rank(b, b.pack(moved)).jacobian_rank)
            << "trial " << trial;
    }
}

}  // namespace
}  // namespace fident
