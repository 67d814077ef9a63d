// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any FAIL.

#include "fident/conditions.hpp"
#include "fident/estimation.hpp"
#include "fident/identification.hpp"
#include "fident/rotation.hpp"

#include "fixtures.hpp"

#include <sys/wait.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace fident;
using testing::max_abs_diff;

// Collects the first few failure notes of a criterion.
class Verdict {
public:
    void require(bool ok, const std::string& note) {
        if (!ok) {
            ++failures_;
            if (notes_.size() < 3) {
                notes_.push_back(note);
            }
        }
    }
    bool pass() const { return failures_ == 0; }
    std::string summary() const {
        std::ostringstream s;
        s << failures_ << " failure(s)";
        for (const auto& n : notes_) {
            s << "; " << n;
        }
        return s.str();
    }

private:
    int failures_ = 0;
    std::vector<std::string> notes_;
};

GeneratedModel model_for(std::uint64_t seed) {
    GeneratorConfig cfg;
    cfg.m = 1 + static_cast<int>(seed % 4);
    cfg.p = cfg.m + 3 + static_cast<int>(seed % 3);
    while (regularity_df(cfg.p, cfg.m) < 0) {
        ++cfg.p;
    }
    cfg.seed = seed;
    return generate_model(cfg);
}

std::string tag(std::uint64_t seed) {
    return "seed " + std::to_string(seed);
}

Verdict sign_flip_orbit() {
    Verdict v;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const GeneratedModel model = model_for(seed);
        const Eigen::MatrixXd sigma = assemble_sigma(model.solution);
        const std::vector<FactorSolution> orbit = enumerate_sign_flips(model.solution);
        std::set<std::vector<double>> distinct;
        int satisfying = 0;
        double worst = 0.0;
        for (const FactorSolution& member : orbit) {
            worst = std::max(worst, max_abs_diff(assemble_sigma(member), sigma));
            distinct.insert(std::vector<double>(member.lambda.data(), member.lambda.data() + member.lambda.size()));
            satisfying += find_violation(model.pattern, member.lambda) ? 0 : 1;
        }
        const std::size_t expected = std::size_t{1} << model.solution.m();
        v.require(orbit.size() == expected && distinct.size() == expected, tag(seed) + ": orbit size");
        v.require(worst <= 1e-10, tag(seed) + ": sigma differs by " + std::to_string(worst));
        v.require(satisfying == 1, tag(seed) + ": " + std::to_string(satisfying) + " members satisfy C4");
    }
    return v;
}

// Angle between a unit vector and axis k.
double axis_angle(const Eigen::VectorXd& v, int k) {
    Eigen::VectorXd rest = v;
    rest(k) = 0.0;
    return std::atan2(rest.norm(), std::abs(v(k)));
}

Verdict structure_ladder() {
    Verdict v;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const GeneratedModel model = model_for(seed);
        const int m = model.solution.m();
        const Eigen::MatrixXd& lambda = model.solution.lambda;
        const LoadingPattern bare = strip_truncations(model.pattern);

        const AdmissibleRotationSet c12 = admissible_rotations(lambda, bare, Metric::Covariance);
        v.require(c12.structure == RotationStructure::DiagonalScalings,
                  tag(seed) + ": C1-C2 gave " + to_string(c12.structure));
        if (c12.scaling_basis.size() == static_cast<std::size_t>(m)) {
            for (int k = 0; k < m; ++k) {
                v.require(c12.nullspace_dims[static_cast<std::size_t>(k)] == 1 &&
                              axis_angle(c12.scaling_basis[static_cast<std::size_t>(k)], k) <= 1e-8,
                          tag(seed) + ": column null space not axis-aligned");
            }
        } else {
            v.require(false, tag(seed) + ": missing null-space basis");
        }

        const AdmissibleRotationSet c13 = admissible_rotations(lambda, bare, Metric::Correlation);
        v.require(c13.structure == RotationStructure::SignFlips && c13.member_count == (std::uint64_t{1} << m),
                  tag(seed) + ": C1-C3 gave " + to_string(c13.structure));

        const AdmissibleRotationSet c14 = admissible_rotations(lambda, model.pattern, Metric::Correlation);
        v.require(c14.structure == RotationStructure::Identity, tag(seed) + ": C1-C4 gave " + to_string(c14.structure));
    }
    return v;
}

Verdict cstar_uniqueness() {
    Verdict v;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const GeneratedModel model = with_fixed_values(model_for(seed), seed);
        v.require(check_cstar(model.pattern).pass && check_c2(model.solution.lambda, model.pattern).pass,
                  tag(seed) + ": C2-C* not satisfied");
        const AdmissibleRotationSet set =
            admissible_rotations(model.solution.lambda, model.pattern, Metric::Covariance);
        v.require(set.structure == RotationStructure::Identity, tag(seed) + ": got " + to_string(set.structure));
    }
    return v;
}

Verdict rotation_recovery() {
    Verdict v;
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const int m = 1 + static_cast<int>(rng.index(4));
        const int p = m + 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(10 - m)));
        const FactorSolution sol = testing::random_solution(rng, p, m);
        const Eigen::MatrixXd r = testing::random_rotation(rng, m, 1e3);
        const Eigen::MatrixXd target = sol.lambda * r;
        const RotationSolve solved = solve_rotation(sol.lambda, target);
        const std::string t = "trial " + std::to_string(trial);
        v.require(max_abs_diff(solved.r, r) <= 1e-8 && solved.in_orbit, t + ": R not recovered");

        Eigen::MatrixXd perturbed = target;
        perturbed(static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(p))),
                  static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(m)))) += 0.5;
        const RotationSolve off = solve_rotation(sol.lambda, perturbed);
        v.require(!off.in_orbit && off.residual > 1e-3, t + ": perturbation residual " + std::to_string(off.residual));
    }
    return v;
}

Eigen::MatrixXd fd_jacobian(const ParameterLayout& layout, const Eigen::VectorXd& theta) {
    const int p = layout.pattern().p();
    const double h = 1e-6;
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

Verdict wald_rule() {
    Verdict v;
    const FactorSolution run_a = testing::run_a();
    const ParameterLayout layout(testing::run_a_pattern(), Metric::Correlation);
    const IdentificationReport r = wald_rank(layout, layout.pack(run_a));
    v.require(r.t == 12 && r.s == 15 && r.jacobian_rank == 12 && r.df == 3 && r.locally_identified,
              "RUN-A report mismatch");

    const ParameterLayout open(LoadingPattern(5, 2), Metric::Correlation);
    v.require(!wald_rank(open, open.pack(run_a)).locally_identified, "no fixed zeros still identified");

    FactorSolution broken = run_a;
    broken.lambda(2, 1) = broken.lambda(3, 1) = 0.0;
    const IdentificationReport b = wald_rank(layout, layout.pack(broken));
    v.require(b.jacobian_rank < b.t && b.null_directions.cols() >= 1, "broken C2 not rank deficient");

    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const int m = 1 + static_cast<int>(rng.index(4));
        const int p = m + 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(10 - m)));
        LoadingPattern pat(p, m);
        for (int j = 0; j < p; ++j) {
            for (int k = 0; k < m; ++k) {
                const auto draw = rng.index(4);
                if (draw == 0) {
                    pat.set(j, k, CellSpec::zero());
                } else if (draw == 1) {
                    pat.set(j, k, CellSpec::fixed(rng.uniform(0.5, 1.0)));
                }
            }
        }
        const Metric metric = rng.index(2) == 0 ? Metric::Correlation : Metric::Covariance;
        const ParameterLayout lay(pat, metric);
        const Eigen::VectorXd theta = lay.pack(realize_generic(pat, metric, 100 + static_cast<std::uint64_t>(trial)));
        const Eigen::MatrixXd analytic = jacobian_sigma(lay, theta);
        const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
        const double err = (analytic - fd_jacobian(lay, theta)).cwiseAbs().maxCoeff() / scale;
        v.require(err <= 1e-6, "trial " + std::to_string(trial) + ": relative error " + std::to_string(err));
    }
    return v;
}

Verdict restriction_counts() {
    Verdict v;
    for (int m = 1; m <= 6; ++m) {
        const RestrictionCount c = count_restrictions(LoadingPattern(m, m));
        v.require(c.minimal_c1c4 == m * (m - 1) && c.minimal_c2cstar == m * m &&
                      c.minimal_c2cstar - c.minimal_c1c4 == m,
                  "m=" + std::to_string(m));
    }
    return v;
}

Verdict rescaling() {
    Verdict v;
    Rng rng(7);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const GeneratedModel model = model_for(seed);
        const int p = model.solution.p();
        Eigen::VectorXd d(p);
        for (int j = 0; j < p; ++j) {
            d(j) = rng.uniform(0.5, 2.0);
        }
        const FactorSolution scaled = rescale_units(model.solution, d);
        const Eigen::MatrixXd expected = d.asDiagonal() * assemble_sigma(model.solution) * d.asDiagonal();
        v.require(max_abs_diff(assemble_sigma(scaled), expected) <= 1e-10, tag(seed) + ": D Sigma D mismatch");
        v.require(!find_violation(model.pattern, scaled.lambda), tag(seed) + ": C1-C4 pattern broken by rescaling");

        const GeneratedModel fixed = with_fixed_values(model, seed);
        const FactorSolution moved = rescale_units(fixed.solution, d);
        for (int j = 0; j < p; ++j) {
            for (int k = 0; k < fixed.pattern.m(); ++k) {
                const CellSpec& cell = fixed.pattern.at(j, k);
                if (cell.kind() == CellKind::FixedValue && d(j) != 1.0) {
                    v.require(!cell.admits(moved.lambda(j, k), kDefaultTolerance),
                              tag(seed) + ": fixed value survived rescaling");
                }
            }
        }
    }
    return v;
}

Verdict mode_collapse() {
    Verdict v;
    GeneratorConfig cfg;
    cfg.seed = 1;
    const GeneratedModel model = generate_model(cfg);
    const Eigen::MatrixXd sigma = assemble_sigma(model.solution);

    FitOptions off;
    off.truncation = TruncationMode::Ignore;
    const ModeCensus free_census =
        mode_census(fit(sigma, strip_truncations(model.pattern), Metric::Correlation, 32, 1, off));
    std::set<std::vector<int>> labels;
    for (const Mode& mode : free_census.modes) {
        if (mode.label) {
            labels.insert(*mode.label);
        }
    }
    v.require(labels.size() >= 2, "truncations off: " + std::to_string(labels.size()) + " orbit label(s)");
    v.require(free_census.discrepancies_equal, "truncations off: discrepancies differ");

    const ModeCensus on = mode_census(fit(sigma, model.pattern, Metric::Correlation, 32, 1));
    v.require(on.modes.size() == 1 && on.modes[0].label, "truncations on: " + std::to_string(on.modes.size()) + " modes");
    if (!on.modes.empty()) {
        v.require(on.modes[0].max_spread < 1e-5, "truncations on: spread " + std::to_string(on.modes[0].max_spread));
    }
    return v;
}

std::string capture(const std::string& command, int& status) {
    std::array<char, 4096> buf{};
    std::string out;
    FILE* pipe = popen(command.c_str(), "r");
    if (pipe == nullptr) {
        status = -1;
        return out;
    }
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        out.append(buf.data(), n);
    }
    status = pclose(pipe);
    return out;
}

int exit_code(const std::string& args) {
    int status = 0;
    capture(std::string(FIDENT_CLI_PATH) + " " + args + " >/dev/null 2>&1", status);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict cli_determinism() {
    Verdict v;
    int s1 = 0;
    int s2 = 0;
    const std::string cmd = std::string(FIDENT_CLI_PATH) + " demo --seed 1 --format json";
    const std::string a = capture(cmd, s1);
    const std::string b = capture(cmd, s2);
    v.require(s1 == 0 && s2 == 0 && !a.empty(), "demo did not run");
    v.require(a == b, "demo output differs between runs");

    const std::string dir = std::string(FIDENT_TEST_DATA_DIR) + "/";
    v.require(exit_code("check " + dir + "run_a.json") == 0, "passing spec did not exit 0");
    v.require(exit_code("check " + dir + "run_a_no_trunc2.json --set c1-c4") == 1, "failing spec did not exit 1");
    v.require(exit_code("check " + dir + "fixed_zero_value.json") == 2, "invalid spec did not exit 2");
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"sign-flip orbit: 2^m members, equal Sigma, one satisfies the truncations", sign_flip_orbit},
        {"structure ladder: DiagonalScalings, SignFlips, Identity", structure_ladder},
        {"fixed nonzero values give Identity under the covariance metric", cstar_uniqueness},
        {"rotation recovery and out-of-orbit detection", rotation_recovery},
        {"Wald rank rule and Jacobian finite-difference check", wald_rule},
        {"restriction counts m(m-1) and m^2", restriction_counts},
        {"unit rescaling", rescaling},
        {"mode collapse under truncation", mode_collapse},
        {"CLI determinism and exit codes", cli_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        std::cout << (v.pass() ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first;
        if (!v.pass()) {
            std::cout << " (" << v.summary() << ")";
            ++failed;
        }
        std::cout << "\n";
    }
    return failed == 0 ? 0 : 1;
}
