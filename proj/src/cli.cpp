#include "fident/cli.hpp"

#include "fident/conditions.hpp"
#include "fident/estimation.hpp"
#include "fident/identification.hpp"
#include "fident/report_json.hpp"
#include "fident/rotation.hpp"
#include "fident/spec_file.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <optional>
#include <ostream>
#include <sstream>

namespace fident::cli {

using nlohmann::json;

namespace {

struct Options {
    std::string spec_path;
    std::optional<double> tol;
    std::string format = "text";
    int starts = 32;
    std::uint64_t seed = 1;
    std::string truncate = "on";
    bool generic = false;
    std::string condition_set = "any";
};

bool json_output(const Options& opt) {
    return opt.format == "json";
}

std::string label_text(const std::optional<std::vector<int>>& label) {
    if (!label) {
        return "-";
    }
    std::string s = "(";
    for (std::size_t k = 0; k < label->size(); ++k) {
        s += (k ? "," : "");
        s += (*label)[k] > 0 ? "+1" : "-1";
    }
    return s + ")";
}

std::string sign_matrix_text(const Eigen::MatrixXd& r) {
    std::string s = "diag(";
    for (Eigen::Index k = 0; k < r.rows(); ++k) {
        s += (k ? ", " : "");
        s += r(k, k) > 0 ? "+1" : "-1";
    }
    return s + ")";
}

template <typename T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << (i ? " " : "") << v[i];
    }
    return os.str();
}

const char* verdict(bool pass) {
    return pass ? "pass" : "FAIL";
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

bool selected_set_passes(const ConditionReport& report, const std::string& set) {
    if (set == "c1-c4") {
        return report.c1_c4();
    }
    if (set == "c2-cstar") {
        return report.c2_cstar();
    }
    return report.c1_c4() || report.c2_cstar();
}

void render_conditions_text(std::ostream& out, const ConditionReport& r, const RestrictionCount& counts, int m) {
    out << "Conditions (metric: " << to_string(r.metric) << ")\n";
    out << "  C1  " << verdict(r.c1.pass) << "  fixed zeros per column: " << join(r.c1.zero_counts)
        << " (need >= " << m - 1 << ")\n";
    out << "  C2  " << verdict(r.c2.pass) << "  rank of Lambda^[k]: " << join(r.c2.ranks) << " (need " << m - 1
        << ")" << (r.c2.generic ? " [generic]" : "") << "\n";
    out << "  C3  " << verdict(r.c3.pass);
    if (r.metric == Metric::Covariance) {
        out << "  covariance metric leaves diag(Phi) unrestricted\n";
    } else {
        out << "  max |phi_kk - 1| = " << format_number(r.c3.max_deviation)
            << (r.c3.positive_definite ? "" : ", Phi not positive definite") << "\n";
    }
    out << "  C4  " << verdict(r.c4.pass);
    std::vector<std::string> missing;
    for (std::size_t k = 0; k < r.c4.truncated_row.size(); ++k) {
        if (!r.c4.truncated_row[k]) {
            missing.push_back(std::to_string(k + 1));
        }
    }
    if (missing.empty()) {
        out << "  truncated rows per column:";
        for (const auto& row : r.c4.truncated_row) {
            out << " " << *row + 1;
        }
        out << "\n";
    } else {
        out << "  no polarity truncation in column " << join(missing) << "\n";
    }
    out << "  C*  " << verdict(r.cstar.pass) << "  fixed nonzero rows per column:";
    for (const auto& row : r.cstar.fixed_row) {
        out << " " << (row ? std::to_string(*row + 1) : std::string("-"));
    }
    out << (r.cstar.distinct_rows ? "" : " (no distinct-row selection)") << "\n";
    if (r.regularity) {
        const RegularityResult& g = *r.regularity;
        out << "  regularity  " << verdict(g.pass()) << "  (a) rank(Lambda) = " << g.lambda_rank << " "
            << (g.rank_ok ? "ok" : "FAIL") << ", (b) psi > 0 " << (g.psi_positive ? "ok" : "FAIL")
            << ", (c) df = " << g.df << " " << (g.df_ok ? "ok" : "FAIL") << "\n";
    }
    out << "Restrictions: " << counts.fixed_zero_count << " fixed zeros, " << counts.fixed_value_count
        << " fixed values, " << counts.truncation_count << " truncations; minimal C1-C4 = " << counts.minimal_c1c4
        << ", minimal C2-C* = " << counts.minimal_c2cstar << "\n";
    out << "C1-C4: " << verdict(r.c1_c4()) << "   C2-C*: " << verdict(r.c2_cstar()) << "\n";
}

int cmd_check(const Options& opt, std::ostream& out) {
    const ModelSpec spec = load_model_spec(opt.spec_path);
    const ConditionReport report = check_all(spec.pattern, spec.metric, spec.values, opt.tol.value_or(kDefaultTolerance));
    const RestrictionCount counts = count_restrictions(spec.pattern);
    const bool pass = selected_set_passes(report, opt.condition_set);
    if (json_output(opt)) {
        out << json{{"command", "check"},
                    {"conditions", report},
                    {"restrictions", counts},
                    {"condition_set", opt.condition_set},
                    {"pass", pass}}
                   .dump(2)
            << "\n";
    } else {
        render_conditions_text(out, report, counts, spec.pattern.m());
        out << "Selected set (" << opt.condition_set << "): " << verdict(pass) << "\n";
    }
    return pass ? kPass : kFail;
}

// ---------------------------------------------------------------------------
// rotations
// ---------------------------------------------------------------------------

std::string rotation_headline(const AdmissibleRotationSet& set) {
    switch (set.structure) {
        case RotationStructure::Identity: return "Identity — globally rotationally unique";
        case RotationStructure::SignFlips:
            return "SignFlips (" + std::to_string(set.member_count) + " members) — locally rotationally unique";
        case RotationStructure::DiagonalScalings: return "DiagonalScalings — R = diag(r_11, ..., r_mm)";
        case RotationStructure::Empty: return "Empty — no admissible rotation";
        case RotationStructure::FullGroup: {
            for (std::size_t k = 0; k < set.nullspace_dims.size(); ++k) {
                if (set.nullspace_dims[k] != 1 || !set.axis_aligned[k]) {
                    return "DiagonalScalings NOT established: column " + std::to_string(k + 1) +
                           " null-space dimension " + std::to_string(set.nullspace_dims[k]) +
                           (set.nullspace_dims[k] == 1 ? " (not axis-aligned)" : "");
                }
            }
            return "FullGroup";
        }
    }
    return "?";
}

void render_rotations_text(std::ostream& out, const AdmissibleRotationSet& set) {
    out << rotation_headline(set) << "\n";
    out << "  null-space dimension per column: " << join(set.nullspace_dims) << "\n";
    if (set.structure == RotationStructure::SignFlips) {
        for (const auto& r : set.sign_flips) {
            out << "  " << sign_matrix_text(r) << "\n";
        }
    }
    for (std::size_t k = 0; k < set.pinned_by_fixed_value.size(); ++k) {
        if (set.pinned_by_fixed_value[k]) {
            out << "  column " << k + 1 << ": r_kk = 1 pinned by a fixed value\n";
        } else if (set.sign_fixed_by_truncation[k]) {
            out << "  column " << k + 1 << ": r_kk > 0 forced by a polarity truncation\n";
        }
    }
}

int cmd_rotations(const Options& opt, std::ostream& out) {
    const ModelSpec spec = load_model_spec(opt.spec_path);
    if (!spec.values.lambda) {
        throw SpecError("rotations needs numeric lambda values in the specification");
    }
    const AdmissibleRotationSet set = admissible_rotations(*spec.values.lambda, spec.pattern, spec.metric, opt.tol);
    const bool unique = set.structure == RotationStructure::Identity;
    if (json_output(opt)) {
        out << json{{"command", "rotations"}, {"rotations", set}, {"globally_unique", unique}}.dump(2) << "\n";
    } else {
        render_rotations_text(out, set);
    }
    return unique ? kPass : kFail;
}

// ---------------------------------------------------------------------------
// identify
// ---------------------------------------------------------------------------

void render_identification_text(std::ostream& out, const IdentificationReport& rep, const ParameterLayout& layout) {
    out << "t=" << rep.t << ", s=" << rep.s << ", rank=" << rep.jacobian_rank << ", df=" << rep.df << ", "
        << (rep.locally_identified ? "identified" : "NOT identified");
    if (rep.generic) {
        out << " (generic rank over " << rep.draw_ranks.size() << " draws: " << join(rep.draw_ranks) << ")";
    }
    out << "\n";
    for (Eigen::Index c = 0; c < rep.null_directions.cols(); ++c) {
        out << "  null direction " << c + 1 << ":";
        for (Eigen::Index i = 0; i < rep.null_directions.rows(); ++i) {
            const double v = rep.null_directions(i, c);
            if (std::abs(v) > 1e-8) {
                out << " " << parameter_name(layout.parameters()[static_cast<std::size_t>(i)]) << "="
                    << format_number(round_significant(v, 6));
            }
        }
        out << "\n";
    }
    for (int b : rep.boundary_parameters) {
        out << "  warning: " << parameter_name(layout.parameters()[static_cast<std::size_t>(b)])
            << " sits on its truncation bound\n";
    }
}

int cmd_identify(const Options& opt, std::ostream& out) {
    const ModelSpec spec = load_model_spec(opt.spec_path);
    const ParameterLayout layout(spec.pattern, spec.metric);
    IdentificationReport rep;
    if (opt.generic) {
        rep = wald_rank_generic(layout, opt.seed, 5, opt.tol);
    } else {
        const auto sol = spec.values.solution();
        if (!sol) {
            throw SpecError("identify needs lambda, phi and psi values (or --generic)");
        }
        rep = wald_rank(layout, layout.pack(*sol), opt.tol);
    }
    if (json_output(opt)) {
        json names = json::array();
        for (const auto& par : layout.parameters()) {
            names.push_back(parameter_name(par));
        }
        out << json{{"command", "identify"}, {"parameters", std::move(names)}, {"identification", rep}}.dump(2)
            << "\n";
    } else {
        render_identification_text(out, rep, layout);
    }
    return rep.locally_identified ? kPass : kFail;
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

FitOptions fit_options(const Options& opt) {
    FitOptions fo;
    if (opt.truncate == "on") {
        fo.truncation = TruncationMode::Project;
    } else if (opt.truncate == "off") {
        fo.truncation = TruncationMode::Ignore;
    } else {
        fo.truncation = TruncationMode::Canonicalize;
    }
    if (opt.tol) {
        fo.gradient_tol = *opt.tol;
    }
    return fo;
}

void render_fit_text(std::ostream& out, const std::vector<FitResult>& results, const ModeCensus& census) {
    out << "start  discrepancy         converged  iterations  orbit\n";
    for (const FitResult& r : results) {
        std::string disc = format_number(round_significant(r.discrepancy));
        disc.resize(std::max<std::size_t>(disc.size(), 18), ' ');
        std::string start = std::to_string(r.start_index);
        start.resize(std::max<std::size_t>(start.size(), 5), ' ');
        std::string conv = r.converged ? "yes" : r.at_truncation_bound ? "bound" : "no";
        conv.resize(9, ' ');
        std::string iters = std::to_string(r.iterations);
        iters.resize(std::max<std::size_t>(iters.size(), 10), ' ');
        out << start << "  " << disc << "  " << conv << "  " << iters << "  " << label_text(r.orbit_label) << "\n";
    }
    out << "Mode census: " << census.modes.size() << " mode(s) among " << census.converged << " converged start(s)";
    if (census.not_converged > 0) {
        out << ", " << census.not_converged << " not converged";
    }
    out << "\n";
    for (const Mode& m : census.modes) {
        out << "  " << (m.label ? label_text(m.label) : std::string("out-of-orbit")) << "  count " << m.count
            << ", discrepancy " << format_number(round_significant(m.min_discrepancy)) << ", max spread "
            << format_number(round_significant(m.max_spread)) << "\n";
    }
    out << "  discrepancies equal across modes: " << (census.discrepancies_equal ? "yes" : "no") << "\n";
}

int cmd_fit(const Options& opt, std::ostream& out) {
    if (opt.starts < 1) {
        throw SpecError("--starts must be at least 1");
    }
    const ModelSpec spec = load_model_spec(opt.spec_path);
    Eigen::MatrixXd s_matrix;
    std::string source;
    if (spec.sample_cov) {
        s_matrix = *spec.sample_cov;
        source = "sample_cov";
    } else if (auto sol = spec.values.solution()) {
        s_matrix = assemble_sigma(*sol);
        source = "population";
    } else {
        throw SpecError("fit needs sample_cov or a full numeric solution (lambda, phi, psi)");
    }
    const FitOptions fo = fit_options(opt);
    const LoadingPattern pattern =
        fo.truncation == TruncationMode::Ignore ? strip_truncations(spec.pattern) : spec.pattern;
    const std::vector<FitResult> results = fit(s_matrix, pattern, spec.metric, opt.starts, opt.seed, fo);
    const ModeCensus census = mode_census(results);
    const bool any_converged = census.converged > 0;
    if (json_output(opt)) {
        out << json{{"command", "fit"},
                    {"source", source},
                    {"truncate", opt.truncate},
                    {"starts", opt.starts},
                    {"seed", opt.seed},
                    {"results", results},
                    {"census", census}}
                   .dump(2)
            << "\n";
    } else {
        out << "Fitting " << source << " covariance, " << opt.starts << " starts, seed " << opt.seed
            << ", truncations " << opt.truncate << "\n";
        render_fit_text(out, results, census);
    }
    return any_converged ? kPass : kFail;
}

// ---------------------------------------------------------------------------
// demo
// ---------------------------------------------------------------------------

int cmd_demo(const Options& opt, std::ostream& out) {
    GeneratorConfig cfg;
    cfg.seed = opt.seed;
    const GeneratedModel model = generate_model(cfg);
    const LoadingPattern& full = model.pattern;
    const LoadingPattern plain = strip_truncations(full);
    const FactorSolution& sol = model.solution;

    ModelSpec spec;
    spec.pattern = full;
    spec.metric = Metric::Correlation;
    spec.values = ModelValues{sol.lambda, sol.phi, sol.psi};

    const ConditionReport conditions = check_all(full, Metric::Correlation, spec.values);
    const RestrictionCount counts = count_restrictions(full);
    const AdmissibleRotationSet rot_c12 = admissible_rotations(sol.lambda, plain, Metric::Covariance);
    const AdmissibleRotationSet rot_c13 = admissible_rotations(sol.lambda, plain, Metric::Correlation);
    const AdmissibleRotationSet rot_c14 = admissible_rotations(sol.lambda, full, Metric::Correlation);

    const std::vector<FactorSolution> orbit = enumerate_sign_flips(sol);
    const Eigen::MatrixXd sigma = assemble_sigma(sol);
    double orbit_sigma_gap = 0.0;
    int admissible_members = 0;
    for (const FactorSolution& member : orbit) {
        orbit_sigma_gap = std::max(orbit_sigma_gap, (assemble_sigma(member) - sigma).cwiseAbs().maxCoeff());
        admissible_members += find_violation(full, member.lambda) ? 0 : 1;
    }

    const ParameterLayout layout(full, Metric::Correlation);
    const IdentificationReport ident = wald_rank(layout, layout.pack(sol));

    const int starts = 16;
    FitOptions off;
    off.truncation = TruncationMode::Ignore;
    const std::vector<FitResult> fit_off = fit(sigma, plain, Metric::Correlation, starts, opt.seed, off);
    const std::vector<FitResult> fit_on = fit(sigma, full, Metric::Correlation, starts, opt.seed, FitOptions{});
    const ModeCensus census_off = mode_census(fit_off);
    const ModeCensus census_on = mode_census(fit_on);

    if (json_output(opt)) {
        json orbit_json = json::array();
        for (const FactorSolution& member : orbit) {
            orbit_json.push_back(member);
        }
        out << json{{"command", "demo"},
                    {"seed", opt.seed},
                    {"model", spec_to_json(spec)},
                    {"conditions", conditions},
                    {"restrictions", counts},
                    {"rotations", {{"c1_c2", rot_c12}, {"c1_c3", rot_c13}, {"c1_c4", rot_c14}}},
                    {"sign_flip_orbit",
                     {{"members", orbit_json},
                      {"max_sigma_difference", round_significant(orbit_sigma_gap)},
                      {"members_satisfying_truncations", admissible_members}}},
                    {"identification", ident},
                    {"fit",
                     {{"starts", starts},
                      {"truncate_off", {{"results", fit_off}, {"census", census_off}}},
                      {"truncate_on", {{"results", fit_on}, {"census", census_on}}}}}}
                   .dump(2)
            << "\n";
        return kPass;
    }

    out << "== Generated model (p = 5, m = 2, seed " << opt.seed << ")\n";
    out << "Lambda pattern:\n";
    for (int j = 0; j < full.p(); ++j) {
        out << "  ";
        for (int k = 0; k < full.m(); ++k) {
            out << cell_to_json(full.at(j, k)).dump() << (k + 1 < full.m() ? "  " : "");
        }
        out << "\n";
    }
    out << "Lambda:\n";
    for (int j = 0; j < full.p(); ++j) {
        out << "  ";
        for (int k = 0; k < full.m(); ++k) {
            out << format_number(sol.lambda(j, k)) << (k + 1 < full.m() ? "  " : "");
        }
        out << "\n";
    }
    out << "phi_12 = " << format_number(sol.phi(0, 1)) << "\n\n";

    out << "== Conditions\n";
    render_conditions_text(out, conditions, counts, full.m());

    out << "\n== Admissible rotations\n";
    out << "C1-C2 (covariance metric): ";
    render_rotations_text(out, rot_c12);
    out << "C1-C3 (correlation metric): ";
    render_rotations_text(out, rot_c13);
    out << "C1-C4 (plus truncations): ";
    render_rotations_text(out, rot_c14);

    out << "\n== Sign-flip orbit\n";
    out << orbit.size() << " polarity reflections, max |Sigma difference| = " << format_number(orbit_sigma_gap)
        << ", " << admissible_members << " satisfy the truncations\n";

    out << "\n== Local identification (rank rule)\n";
    render_identification_text(out, ident, layout);

    out << "\n== Multi-start fit on the population covariance, truncations off\n";
    render_fit_text(out, fit_off, census_off);
    out << "\n== Multi-start fit on the population covariance, truncations on\n";
    render_fit_text(out, fit_on, census_on);
    return kPass;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Rotational uniqueness and identification checks for oblique factor models", "fident"};
    app.require_subcommand(1);
    Options opt;

    auto add_common = [&opt](CLI::App* cmd, bool needs_spec) {
        if (needs_spec) {
            cmd->add_option("spec", opt.spec_path, "Model specification (JSON)")->required();
        }
        cmd->add_option("--tol", opt.tol, "Numerical tolerance override");
        cmd->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    };

    auto* check = app.add_subcommand("check", "Evaluate conditions C1-C4, C* and regularity");
    add_common(check, true);
    check->add_option("--set", opt.condition_set, "Condition set deciding the exit code")
        ->check(CLI::IsMember({"any", "c1-c4", "c2-cstar"}));

    auto* rotations = app.add_subcommand("rotations", "Admissible rotations at the given loadings");
    add_common(rotations, true);

    auto* identify = app.add_subcommand("identify", "Wald rank rule for local identification");
    add_common(identify, true);
    identify->add_flag("--generic", opt.generic, "Use random realizations of the pattern");
    identify->add_option("--seed", opt.seed, "Seed for --generic draws");

    auto* fit_cmd = app.add_subcommand("fit", "Multi-start least-squares fit and mode census");
    add_common(fit_cmd, true);
    fit_cmd->add_option("--starts", opt.starts, "Number of random starts");
    fit_cmd->add_option("--seed", opt.seed, "Base seed");
    fit_cmd->add_option("--truncate", opt.truncate, "Enforce polarity truncations")
        ->check(CLI::IsMember({"on", "off", "canonicalize"}));

    auto* demo = app.add_subcommand("demo", "Worked example on a generated model");
    add_common(demo, false);
    demo->add_option("--seed", opt.seed, "Generator and fit seed");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    }

    try {
        if (check->parsed()) {
            return cmd_check(opt, out);
        }
        if (rotations->parsed()) {
            return cmd_rotations(opt, out);
        }
        if (identify->parsed()) {
            return cmd_identify(opt, out);
        }
        if (fit_cmd->parsed()) {
            return cmd_fit(opt, out);
        }
        return cmd_demo(opt, out);
    } catch (const SpecError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
    }
    return kInputError;
}

}  // namespace fident::cli
