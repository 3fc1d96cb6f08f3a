// opacheck command-line front end: verification, certificate validation,
// and Monte-Carlo simulation over polynomial control-system specs.
//
// Exit codes: 0 certified (or run completed for simulate/check-assumption),
// 1 inconclusive, 2 input error (including a failed standing assumption),
// 3 candidate certificate rejected by validation.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "opacheck/report.hpp"
#include "opacheck/sim.hpp"

namespace oc = opacheck;

namespace {

struct Options {
    std::string spec_path;
    std::optional<double> delta;
    unsigned deg_cert = 2;
    unsigned deg_policy = 1;
    std::optional<unsigned> deg_mult;
    double eps_lo = 1.0;
    double eps_hi = 1.001;
    double slack = 0.01;
    double margin = 0.01;
    std::string fixed_policy;  // "p1;...;pm"
    std::size_t samples = 100000;
    std::uint64_t seed = 1;
    std::size_t horizon = 100;
    std::size_t trials = 100;
    std::string out_dir = ".";
    std::string dump_sdp;
    std::string deg_sweep;  // "lo..hi"
    bool skip_assumption = false;
    std::string monitor_coord;
    std::string cert_path;
    std::string sim_mode = "safety";
    std::string adversary = "random";
};

std::vector<oc::Polynomial> parse_policy_list(const std::string& text,
                                              const oc::VariableSpace& space, std::size_t m) {
    std::vector<oc::Polynomial> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find(';', start);
        auto piece = text.substr(start, end == std::string::npos ? std::string::npos
                                                                 : end - start);
        if (!piece.empty()) out.push_back(oc::parse_polynomial(piece, space));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (out.size() != m)
        throw oc::SpecError("--fixed-policy needs exactly " + std::to_string(m) +
                            " ';'-separated components, got " + std::to_string(out.size()));
    return out;
}

std::optional<std::size_t> monitor_override(const Options& opt, const oc::ControlSystem& sys) {
    if (opt.monitor_coord.empty()) return std::nullopt;
    if (auto idx = sys.state_space.find(opt.monitor_coord)) return *idx;
    try {
        return static_cast<std::size_t>(std::stoul(opt.monitor_coord));
    } catch (const std::exception&) {
        throw oc::SpecError("--monitor-coord must name a state variable or give its index");
    }
}

std::pair<unsigned, unsigned> sweep_range(const Options& opt) {
    if (opt.deg_sweep.empty()) return {opt.deg_cert, opt.deg_cert};
    auto dots = opt.deg_sweep.find("..");
    if (dots == std::string::npos) throw oc::SpecError("--deg-sweep expects the form lo..hi");
    unsigned lo = static_cast<unsigned>(std::stoul(opt.deg_sweep.substr(0, dots)));
    unsigned hi = static_cast<unsigned>(std::stoul(opt.deg_sweep.substr(dots + 2)));
    if (lo > hi) throw oc::SpecError("--deg-sweep range is empty");
    return {lo, hi};
}

oc::ControlSystem load_system(const Options& opt) {
    auto sys = oc::load_spec(opt.spec_path);
    if (opt.delta) {
        if (*opt.delta < 0) throw oc::SpecError("delta must be nonnegative");
        sys.delta = *opt.delta;
    }
    return sys;
}

nlohmann::json inputs_digest(const Options& opt, const oc::ControlSystem& sys) {
    nlohmann::json j;
    j["spec"] = opt.spec_path;
    j["system"] = sys.name;
    j["delta"] = sys.delta;
    j["deg_certificate"] = opt.deg_cert;
    j["deg_policy"] = opt.deg_policy;
    if (opt.deg_mult) j["deg_multiplier"] = *opt.deg_mult;
    j["eps_lo"] = opt.eps_lo;
    j["eps_hi"] = opt.eps_hi;
    j["slack"] = opt.slack;
    j["margin"] = opt.margin;
    j["samples"] = opt.samples;
    j["seed"] = opt.seed;
    if (!opt.fixed_policy.empty()) j["fixed_policy"] = opt.fixed_policy;
    return j;
}

nlohmann::json solver_stats(const oc::SdpSolution& solution, const oc::SdpProblem& problem) {
    nlohmann::json j;
    j["status"] = solution.status == oc::SolveStatus::Feasible     ? "feasible"
                  : solution.status == oc::SolveStatus::Infeasible ? "infeasible"
                                                                   : "unknown";
    j["iterations"] = solution.iterations;
    j["primal_residual"] = solution.primal_residual;
    j["min_block_eig"] = solution.min_block_eig;
    j["rows"] = problem.num_rows();
    j["block_dims"] = problem.block_dims;
    j["free_scalars"] = problem.num_free;
    if (!solution.message.empty()) j["message"] = solution.message;
    return j;
}

nlohmann::json policy_bounds_json(const oc::PolicyBoundsReport& r) {
    nlohmann::json j;
    j["samples"] = r.samples;
    j["out_of_bounds"] = r.out_of_bounds;
    j["fraction"] = r.fraction;
    j["witnesses"] = r.witnesses;
    return j;
}

nlohmann::json assumption_json(const oc::AssumptionReport& r) {
    nlohmann::json j;
    j["holds"] = r.holds;
    j["vacuous"] = r.vacuous;
    j["checked"] = r.checked;
    j["worst_min_gap"] = r.worst_min_gap;
    if (r.witness) j["witness"] = *r.witness;
    return j;
}

int finish(oc::RunReport report, const Options& opt, int code) {
    std::filesystem::create_directories(opt.out_dir);
    auto path = (std::filesystem::path(opt.out_dir) / (report.task + "-report.json")).string();
    oc::write_report(report, path);
    std::cout << report.task << ": " << report.outcome << " (report: " << path << ")\n";
    return code;
}

int run_check_assumption(const Options& opt) {
    auto sys = load_system(opt);
    auto check = oc::check_initial_assumption(sys, opt.samples, opt.seed);
    oc::RunReport report;
    report.task = "check-assumption";
    report.inputs = inputs_digest(opt, sys);
    report.details["assumption"] = assumption_json(check);
    report.outcome = check.holds ? "completed" : "input-error";
    return finish(std::move(report), opt, check.holds ? 0 : 2);
}

int run_verify_opacity(const Options& opt) {
    auto sys = load_system(opt);
    oc::RunReport report;
    report.task = "verify-opacity";
    report.inputs = inputs_digest(opt, sys);

    if (!opt.skip_assumption) {
        auto check = oc::check_initial_assumption(sys, std::max<std::size_t>(opt.samples, 2048),
                                                  opt.seed);
        report.details["assumption"] = assumption_json(check);
        if (!check.holds) {
            report.outcome = "input-error";
            return finish(std::move(report), opt, 2);
        }
    }

    auto aug = oc::build_product(sys);
    auto regions = oc::build_safety_regions(aug, opt.margin);

    auto [deg_lo, deg_hi] = sweep_range(opt);
    for (unsigned deg = deg_lo; deg <= deg_hi; ++deg) {
        oc::ProgramDegrees degrees{deg, opt.deg_policy, opt.deg_mult};
        oc::SafetyProgramOptions l1;
        l1.eps_lo = opt.eps_lo;
        l1.eps_hi = opt.eps_hi;
        if (!opt.fixed_policy.empty())
            l1.fixed_policy = parse_policy_list(opt.fixed_policy, aug.full_space, aug.m());
        auto prog = oc::build_safety_program(aug, regions, degrees, l1);
        auto compiled = oc::compile_to_sdp(prog);
        if (!opt.dump_sdp.empty()) compiled.problem.dump(opt.dump_sdp);
        auto solution = oc::solve_feasibility(compiled.problem);
        report.details["deg_certificate"] = deg;
        report.details["solver"] = solver_stats(solution, compiled.problem);
        if (solution.status != oc::SolveStatus::Feasible) continue;

        auto extracted = oc::extract_certificate(prog, compiled, solution);
        oc::Certificate cert;
        cert.kind = oc::CertificateKind::Safety;
        cert.certificate = extracted.certificate;
        cert.policy = extracted.policy;
        cert.eps_lo = opt.eps_lo;
        cert.eps_hi = opt.eps_hi;
        report.details["certificate"] = oc::certificate_to_json(cert);
        report.details["extraction"] = {{"max_residual", extracted.max_residual},
                                        {"min_gram_eig", extracted.min_gram_eig}};

        auto validation = oc::validate_safety_certificate(cert, aug, regions, opt.samples,
                                                          opt.seed);
        report.details["validation"] = oc::validation_to_json(validation);
        report.details["policy_bounds"] =
            policy_bounds_json(oc::check_policy_bounds(cert, aug, opt.samples / 10 + 1,
                                                       opt.seed + 1));
        if (validation.violated) {
            report.outcome = "candidate-rejected";
            return finish(std::move(report), opt, 3);
        }

        auto recheck = oc::recheck_fixed_certificate(cert, aug, regions, degrees);
        report.details["recheck"] = {{"certified", recheck.certified},
                                     {"iterations", recheck.iterations},
                                     {"max_residual", recheck.max_residual},
                                     {"min_gram_eig", recheck.min_gram_eig}};
        if (!recheck.certified) {
            report.outcome = "inconclusive";
            return finish(std::move(report), opt, 1);
        }

        std::filesystem::create_directories(opt.out_dir);
        auto cert_path = (std::filesystem::path(opt.out_dir) / "certificate.json").string();
        oc::save_certificate(cert, cert_path);
        report.details["certificate_file"] = cert_path;
        report.outcome = "certified-opaque";
        return finish(std::move(report), opt, 0);
    }
    report.outcome = "inconclusive";
    return finish(std::move(report), opt, 1);
}

int run_verify_lack(const Options& opt) {
    auto sys = load_system(opt);
    oc::RunReport report;
    report.task = "verify-lack";
    report.inputs = inputs_digest(opt, sys);

    auto aug = oc::build_product(sys);
    auto regions = oc::build_reach_regions(aug, monitor_override(opt, sys));
    report.details["monitored_coord"] = sys.state_space.name(regions.monitored_coord);

    auto [deg_lo, deg_hi] = sweep_range(opt);
    for (unsigned deg = deg_lo; deg <= deg_hi; ++deg) {
        oc::ProgramDegrees degrees{deg, opt.deg_policy, opt.deg_mult};
        oc::ReachProgramOptions l2;
        l2.slack = opt.slack;
        if (!opt.fixed_policy.empty()) {
            // Candidate observed-input policy over (x, xh, uh).
            std::vector<std::string> names;
            std::vector<oc::VarRole> roles;
            for (std::size_t v = 0; v < aug.full_space.size(); ++v) {
                if (aug.full_space.role(v) == oc::VarRole::Input) continue;
                names.push_back(aug.full_space.name(v));
                roles.push_back(aug.full_space.role(v));
            }
            oc::VariableSpace policy_space(std::move(names), std::move(roles));
            l2.fixed_policy = parse_policy_list(opt.fixed_policy, policy_space, aug.m());
        }
        auto prog = oc::build_reach_program(aug, regions, degrees, l2);
        auto compiled = oc::compile_to_sdp(prog);
        if (!opt.dump_sdp.empty()) compiled.problem.dump(opt.dump_sdp);
        auto solution = oc::solve_feasibility(compiled.problem);
        report.details["deg_certificate"] = deg;
        report.details["solver"] = solver_stats(solution, compiled.problem);
        if (solution.status != oc::SolveStatus::Feasible) continue;

        auto extracted = oc::extract_certificate(prog, compiled, solution);
        oc::Certificate cert;
        cert.kind = oc::CertificateKind::Reach;
        cert.certificate = extracted.certificate;
        cert.policy = extracted.policy;
        cert.slack = opt.slack;
        report.details["certificate"] = oc::certificate_to_json(cert);
        report.details["extraction"] = {{"max_residual", extracted.max_residual},
                                        {"min_gram_eig", extracted.min_gram_eig}};

        auto validation = oc::validate_reach_certificate(cert, aug, regions, opt.samples,
                                                         opt.seed);
        report.details["validation"] = oc::validation_to_json(validation);
        if (validation.violated) {
            report.outcome = "candidate-rejected";
            return finish(std::move(report), opt, 3);
        }

        auto recheck = oc::recheck_fixed_certificate(cert, aug, regions, degrees);
        report.details["recheck"] = {{"certified", recheck.certified},
                                     {"iterations", recheck.iterations},
                                     {"max_residual", recheck.max_residual},
                                     {"min_gram_eig", recheck.min_gram_eig}};
        if (!recheck.certified) {
            report.outcome = "inconclusive";
            return finish(std::move(report), opt, 1);
        }

        std::filesystem::create_directories(opt.out_dir);
        auto cert_path = (std::filesystem::path(opt.out_dir) / "certificate.json").string();
        oc::save_certificate(cert, cert_path);
        report.details["certificate_file"] = cert_path;
        report.outcome = "certified-lack";
        return finish(std::move(report), opt, 0);
    }
    report.outcome = "inconclusive";
    return finish(std::move(report), opt, 1);
}

int run_validate_cert(const Options& opt) {
    auto sys = load_system(opt);
    oc::RunReport report;
    report.task = "validate-cert";
    report.inputs = inputs_digest(opt, sys);
    report.inputs["certificate"] = opt.cert_path;

    auto cert = oc::load_certificate(opt.cert_path);
    auto aug = oc::build_product(sys);

    oc::RegionBundle regions;
    oc::ValidationReport validation;
    if (cert.kind == oc::CertificateKind::Safety) {
        regions = oc::build_safety_regions(aug, opt.margin);
        validation = oc::validate_safety_certificate(cert, aug, regions, opt.samples, opt.seed);
        report.details["policy_bounds"] =
            policy_bounds_json(oc::check_policy_bounds(cert, aug, opt.samples / 10 + 1,
                                                       opt.seed + 1));
    } else {
        regions = oc::build_reach_regions(aug, monitor_override(opt, sys));
        validation = oc::validate_reach_certificate(cert, aug, regions, opt.samples, opt.seed);
    }
    report.details["validation"] = oc::validation_to_json(validation);
    if (validation.violated) {
        report.outcome = "candidate-rejected";
        return finish(std::move(report), opt, 3);
    }

    oc::ProgramDegrees degrees{opt.deg_cert, opt.deg_policy, opt.deg_mult};
    auto recheck = oc::recheck_fixed_certificate(cert, aug, regions, degrees);
    report.details["recheck"] = {{"certified", recheck.certified},
                                 {"iterations", recheck.iterations},
                                 {"max_residual", recheck.max_residual},
                                 {"min_gram_eig", recheck.min_gram_eig}};
    report.outcome = recheck.certified
                         ? (cert.kind == oc::CertificateKind::Safety ? "certified-opaque"
                                                                     : "certified-lack")
                         : "inconclusive";
    return finish(std::move(report), opt, recheck.certified ? 0 : 1);
}

int run_simulate(const Options& opt) {
    auto sys = load_system(opt);
    oc::RunReport report;
    report.task = "simulate";
    report.inputs = inputs_digest(opt, sys);
    report.inputs["mode"] = opt.sim_mode;
    report.inputs["horizon"] = opt.horizon;
    report.inputs["trials"] = opt.trials;

    auto aug = oc::build_product(sys);
    std::filesystem::create_directories(opt.out_dir);
    std::vector<oc::Trajectory> trajectories;

    if (opt.sim_mode == "safety") {
        if (opt.cert_path.empty())
            throw oc::SpecError("simulate --mode safety needs --cert with a policy");
        auto cert = oc::load_certificate(opt.cert_path);
        auto regions = oc::build_safety_regions(aug, opt.margin);
        auto summary = oc::monte_carlo_safety(aug, regions, cert, opt.trials, opt.horizon,
                                              opt.seed, &trajectories);
        report.details["safety"] = {{"trials", summary.trials},
                                    {"ru_entries", summary.ru_entries},
                                    {"unsafe_trials", summary.unsafe_trials},
                                    {"worst_gap", summary.worst_gap},
                                    {"boundary_exits", summary.boundary_exits}};
    } else if (opt.sim_mode == "reach") {
        auto regions = oc::build_reach_regions(aug, monitor_override(opt, sys));
        std::vector<oc::Polynomial> policy;
        if (!opt.fixed_policy.empty()) {
            std::vector<std::string> names;
            std::vector<oc::VarRole> roles;
            for (std::size_t v = 0; v < aug.full_space.size(); ++v) {
                if (aug.full_space.role(v) == oc::VarRole::Input) continue;
                names.push_back(aug.full_space.name(v));
                roles.push_back(aug.full_space.role(v));
            }
            oc::VariableSpace policy_space(std::move(names), std::move(roles));
            policy = parse_policy_list(opt.fixed_policy, policy_space, aug.m());
        } else if (!opt.cert_path.empty()) {
            policy = oc::load_certificate(opt.cert_path).policy;
        } else {
            throw oc::SpecError("simulate --mode reach needs --fixed-policy or --cert");
        }
        auto kind = opt.adversary == "greedy" ? oc::AdversaryKind::Greedy
                                              : oc::AdversaryKind::Random;
        auto summary = oc::monte_carlo_reach(aug, regions, policy, kind, opt.trials,
                                             opt.horizon, opt.seed, &trajectories);
        report.details["reach"] = {{"trials", summary.trials},
                                   {"reached", summary.reached},
                                   {"timeouts", summary.timeouts},
                                   {"median_time", summary.median_time},
                                   {"reach_times", summary.reach_times},
                                   {"adversary", opt.adversary}};
    } else {
        throw oc::SpecError("simulate --mode must be safety or reach");
    }

    auto csv_path = (std::filesystem::path(opt.out_dir) / "trajectories.csv").string();
    oc::export_trajectories(trajectories, aug, csv_path);
    report.details["trajectories_csv"] = csv_path;
    report.outcome = "completed";
    return finish(std::move(report), opt, 0);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximate initial-state opacity verification for polynomial "
                 "discrete-time control systems"};
    app.require_subcommand(1);

    Options opt;
    std::string command;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--spec", opt.spec_path, "system spec JSON")->required();
        sub->add_option("--delta", opt.delta, "override the spec's delta");
        sub->add_option("--samples", opt.samples, "validation/assumption sample count");
        sub->add_option("--seed", opt.seed, "RNG seed");
        sub->add_option("--out", opt.out_dir, "output directory");
        sub->callback([&command, sub] { command = sub->get_name(); });
    };
    auto add_synthesis = [&](CLI::App* sub, bool safety) {
        if (safety)
            sub->add_option("--deg-b", opt.deg_cert, "certificate degree");
        else
            sub->add_option("--deg-v", opt.deg_cert, "certificate degree");
        sub->add_option("--deg-policy", opt.deg_policy, "policy degree");
        sub->add_option("--deg-mult", opt.deg_mult, "multiplier degree (all multipliers)");
        sub->add_option("--deg-sweep", opt.deg_sweep, "certificate degree sweep lo..hi");
        sub->add_option("--fixed-policy", opt.fixed_policy, "';'-separated policy components");
        sub->add_option("--dump-sdp", opt.dump_sdp, "write the compiled SDP to a file");
    };

    auto* verify = app.add_subcommand("verify-opacity", "synthesize a safety certificate");
    add_common(verify);
    add_synthesis(verify, true);
    verify->add_option("--eps-lo", opt.eps_lo, "initial-region level bound");
    verify->add_option("--eps-hi", opt.eps_hi, "unsafe-region level bound");
    verify->add_option("--margin", opt.margin, "closure margin for the unsafe region");
    verify->add_flag("--skip-assumption", opt.skip_assumption,
                     "skip the standing initial-state assumption check");

    auto* lack = app.add_subcommand("verify-lack", "synthesize a reachability certificate");
    add_common(lack);
    add_synthesis(lack, false);
    lack->add_option("--slack", opt.slack, "strictness slack");
    lack->add_option("--monitor-coord", opt.monitor_coord,
                     "state coordinate carrying the boundary decomposition");

    auto* validate = app.add_subcommand("validate-cert", "validate a certificate file");
    add_common(validate);
    validate->add_option("--cert", opt.cert_path, "certificate JSON")->required();
    validate->add_option("--deg-mult", opt.deg_mult, "multiplier degree for the recheck");
    validate->add_option("--margin", opt.margin, "closure margin for the unsafe region");
    validate->add_option("--monitor-coord", opt.monitor_coord,
                         "state coordinate carrying the boundary decomposition");

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo pair simulation");
    add_common(simulate);
    simulate->add_option("--mode", opt.sim_mode, "safety or reach");
    simulate->add_option("--cert", opt.cert_path, "certificate JSON providing the policy");
    simulate->add_option("--fixed-policy", opt.fixed_policy, "';'-separated policy components");
    simulate->add_option("--adversary", opt.adversary, "random or greedy");
    simulate->add_option("--horizon", opt.horizon, "steps per trial");
    simulate->add_option("--trials", opt.trials, "number of trials");
    simulate->add_option("--margin", opt.margin, "closure margin for the unsafe region");
    simulate->add_option("--monitor-coord", opt.monitor_coord,
                         "state coordinate carrying the boundary decomposition");

    auto* assumption = app.add_subcommand("check-assumption",
                                          "sample the standing initial-state assumption");
    add_common(assumption);

    CLI11_PARSE(app, argc, argv);

    const auto started = std::chrono::steady_clock::now();
    int code = 2;
    try {
        if (command == "verify-opacity")
            code = run_verify_opacity(opt);
        else if (command == "verify-lack")
            code = run_verify_lack(opt);
        else if (command == "validate-cert")
            code = run_validate_cert(opt);
        else if (command == "simulate")
            code = run_simulate(opt);
        else if (command == "check-assumption")
            code = run_check_assumption(opt);
    } catch (const oc::SdpError& e) {
        std::cerr << "solver: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();
    std::cerr << "elapsed: " << elapsed << " ms\n";
    return code;
}
