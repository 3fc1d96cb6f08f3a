#include "opacheck/certificate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "opacheck/report.hpp"

namespace opacheck {

namespace {

constexpr double kSoftTol = 1e-9;  // float-noise allowance for non-strict conditions
constexpr std::size_t kMaxWitnesses = 10;

// Evaluate a polynomial at a point given by variable name; absent names
// read as zero (a policy over (x, xh, u) ignores the partner inputs).
double eval_by_name(const Polynomial& p,
                    const std::unordered_map<std::string, double>& values) {
    std::vector<double> point(p.space().size(), 0.0);
    for (std::size_t i = 0; i < p.space().size(); ++i)
        if (auto it = values.find(p.space().name(i)); it != values.end()) point[i] = it->second;
    return p.evaluate(point);
}

void record(ConditionReport& cond, double excess, const std::vector<double>& point) {
    ++cond.samples;
    cond.max_excess = std::max(cond.max_excess, excess);
    if (excess > 0) {
        ++cond.violations;
        if (cond.witnesses.size() < kMaxWitnesses) cond.witnesses.push_back(point);
    }
}

// Stratified draw over a possibly-union set: the budget is split evenly
// across branches, and every box corner is appended.
std::vector<std::vector<double>> stratified_points(const SemiAlgebraicSet& set,
                                                   std::size_t count, std::uint64_t seed) {
    std::vector<std::vector<double>> out;
    if (set.is_union()) {
        const auto& parts = set.members();
        std::size_t per = std::max<std::size_t>(1, count / parts.size());
        for (std::size_t b = 0; b < parts.size(); ++b) {
            auto pts = sample_set(parts[b], parts[b].bounding_box(), per, seed + b);
            out.insert(out.end(), pts.begin(), pts.end());
        }
    } else {
        out = sample_set(set, set.bounding_box(), count, seed);
    }
    for (auto& c : set.corners())
        if (set.membership(c)) out.push_back(std::move(c));
    return out;
}

std::unordered_map<std::string, double> name_values(const VariableSpace& space,
                                                    const std::vector<double>& point) {
    std::unordered_map<std::string, double> values;
    for (std::size_t i = 0; i < space.size(); ++i) values[space.name(i)] = point[i];
    return values;
}

double pair_value(const Polynomial& cert, const std::vector<double>& x,
                  const std::vector<double>& xh) {
    std::vector<double> pt;
    pt.reserve(x.size() + xh.size());
    pt.insert(pt.end(), x.begin(), x.end());
    pt.insert(pt.end(), xh.begin(), xh.end());
    return cert.evaluate(pt);
}

}  // namespace

void save_certificate(const Certificate& cert, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write certificate to " + path);
    f << certificate_to_json(cert).dump(2) << "\n";
    if (!f) throw std::runtime_error("failed writing certificate to " + path);
}

Certificate load_certificate(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read certificate from " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    Certificate cert;
    auto kind = j.at("kind").get<std::string>();
    if (kind == "safety")
        cert.kind = CertificateKind::Safety;
    else if (kind == "reach")
        cert.kind = CertificateKind::Reach;
    else
        throw std::runtime_error("unknown certificate kind '" + kind + "'");
    if (j.contains("provenance"))
        cert.provenance = j["provenance"] == "synthesized" ? Provenance::Synthesized
                                                           : Provenance::UserSupplied;
    else
        cert.provenance = Provenance::UserSupplied;
    auto space = variable_space_from_json(j.at("variables"));
    cert.certificate = polynomial_from_json(j.at("polynomial"), space);
    for (const auto& jp : j.value("policy", nlohmann::json::array())) {
        auto pspace = variable_space_from_json(jp.at("variables"));
        cert.policy.push_back(polynomial_from_json(jp.at("polynomial"), pspace));
    }
    auto constants = j.value("constants", nlohmann::json::object());
    cert.eps_lo = constants.value("eps_lo", 0.0);
    cert.eps_hi = constants.value("eps_hi", 0.0);
    cert.slack = constants.value("slack", 0.0);
    if (cert.kind == CertificateKind::Safety && !(cert.eps_hi > cert.eps_lo))
        throw std::runtime_error("safety certificate requires eps_hi > eps_lo");
    return cert;
}

ValidationReport validate_safety_certificate(const Certificate& cert, const AugmentedSystem& aug,
                                             const RegionBundle& regions, std::size_t samples,
                                             std::uint64_t seed) {
    if (cert.kind != CertificateKind::Safety)
        throw std::runtime_error("expected a safety certificate");
    const auto& B = cert.certificate;
    const std::size_t n = aug.n();
    const std::size_t m = aug.m();

    ValidationReport report;

    ConditionReport initial{"initial-level", 0, 0,
                            -std::numeric_limits<double>::infinity(), {}};
    for (const auto& pt : stratified_points(regions.r0, samples, seed))
        record(initial, B.evaluate(pt) - cert.eps_lo - kSoftTol, pt);

    ConditionReport unsafe{"unsafe-level", 0, 0,
                           -std::numeric_limits<double>::infinity(), {}};
    for (const auto& pt : stratified_points(regions.ru, samples, seed + 101))
        record(unsafe, cert.eps_hi - B.evaluate(pt) - kSoftTol, pt);

    // One-step decrease over R x U with the partner input from the policy.
    ConditionReport decrease{"decrease", 0, 0,
                             -std::numeric_limits<double>::infinity(), {}};
    auto pair_pts = stratified_points(aug.pair_region, samples, seed + 202);
    auto u_pts = sample_set(aug.base.input_set, aug.base.input_set.bounding_box(),
                            pair_pts.size(), seed + 303);
    for (auto& c : aug.base.input_set.corners()) u_pts.push_back(std::move(c));
    for (std::size_t k = 0; k < pair_pts.size(); ++k) {
        const auto& pr = pair_pts[k];
        const auto& u = u_pts[k % u_pts.size()];
        std::vector<double> x(pr.begin(), pr.begin() + n);
        std::vector<double> xh(pr.begin() + n, pr.end());
        auto values = name_values(aug.pair_state_space, pr);
        for (std::size_t i = 0; i < m; ++i) values[aug.base.input_space.name(i)] = u[i];
        std::vector<double> uh(m);
        for (std::size_t i = 0; i < m; ++i) uh[i] = eval_by_name(cert.policy.at(i), values);
        double before = pair_value(B, x, xh);
        double after = pair_value(B, aug.base.step(x, u), aug.base.step(xh, uh));
        std::vector<double> witness = pr;
        witness.insert(witness.end(), u.begin(), u.end());
        record(decrease, after - before - kSoftTol, witness);
    }

    report.conditions = {std::move(initial), std::move(unsafe), std::move(decrease)};
    for (const auto& c : report.conditions) report.violated = report.violated || c.violations > 0;
    return report;
}

ValidationReport validate_reach_certificate(const Certificate& cert, const AugmentedSystem& aug,
                                            const RegionBundle& regions, std::size_t samples,
                                            std::uint64_t seed) {
    if (cert.kind != CertificateKind::Reach)
        throw std::runtime_error("expected a reach certificate");
    if (!regions.boundary || !regions.closure_core)
        throw std::runtime_error("region bundle lacks a boundary decomposition");
    const auto& V = cert.certificate;
    const std::size_t n = aug.n();
    const std::size_t m = aug.m();

    ValidationReport report;

    ConditionReport initial{"initial-nonpositive", 0, 0,
                            -std::numeric_limits<double>::infinity(), {}};
    for (const auto& pt : stratified_points(regions.r0, samples, seed))
        record(initial, V.evaluate(pt) - kSoftTol, pt);

    // Strict positivity on the boundary, witnessed by the slack margin.
    ConditionReport boundary{"boundary-positive", 0, 0,
                             -std::numeric_limits<double>::infinity(), {}};
    for (const auto& pt : stratified_points(*regions.boundary, samples, seed + 101))
        record(boundary, cert.slack - V.evaluate(pt) - kSoftTol, pt);

    // Strict decrease on the core region under the policy, for sampled
    // partner inputs.
    ConditionReport decrease{"decrease", 0, 0,
                             -std::numeric_limits<double>::infinity(), {}};
    auto pair_pts = stratified_points(*regions.closure_core, samples, seed + 202);
    std::vector<std::vector<double>> uh_pts;
    if (m > 0) {
        uh_pts = sample_set(aug.base.input_set, aug.base.input_set.bounding_box(),
                            pair_pts.size(), seed + 303);
        for (auto& c : aug.base.input_set.corners()) uh_pts.push_back(std::move(c));
    } else {
        uh_pts.push_back({});
    }
    for (std::size_t k = 0; k < pair_pts.size(); ++k) {
        const auto& pr = pair_pts[k];
        const auto& uh = uh_pts[k % uh_pts.size()];
        std::vector<double> x(pr.begin(), pr.begin() + n);
        std::vector<double> xh(pr.begin() + n, pr.end());
        auto values = name_values(aug.pair_state_space, pr);
        for (std::size_t i = 0; i < m; ++i)
            values[partner_name(aug.base.input_space.name(i))] = uh[i];
        std::vector<double> u(m);
        for (std::size_t i = 0; i < m; ++i) u[i] = eval_by_name(cert.policy.at(i), values);
        double before = pair_value(V, x, xh);
        double after = pair_value(V, aug.base.step(x, u), aug.base.step(xh, uh));
        std::vector<double> witness = pr;
        witness.insert(witness.end(), uh.begin(), uh.end());
        record(decrease, after - before + cert.slack - kSoftTol, witness);
    }

    report.conditions = {std::move(initial), std::move(boundary), std::move(decrease)};
    for (const auto& c : report.conditions) report.violated = report.violated || c.violations > 0;
    return report;
}

RecheckResult recheck_fixed_certificate(const Certificate& cert, const AugmentedSystem& aug,
                                        const RegionBundle& regions,
                                        const ProgramDegrees& degrees) {
    SosProgram prog;
    if (cert.kind == CertificateKind::Safety) {
        SafetyProgramOptions opt;
        opt.eps_lo = cert.eps_lo;
        opt.eps_hi = cert.eps_hi;
        opt.fixed_certificate = cert.certificate;
        opt.fixed_policy = cert.policy;
        prog = build_safety_program(aug, regions, degrees, opt);
    } else {
        ReachProgramOptions opt;
        opt.slack = cert.slack;
        opt.fixed_certificate = cert.certificate;
        opt.fixed_policy = cert.policy;
        prog = build_reach_program(aug, regions, degrees, opt);
    }
    auto compiled = compile_to_sdp(prog);
    auto solution = solve_feasibility(compiled.problem);

    RecheckResult out;
    out.status = solution.status;
    out.iterations = solution.iterations;
    out.message = solution.message;
    if (solution.status == SolveStatus::Feasible) {
        auto extracted = extract_certificate(prog, compiled, solution);
        out.max_residual = extracted.max_residual;
        out.min_gram_eig = extracted.min_gram_eig;
        out.certified = extracted.min_gram_eig >= -1e-8;
    }
    return out;
}

PolicyBoundsReport check_policy_bounds(const Certificate& cert, const AugmentedSystem& aug,
                                       std::size_t samples, std::uint64_t seed) {
    PolicyBoundsReport report;
    const std::size_t m = aug.m();
    if (m == 0 || cert.policy.empty()) return report;

    auto pair_pts = stratified_points(aug.pair_region, samples, seed);
    auto in_pts = sample_set(aug.base.input_set, aug.base.input_set.bounding_box(),
                             pair_pts.size(), seed + 77);
    for (auto& c : aug.base.input_set.corners()) in_pts.push_back(std::move(c));

    const bool safety = cert.kind == CertificateKind::Safety;
    for (std::size_t k = 0; k < pair_pts.size(); ++k) {
        const auto& pr = pair_pts[k];
        const auto& given = in_pts[k % in_pts.size()];
        auto values = name_values(aug.pair_state_space, pr);
        for (std::size_t i = 0; i < m; ++i) {
            const auto& name = aug.base.input_space.name(i);
            if (safety)
                values[name] = given[i];  // policy argument u
            else
                values[partner_name(name)] = given[i];  // policy argument uh
        }
        std::vector<double> out(m);
        for (std::size_t i = 0; i < m; ++i) out[i] = eval_by_name(cert.policy.at(i), values);
        ++report.samples;
        if (!aug.base.input_set.membership(out)) {
            ++report.out_of_bounds;
            if (report.witnesses.size() < kMaxWitnesses) {
                std::vector<double> witness = pr;
                witness.insert(witness.end(), given.begin(), given.end());
                report.witnesses.push_back(std::move(witness));
            }
        }
    }
    report.fraction =
        report.samples ? static_cast<double>(report.out_of_bounds) / report.samples : 0.0;
    return report;
}

}  // namespace opacheck
