#include "opacheck/report.hpp"

#include <cmath>
#include <fstream>

namespace opacheck {

namespace {

const char* role_name(VarRole r) {
    switch (r) {
        case VarRole::State: return "state";
        case VarRole::PartnerState: return "partner-state";
        case VarRole::Input: return "input";
        case VarRole::PartnerInput: return "partner-input";
    }
    return "state";
}

VarRole role_from_name(const std::string& s) {
    if (s == "state") return VarRole::State;
    if (s == "partner-state") return VarRole::PartnerState;
    if (s == "input") return VarRole::Input;
    if (s == "partner-input") return VarRole::PartnerInput;
    throw PolyError("unknown variable role '" + s + "'");
}

}  // namespace

nlohmann::json polynomial_to_json(const Polynomial& p) {
    auto terms = nlohmann::json::array();
    for (const auto& [m, c] : p.terms()) {
        nlohmann::json t;
        t["exp"] = m.exp;
        t["coef"] = c;
        terms.push_back(std::move(t));
    }
    return terms;
}

Polynomial polynomial_from_json(const nlohmann::json& j, const VariableSpace& space) {
    if (!j.is_array()) throw PolyError("polynomial encoding must be an array of terms");
    Polynomial::TermMap terms;
    for (const auto& t : j) {
        auto exp = t.at("exp").get<std::vector<unsigned>>();
        if (exp.size() != space.size())
            throw PolyError("term exponent length does not match the variable count");
        double c = t.at("coef").get<double>();
        if (c != 0) terms[Monomial(std::move(exp))] += c;
    }
    return Polynomial(space, std::move(terms));
}

nlohmann::json variable_space_to_json(const VariableSpace& space) {
    auto vars = nlohmann::json::array();
    for (std::size_t i = 0; i < space.size(); ++i) {
        nlohmann::json v;
        v["name"] = space.name(i);
        v["role"] = role_name(space.role(i));
        vars.push_back(std::move(v));
    }
    return vars;
}

VariableSpace variable_space_from_json(const nlohmann::json& j) {
    std::vector<std::string> names;
    std::vector<VarRole> roles;
    for (const auto& v : j) {
        names.push_back(v.at("name").get<std::string>());
        roles.push_back(role_from_name(v.at("role").get<std::string>()));
    }
    return VariableSpace(std::move(names), std::move(roles));
}

nlohmann::json validation_to_json(const ValidationReport& report) {
    nlohmann::json out;
    out["violated"] = report.violated;
    auto conds = nlohmann::json::array();
    for (const auto& c : report.conditions) {
        nlohmann::json jc;
        jc["condition"] = c.name;
        jc["samples"] = c.samples;
        jc["violations"] = c.violations;
        jc["max_excess"] = std::isfinite(c.max_excess) ? c.max_excess : 0.0;
        jc["witnesses"] = c.witnesses;
        conds.push_back(std::move(jc));
    }
    out["conditions"] = std::move(conds);
    return out;
}

nlohmann::json certificate_to_json(const Certificate& cert) {
    nlohmann::json out;
    out["kind"] = cert.kind == CertificateKind::Safety ? "safety" : "reach";
    out["provenance"] =
        cert.provenance == Provenance::Synthesized ? "synthesized" : "user-supplied";
    out["variables"] = variable_space_to_json(cert.certificate.space());
    out["polynomial"] = polynomial_to_json(cert.certificate);
    auto policy = nlohmann::json::array();
    for (const auto& p : cert.policy) {
        nlohmann::json jp;
        jp["variables"] = variable_space_to_json(p.space());
        jp["polynomial"] = polynomial_to_json(p);
        policy.push_back(std::move(jp));
    }
    out["policy"] = std::move(policy);
    nlohmann::json constants;
    if (cert.kind == CertificateKind::Safety) {
        constants["eps_lo"] = cert.eps_lo;
        constants["eps_hi"] = cert.eps_hi;
    } else {
        constants["slack"] = cert.slack;
    }
    out["constants"] = std::move(constants);
    return out;
}

nlohmann::json report_to_json(const RunReport& report) {
    nlohmann::json out;
    out["task"] = report.task;
    out["outcome"] = report.outcome;
    out["inputs"] = report.inputs;
    out["details"] = report.details;
    return out;
}

void write_report(const RunReport& report, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write report to " + path);
    f << report_to_json(report).dump(2) << "\n";
    if (!f) throw std::runtime_error("failed writing report to " + path);
}

}  // namespace opacheck
