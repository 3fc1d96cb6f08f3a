#include "opacheck/system.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace opacheck {

namespace {

using nlohmann::json;

SemiAlgebraicSet parse_set(const json& j, const VariableSpace& space, const std::string& field) {
    if (!j.is_object()) throw SpecError(field + ": expected an object");
    for (const auto& [key, val] : j.items())
        if (key != "box" && key != "inequalities" && key != "union")
            throw SpecError(field + ": unknown key '" + key + "'");
    if (j.contains("box") + j.contains("inequalities") + j.contains("union") != 1)
        throw SpecError(field + ": exactly one of box/inequalities/union required");

    if (j.contains("box")) {
        const auto& b = j.at("box");
        if (!b.is_array()) throw SpecError(field + ": box must be an array of [lo,hi] pairs");
        std::vector<Interval> bounds;
        for (const auto& iv : b) {
            if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
                throw SpecError(field + ": box entries must be [lo, hi]");
            bounds.push_back({iv[0].get<double>(), iv[1].get<double>()});
        }
        if (bounds.size() != space.size())
            throw SpecError(field + ": box has " + std::to_string(bounds.size()) +
                            " intervals for " + std::to_string(space.size()) + " variables");
        return SemiAlgebraicSet::box(space, std::move(bounds));
    }
    if (j.contains("inequalities")) {
        std::vector<Polynomial> gs;
        for (const auto& s : j.at("inequalities")) {
            if (!s.is_string()) throw SpecError(field + ": inequalities must be strings");
            try {
                gs.push_back(parse_polynomial(s.get<std::string>(), space));
            } catch (const ParseError& e) {
                throw SpecError(field + ": " + e.what());
            }
        }
        return SemiAlgebraicSet::inequalities(space, std::move(gs));
    }
    std::vector<SemiAlgebraicSet> members;
    for (const auto& m : j.at("union")) members.push_back(parse_set(m, space, field + ".union"));
    return SemiAlgebraicSet::union_of(std::move(members));
}

std::vector<std::string> parse_names(const json& j, const std::string& field) {
    if (!j.is_array()) throw SpecError(field + ": expected an array of identifiers");
    std::vector<std::string> names;
    for (const auto& n : j) {
        if (!n.is_string()) throw SpecError(field + ": identifiers must be strings");
        names.push_back(n.get<std::string>());
    }
    return names;
}

}  // namespace

std::vector<double> ControlSystem::step(const std::vector<double>& x,
                                        const std::vector<double>& u) const {
    if (x.size() != state_dim || u.size() != input_dim)
        throw SpecError("step: dimension mismatch");
    std::vector<double> point = x;
    point.insert(point.end(), u.begin(), u.end());
    std::vector<double> next(state_dim);
    for (std::size_t i = 0; i < state_dim; ++i) next[i] = dynamics[i].evaluate(point);
    return next;
}

std::vector<double> ControlSystem::output_at(const std::vector<double>& x) const {
    std::vector<double> y(output.size());
    for (std::size_t i = 0; i < output.size(); ++i) y[i] = output[i].evaluate(x);
    return y;
}

ControlSystem parse_spec(const std::string& json_text, const std::string& origin) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SpecError(origin + ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) throw SpecError(origin + ": top level must be an object");

    static const std::set<std::string> known = {
        "name",     "state_vars",  "input_vars", "dynamics",  "output",
        "state_set", "initial_set", "secret_set", "input_set", "delta"};
    for (const auto& [key, val] : j.items())
        if (!known.count(key)) throw SpecError(origin + ": unknown field '" + key + "'");
    for (const auto& key : known)
        if (!j.contains(key)) throw SpecError(origin + ": missing field '" + key + "'");

    ControlSystem sys;
    sys.name = j.at("name").is_string() ? j.at("name").get<std::string>()
                                        : throw SpecError(origin + ": name must be a string");

    auto state_names = parse_names(j.at("state_vars"), "state_vars");
    auto input_names = parse_names(j.at("input_vars"), "input_vars");
    if (state_names.empty()) throw SpecError(origin + ": no state variables");
    sys.state_dim = state_names.size();
    sys.input_dim = input_names.size();
    sys.state_space = VariableSpace::states(state_names);
    sys.input_space = input_names.empty()
                          ? VariableSpace()
                          : VariableSpace(input_names,
                                          std::vector<VarRole>(input_names.size(), VarRole::Input));
    {
        std::vector<std::string> names = state_names;
        names.insert(names.end(), input_names.begin(), input_names.end());
        std::vector<VarRole> roles(state_names.size(), VarRole::State);
        roles.insert(roles.end(), input_names.size(), VarRole::Input);
        sys.dynamics_space = VariableSpace(names, roles);
    }

    const auto& dyn = j.at("dynamics");
    if (!dyn.is_array()) throw SpecError(origin + ": dynamics must be an array");
    for (const auto& s : dyn) {
        if (!s.is_string()) throw SpecError(origin + ": dynamics entries must be strings");
        try {
            sys.dynamics.push_back(parse_polynomial(s.get<std::string>(), sys.dynamics_space));
        } catch (const ParseError& e) {
            throw SpecError(origin + ": dynamics: " + e.what());
        }
    }
    if (sys.dynamics.size() != sys.state_dim)
        throw SpecError(origin + ": dynamics has " + std::to_string(sys.dynamics.size()) +
                        " components for " + std::to_string(sys.state_dim) + " states");

    const auto& out = j.at("output");
    if (!out.is_array() || out.empty())
        throw SpecError(origin + ": output must be a non-empty array");
    for (const auto& s : out) {
        if (!s.is_string()) throw SpecError(origin + ": output entries must be strings");
        try {
            sys.output.push_back(parse_polynomial(s.get<std::string>(), sys.state_space));
        } catch (const ParseError& e) {
            throw SpecError(origin + ": output: " + e.what());
        }
    }

    sys.state_set = parse_set(j.at("state_set"), sys.state_space, "state_set");
    sys.initial_set = parse_set(j.at("initial_set"), sys.state_space, "initial_set");
    sys.secret_set = parse_set(j.at("secret_set"), sys.state_space, "secret_set");
    if (sys.input_dim > 0) {
        sys.input_set = parse_set(j.at("input_set"), sys.input_space, "input_set");
    } else if (!(j.at("input_set").is_object() && j.at("input_set").contains("box") &&
                 j.at("input_set").at("box").empty())) {
        throw SpecError(origin + ": input_set must be an empty box when there are no inputs");
    }

    if (!j.at("delta").is_number()) throw SpecError(origin + ": delta must be a number");
    sys.delta = j.at("delta").get<double>();
    if (sys.delta < 0) throw SpecError(origin + ": delta must be >= 0");

    // Statistical inclusion check: samples of X0 and Xs must lie in X.
    for (const auto* pair : {&sys.initial_set, &sys.secret_set}) {
        const char* label = (pair == &sys.initial_set) ? "initial_set" : "secret_set";
        try {
            auto pts = sample_set(*pair, std::nullopt, 1000, 20240715);
            for (const auto& p : pts)
                if (!sys.state_set.membership(p))
                    throw SpecError(origin + ": sampled point of " + std::string(label) +
                                    " lies outside state_set");
        } catch (const SetError&) {
            // No bounding box or an unsampleable set; skip the spot check.
        }
    }
    return sys;
}

ControlSystem load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open spec file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec(buf.str(), path);
}

}  // namespace opacheck
