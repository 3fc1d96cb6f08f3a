#include "opacheck/augment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

namespace opacheck {

namespace {

// Remap a polynomial's variables into a target space by index map.
Polynomial map_vars(const Polynomial& p, const VariableSpace& target,
                    const std::vector<std::size_t>& index_map) {
    std::vector<Polynomial> images;
    images.reserve(p.space().size());
    for (std::size_t i = 0; i < p.space().size(); ++i)
        images.push_back(Polynomial::variable(target, index_map[i]));
    return p.substitute(images);
}

struct FlatSet {
    std::optional<std::vector<Interval>> box;
    std::vector<Polynomial> constraints;  // over the original space
};

FlatSet flatten(const SemiAlgebraicSet& s, const std::string& what) {
    if (s.is_union()) throw SetError(what + ": union sets are not supported here");
    return {s.box_bounds(), s.raw_constraints()};
}

// Build a pair-space set from an x-copy set and an xh-copy set over the
// state space.  Keeps a box when both parts have one so sampling stays
// possible.
SemiAlgebraicSet lift_pair(const SemiAlgebraicSet& on_x, const SemiAlgebraicSet& on_xh,
                           const VariableSpace& pair_space, std::size_t n) {
    FlatSet a = flatten(on_x, "pair region (x part)");
    FlatSet b = flatten(on_xh, "pair region (xh part)");
    std::vector<std::size_t> id_map(n), partner_map(n);
    for (std::size_t i = 0; i < n; ++i) {
        id_map[i] = i;
        partner_map[i] = n + i;
    }
    SemiAlgebraicSet out(pair_space);
    if (a.box && b.box) {
        std::vector<Interval> bounds = *a.box;
        bounds.insert(bounds.end(), b.box->begin(), b.box->end());
        out = SemiAlgebraicSet::box(pair_space, std::move(bounds));
    } else {
        std::vector<Polynomial> gs;
        for (const auto& g : on_x.expanded_constraints()) gs.push_back(map_vars(g, pair_space, id_map));
        for (const auto& g : on_xh.expanded_constraints())
            gs.push_back(map_vars(g, pair_space, partner_map));
        return SemiAlgebraicSet::inequalities(pair_space, std::move(gs));
    }
    for (const auto& g : a.constraints) out = out.with_constraint(map_vars(g, pair_space, id_map));
    for (const auto& g : b.constraints)
        out = out.with_constraint(map_vars(g, pair_space, partner_map));
    return out;
}

}  // namespace

std::string partner_name(const std::string& name) {
    std::size_t cut = name.size();
    while (cut > 0 && std::isdigit(static_cast<unsigned char>(name[cut - 1]))) --cut;
    return name.substr(0, cut) + "h" + name.substr(cut);
}

AugmentedSystem build_product(const ControlSystem& sys) {
    AugmentedSystem aug;
    aug.base = sys;
    const std::size_t n = sys.state_dim, m = sys.input_dim;

    std::vector<std::string> pair_names, full_names;
    std::vector<VarRole> pair_roles, full_roles;
    for (std::size_t i = 0; i < n; ++i) {
        pair_names.push_back(sys.state_space.name(i));
        pair_roles.push_back(VarRole::State);
    }
    for (std::size_t i = 0; i < n; ++i) {
        pair_names.push_back(partner_name(sys.state_space.name(i)));
        pair_roles.push_back(VarRole::PartnerState);
    }
    full_names = pair_names;
    full_roles = pair_roles;
    for (std::size_t i = 0; i < m; ++i) {
        full_names.push_back(sys.input_space.name(i));
        full_roles.push_back(VarRole::Input);
    }
    for (std::size_t i = 0; i < m; ++i) {
        full_names.push_back(partner_name(sys.input_space.name(i)));
        full_roles.push_back(VarRole::PartnerInput);
    }
    aug.pair_state_space = VariableSpace(pair_names, pair_roles);
    aug.full_space = VariableSpace(full_names, full_roles);

    // Index maps for the two copies of the dynamics space (x,u).
    std::vector<std::size_t> first_copy(n + m), second_copy(n + m);
    for (std::size_t i = 0; i < n; ++i) {
        first_copy[i] = i;
        second_copy[i] = n + i;
    }
    for (std::size_t i = 0; i < m; ++i) {
        first_copy[n + i] = 2 * n + i;
        second_copy[n + i] = 2 * n + m + i;
    }
    for (std::size_t i = 0; i < n; ++i)
        aug.paired_dynamics.push_back(map_vars(sys.dynamics[i], aug.full_space, first_copy));
    for (std::size_t i = 0; i < n; ++i)
        aug.paired_dynamics.push_back(map_vars(sys.dynamics[i], aug.full_space, second_copy));

    std::vector<std::size_t> x_map(n), xh_map(n);
    for (std::size_t i = 0; i < n; ++i) {
        x_map[i] = i;
        xh_map[i] = n + i;
    }
    aug.output_gap_sq = Polynomial::zero(aug.pair_state_space);
    for (const auto& h : sys.output) {
        aug.paired_output_x.push_back(map_vars(h, aug.pair_state_space, x_map));
        aug.paired_output_xh.push_back(map_vars(h, aug.pair_state_space, xh_map));
        Polynomial diff = aug.paired_output_x.back() - aug.paired_output_xh.back();
        aug.output_gap_sq = aug.output_gap_sq + diff * diff;
    }
    aug.pair_region = lift_pair(sys.state_set, sys.state_set, aug.pair_state_space, n);

    // Renaming soundness: paired dynamics at a duplicated point must equal
    // the base dynamics.
    std::mt19937_64 rng(2718281828ull);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(n), u(m);
        for (auto& v : x) v = dist(rng);
        for (auto& v : u) v = dist(rng);
        std::vector<double> fx = sys.step(x, u);
        std::vector<double> pt;
        pt.insert(pt.end(), x.begin(), x.end());
        pt.insert(pt.end(), x.begin(), x.end());
        pt.insert(pt.end(), u.begin(), u.end());
        pt.insert(pt.end(), u.begin(), u.end());
        for (std::size_t i = 0; i < n; ++i) {
            double a = aug.paired_dynamics[i].evaluate(pt);
            double b = aug.paired_dynamics[n + i].evaluate(pt);
            if (std::abs(a - fx[i]) > 1e-9 * (1 + std::abs(fx[i])) ||
                std::abs(b - fx[i]) > 1e-9 * (1 + std::abs(fx[i])))
                throw SpecError("augmented dynamics failed the renaming consistency check");
        }
    }
    return aug;
}

SemiAlgebraicSet intersect_initial_secret(const ControlSystem& sys) {
    FlatSet a = flatten(sys.initial_set, "initial_set");
    FlatSet b = flatten(sys.secret_set, "secret_set");
    if (a.box && b.box) {
        std::vector<Interval> bounds(a.box->size());
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            bounds[i].lo = std::max((*a.box)[i].lo, (*b.box)[i].lo);
            bounds[i].hi = std::min((*a.box)[i].hi, (*b.box)[i].hi);
            if (bounds[i].lo > bounds[i].hi)
                throw SetError("initial and secret sets do not intersect");
        }
        SemiAlgebraicSet out = SemiAlgebraicSet::box(sys.state_space, std::move(bounds));
        for (const auto& g : a.constraints) out = out.with_constraint(g);
        for (const auto& g : b.constraints) out = out.with_constraint(g);
        return out;
    }
    std::vector<Polynomial> gs = sys.initial_set.expanded_constraints();
    for (const auto& g : sys.secret_set.expanded_constraints()) gs.push_back(g);
    return SemiAlgebraicSet::inequalities(sys.state_space, std::move(gs));
}

SemiAlgebraicSet initial_minus_secret(const ControlSystem& sys) {
    FlatSet x0 = flatten(sys.initial_set, "initial_set");
    const auto& xs = sys.secret_set;
    std::vector<SemiAlgebraicSet> branches;

    if (xs.is_box() && x0.box) {
        // True interval difference of boxes, one branch per escaping face;
        // the closure convention keeps shared boundaries in both sides.
        const auto& sb = *xs.box_bounds();
        const auto& ib = *x0.box;
        for (std::size_t i = 0; i < ib.size(); ++i) {
            if (ib[i].lo < sb[i].lo) {
                std::vector<Interval> bounds = ib;
                bounds[i].hi = std::min(sb[i].lo, ib[i].hi);
                branches.push_back(SemiAlgebraicSet::box(sys.state_space, std::move(bounds)));
            }
            if (ib[i].hi > sb[i].hi) {
                std::vector<Interval> bounds = ib;
                bounds[i].lo = std::max(sb[i].hi, ib[i].lo);
                branches.push_back(SemiAlgebraicSet::box(sys.state_space, std::move(bounds)));
            }
        }
        if (branches.empty())
            throw SetError("initial_minus_secret: the initial set is contained in the secret set");
    } else if (!xs.is_union() && !xs.box_bounds() && xs.raw_constraints().size() == 1) {
        // Single-inequality secret set: complement is -g >= 0.
        SemiAlgebraicSet branch = sys.initial_set.with_constraint(-xs.raw_constraints()[0]);
        branches.push_back(std::move(branch));
    } else {
        throw SetError(
            "initial_minus_secret: secret set must be a box or a single inequality to take its "
            "complement");
    }
    if (branches.size() == 1) return branches.front();
    return SemiAlgebraicSet::union_of(std::move(branches));
}

RegionBundle build_safety_regions(const AugmentedSystem& aug, double margin) {
    if (margin <= 0) throw SetError("build_safety_regions: margin must be positive");
    const std::size_t n = aug.n();
    RegionBundle bundle;
    bundle.margin = margin;
    bundle.gap_sq = aug.output_gap_sq;
    bundle.r = aug.pair_region;

    const double delta = aug.base.delta;
    Polynomial d2 = Polynomial::constant(aug.pair_state_space, delta * delta);
    Polynomial gap_le = d2 - aug.output_gap_sq;  // >= 0 inside the tolerance band

    SemiAlgebraicSet secret_part = intersect_initial_secret(aug.base);
    SemiAlgebraicSet open_part = initial_minus_secret(aug.base);

    std::vector<SemiAlgebraicSet> r0_branches;
    if (open_part.is_union()) {
        for (const auto& member : open_part.members())
            r0_branches.push_back(
                lift_pair(secret_part, member, aug.pair_state_space, n).with_constraint(gap_le));
    } else {
        r0_branches.push_back(
            lift_pair(secret_part, open_part, aug.pair_state_space, n).with_constraint(gap_le));
    }
    bundle.r0 = r0_branches.size() == 1 ? r0_branches.front()
                                        : SemiAlgebraicSet::union_of(std::move(r0_branches));

    Polynomial gap_ge =
        aug.output_gap_sq - Polynomial::constant(aug.pair_state_space, delta * delta + margin);
    bundle.ru = aug.pair_region.with_constraint(gap_ge);
    return bundle;
}

RegionBundle build_reach_regions(const AugmentedSystem& aug,
                                 std::optional<std::size_t> monitor_override) {
    const std::size_t n = aug.n();
    if (!aug.base.state_set.is_box())
        throw SetError("build_reach_regions: the state set must be a bounded box");
    const auto& xbox = *aug.base.state_set.box_bounds();

    // Monitored coordinate: the output coordinate when h is a single state
    // variable, unless overridden.
    std::optional<std::size_t> from_output;
    if (aug.base.output.size() == 1 && aug.base.output[0].term_count() == 1) {
        const auto& [mono, coeff] = *aug.base.output[0].terms().begin();
        if (mono.degree() == 1 && coeff == 1.0)
            for (std::size_t i = 0; i < n; ++i)
                if (mono.exp[i] == 1) from_output = i;
    }
    std::size_t coord;
    if (monitor_override) {
        if (*monitor_override >= n)
            throw SetError("build_reach_regions: monitored coordinate out of range");
        coord = *monitor_override;
    } else if (from_output) {
        coord = *from_output;
    } else {
        throw SetError(
            "build_reach_regions: output map is not a single state coordinate; a monitored "
            "coordinate override is required");
    }

    RegionBundle bundle;
    bundle.monitored_coord = coord;
    bundle.monitor_overridden = from_output && coord != *from_output;
    const double delta = aug.base.delta;

    Polynomial diff = Polynomial::variable(aug.pair_state_space, coord) -
                      Polynomial::variable(aug.pair_state_space, n + coord);
    bundle.gap_sq = diff * diff;
    bundle.r = aug.pair_region;
    Polynomial d2 = Polynomial::constant(aug.pair_state_space, delta * delta);

    bundle.ru = aug.pair_region.with_constraint(bundle.gap_sq - d2);
    bundle.closure_core = aug.pair_region.with_constraint(d2 - bundle.gap_sq);

    // R0 mirrors the safety construction (the reach certificate uses the
    // same initial region).
    SemiAlgebraicSet secret_part = intersect_initial_secret(aug.base);
    SemiAlgebraicSet open_part = initial_minus_secret(aug.base);
    Polynomial out_gap_le =
        Polynomial::constant(aug.pair_state_space, delta * delta) - aug.output_gap_sq;
    std::vector<SemiAlgebraicSet> r0_branches;
    if (open_part.is_union()) {
        for (const auto& member : open_part.members())
            r0_branches.push_back(
                lift_pair(secret_part, member, aug.pair_state_space, n).with_constraint(out_gap_le));
    } else {
        r0_branches.push_back(
            lift_pair(secret_part, open_part, aug.pair_state_space, n).with_constraint(out_gap_le));
    }
    bundle.r0 = r0_branches.size() == 1 ? r0_branches.front()
                                        : SemiAlgebraicSet::union_of(std::move(r0_branches));

    // Boundary faces on the monitored coordinate pair; other coordinates
    // range over the full state box.
    const Interval& range = xbox[coord];
    if (range.degenerate()) bundle.degenerate_boundary = true;
    std::vector<SemiAlgebraicSet> faces;
    for (const auto& face : pair_box_boundary_faces(range, delta)) {
        std::vector<Interval> bounds;
        for (std::size_t i = 0; i < n; ++i) bounds.push_back(i == coord ? face[0] : xbox[i]);
        for (std::size_t i = 0; i < n; ++i) bounds.push_back(i == coord ? face[1] : xbox[i]);
        faces.push_back(SemiAlgebraicSet::box(aug.pair_state_space, std::move(bounds)));
    }
    bundle.boundary = SemiAlgebraicSet::union_of(std::move(faces));
    return bundle;
}

AssumptionReport check_initial_assumption(const ControlSystem& sys, std::size_t samples,
                                          std::uint64_t seed) {
    AssumptionReport report;
    SemiAlgebraicSet secrets(sys.state_space);
    try {
        secrets = intersect_initial_secret(sys);
    } catch (const SetError&) {
        report.vacuous = true;  // no secret initial states
        return report;
    }

    SemiAlgebraicSet open_part = initial_minus_secret(sys);
    std::vector<std::vector<double>> candidates = open_part.corners();
    try {
        auto sampled = sample_set(open_part, std::nullopt, std::max<std::size_t>(samples, 2048),
                                  seed ^ 0x9e3779b97f4a7c15ull);
        candidates.insert(candidates.end(), sampled.begin(), sampled.end());
    } catch (const SetError&) {
        if (candidates.empty()) throw;
    }

    std::vector<std::vector<double>> secret_points;
    try {
        secret_points = sample_set(secrets, std::nullopt, samples, seed);
    } catch (const SetError&) {
        report.vacuous = true;
        return report;
    }
    auto secret_corners = secrets.corners();
    secret_points.insert(secret_points.end(), secret_corners.begin(), secret_corners.end());

    std::vector<std::vector<double>> cand_outputs;
    cand_outputs.reserve(candidates.size());
    for (const auto& c : candidates) cand_outputs.push_back(sys.output_at(c));

    for (const auto& x0 : secret_points) {
        auto y0 = sys.output_at(x0);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& yc : cand_outputs) {
            double g2 = 0;
            for (std::size_t k = 0; k < y0.size(); ++k) g2 += (y0[k] - yc[k]) * (y0[k] - yc[k]);
            best = std::min(best, std::sqrt(g2));
        }
        ++report.checked;
        report.worst_min_gap = std::max(report.worst_min_gap, best);
        if (best > sys.delta + 1e-9) {
            report.holds = false;
            report.witness = x0;
            return report;
        }
    }
    return report;
}

}  // namespace opacheck
