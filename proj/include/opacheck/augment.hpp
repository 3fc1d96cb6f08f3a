/*
 * augment.hpp
 * -----------
 * The product of a control system with itself, and the regions over pair
 * states used by the safety-style and reachability-style certificate
 * conditions.  Partner variables are written with an "h" suffix inserted
 * before any trailing digits (x1 -> xh1, u -> uh).
 */
#pragma once

#include <optional>

#include "opacheck/system.hpp"

namespace opacheck {

struct AugmentedSystem {
    ControlSystem base;
    VariableSpace pair_state_space;  // x1..xn, xh1..xhn
    VariableSpace full_space;        // x, xh, u, uh
    std::vector<Polynomial> paired_dynamics;  // 2n components over full_space
    std::vector<Polynomial> paired_output_x;  // h(x) over pair_state_space
    std::vector<Polynomial> paired_output_xh; // h(xh) over pair_state_space
    SemiAlgebraicSet pair_region;    // R = X x X over pair_state_space
    Polynomial output_gap_sq;        // sum_k (h_k(x) - h_k(xh))^2

    std::size_t n() const { return base.state_dim; }
    std::size_t m() const { return base.input_dim; }
};

struct RegionBundle {
    SemiAlgebraicSet r0;  // possibly a union over complement branches
    SemiAlgebraicSet ru;
    SemiAlgebraicSet r;
    std::optional<SemiAlgebraicSet> boundary;      // boundary faces minus the unsafe part
    std::optional<SemiAlgebraicSet> closure_core;  // closure of R minus Ru
    double margin = 0;
    Polynomial gap_sq;               // the gap polynomial the bundle was built with
    std::size_t monitored_coord = 0; // reach bundles only
    bool monitor_overridden = false;
    bool degenerate_boundary = false;
};

struct AssumptionReport {
    bool holds = true;
    bool vacuous = false;
    std::size_t checked = 0;
    double worst_min_gap = 0;  // largest over x0 of the best candidate gap
    std::optional<std::vector<double>> witness;
};

std::string partner_name(const std::string& name);

AugmentedSystem build_product(const ControlSystem& sys);

// Intersection and complement-difference of the initial and secret sets at
// the state level.  The difference supports a box or single-inequality
// secret set; branches carry the closure convention g <= 0 -> -g >= 0.
SemiAlgebraicSet intersect_initial_secret(const ControlSystem& sys);
SemiAlgebraicSet initial_minus_secret(const ControlSystem& sys);

// R0 and Ru per the safety construction, with the strict unsafe inequality
// closed by the given margin: gap^2 >= delta^2 + margin.
RegionBundle build_safety_regions(const AugmentedSystem& aug, double margin);

// Reachability regions: closure(R \ Ru) and the four boundary faces on the
// monitored coordinate pair.  Requires a box state set; the monitored
// coordinate defaults to the output coordinate when the output map is a
// single state variable, and can be overridden.
RegionBundle build_reach_regions(const AugmentedSystem& aug,
                                 std::optional<std::size_t> monitor_override = std::nullopt);

// Sampled check of the standing initial-state assumption: every secret
// initial state has a non-secret initial state within output distance delta.
AssumptionReport check_initial_assumption(const ControlSystem& sys, std::size_t samples,
                                          std::uint64_t seed);

}  // namespace opacheck
