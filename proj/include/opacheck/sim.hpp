/*
 * sim.hpp
 * -------
 * Deterministic pair-trajectory simulation and Monte-Carlo experiments.
 * Trajectories are stored completely (states, inputs, per-step output gap)
 * so every transition can be re-evaluated exactly; states are never
 * projected back into the state set — exits are recorded as boundary
 * events instead.
 */
#pragma once

#include <functional>

#include "opacheck/certificate.hpp"

namespace opacheck {

struct Trajectory {
    std::vector<std::vector<double>> x;    // horizon + 1 states
    std::vector<std::vector<double>> xh;   // partner states
    std::vector<std::vector<double>> u;    // horizon inputs
    std::vector<std::vector<double>> uh;   // partner inputs
    std::vector<double> gap;               // output gap per stored state
    std::vector<std::size_t> boundary_exits;  // steps where x or xh left X

    std::size_t horizon() const { return u.size(); }
};

// Chooses an input each step.  `partner_input` is the already-chosen input
// of the other copy when one exists (empty otherwise), so policies of the
// form p(x, xh, u) or p(x, xh, uh) are expressible.
using InputStrategy = std::function<std::vector<double>(
    std::size_t t, const std::vector<double>& x, const std::vector<double>& xh,
    const std::vector<double>& partner_input, std::mt19937_64& rng)>;

// Uniform draws from a box input set.
InputStrategy random_input_strategy(const SemiAlgebraicSet& input_set);
// Constant input.
InputStrategy constant_input_strategy(std::vector<double> value);
// Polynomial policy components evaluated by variable name; unmentioned
// variables read as zero.  With partner_as_plain the partner's input is
// bound to the plain input names (reach-style p(x, xh, uh) policies bind it
// to the partner names instead).
InputStrategy policy_input_strategy(const AugmentedSystem& aug, std::vector<Polynomial> policy,
                                    bool partner_sees_plain_input);
// Gap-minimizing adversary: picks the input from a k-point grid per input
// dimension minimizing the next-step output gap, given that the other copy
// will respond with `responder`.
InputStrategy greedy_adversary_strategy(const AugmentedSystem& aug,
                                        InputStrategy responder, std::size_t grid = 5);

// Step both copies for `horizon` steps; `first` picks u(t) before `second`
// picks uh(t) and sees it as partner input.
Trajectory simulate_pair(const AugmentedSystem& aug, const std::vector<double>& x0,
                         const std::vector<double>& xh0, const InputStrategy& first,
                         const InputStrategy& second, std::size_t horizon, std::uint64_t seed);

struct SafetySummary {
    std::size_t trials = 0;
    std::size_t ru_entries = 0;    // steps across all trials inside the unsafe region
    std::size_t unsafe_trials = 0; // trials with at least one entry
    double worst_gap = 0;
    std::size_t boundary_exits = 0;
};

// Pair runs from sampled initial-region points under random u and the
// certificate's partner policy; counts unsafe-region entries.
SafetySummary monte_carlo_safety(const AugmentedSystem& aug, const RegionBundle& regions,
                                 const Certificate& cert, std::size_t trials,
                                 std::size_t horizon, std::uint64_t seed,
                                 std::vector<Trajectory>* keep = nullptr);

enum class AdversaryKind { Random, Greedy };

struct ReachSummary {
    std::size_t trials = 0;
    std::size_t reached = 0;       // trials entering the unsafe region
    std::size_t timeouts = 0;
    double median_time = -1;       // over reaching trials; -1 when none
    std::vector<std::size_t> reach_times;
};

// Pair runs from sampled initial-region points under a fixed observed-input
// policy and an adversarial partner input (random or greedy gap-minimizing);
// records the first unsafe-region entry time per trial.
ReachSummary monte_carlo_reach(const AugmentedSystem& aug, const RegionBundle& regions,
                               const std::vector<Polynomial>& policy, AdversaryKind adversary,
                               std::size_t trials, std::size_t horizon, std::uint64_t seed,
                               std::vector<Trajectory>* keep = nullptr);

// Concatenated CSV with a trajectory-id column:
//   traj,t,x1..xn,xh1..xhn,u1..um,uh1..uhm,gap
// LF line endings, '.' decimal point, shortest round-trip numbers.  Input
// columns are empty on the final row of each trajectory.
void export_trajectories(const std::vector<Trajectory>& trajectories, const AugmentedSystem& aug,
                         const std::string& path);

}  // namespace opacheck
