#include "opacheck/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <unordered_map>

namespace opacheck {

namespace {

double output_gap(const ControlSystem& sys, const std::vector<double>& x,
                  const std::vector<double>& xh) {
    auto y = sys.output_at(x);
    auto yh = sys.output_at(xh);
    double s = 0;
    for (std::size_t k = 0; k < y.size(); ++k) s += (y[k] - yh[k]) * (y[k] - yh[k]);
    return std::sqrt(s);
}

std::vector<Interval> input_box(const SemiAlgebraicSet& input_set) {
    auto box = input_set.bounding_box();
    if (!box) throw SetError("input set has no bounding box to draw from");
    return *box;
}

double eval_by_name(const Polynomial& p,
                    const std::unordered_map<std::string, double>& values) {
    std::vector<double> point(p.space().size(), 0.0);
    for (std::size_t i = 0; i < p.space().size(); ++i)
        if (auto it = values.find(p.space().name(i)); it != values.end()) point[i] = it->second;
    return p.evaluate(point);
}

// Union-aware initial-point draw: the budget round-robins over branches.
std::vector<std::vector<double>> initial_points(const SemiAlgebraicSet& set, std::size_t count,
                                                std::uint64_t seed) {
    if (!set.is_union()) return sample_set(set, set.bounding_box(), count, seed);
    const auto& parts = set.members();
    std::vector<std::vector<double>> out;
    std::size_t per = count / parts.size() + 1;
    std::vector<std::vector<std::vector<double>>> branch_pts;
    for (std::size_t b = 0; b < parts.size(); ++b)
        branch_pts.push_back(sample_set(parts[b], parts[b].bounding_box(), per, seed + b));
    for (std::size_t k = 0; out.size() < count; ++k)
        out.push_back(branch_pts[k % parts.size()][k / parts.size()]);
    return out;
}

std::uint64_t trial_seed(std::uint64_t seed, std::size_t trial) {
    // SplitMix64 step keeps per-trial streams decorrelated.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (trial + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace

InputStrategy random_input_strategy(const SemiAlgebraicSet& input_set) {
    auto box = input_box(input_set);
    return [box](std::size_t, const std::vector<double>&, const std::vector<double>&,
                 const std::vector<double>&, std::mt19937_64& rng) {
        std::vector<double> u(box.size());
        for (std::size_t i = 0; i < box.size(); ++i) {
            if (box[i].degenerate()) {
                u[i] = box[i].lo;
            } else {
                std::uniform_real_distribution<double> d(box[i].lo, box[i].hi);
                u[i] = d(rng);
            }
        }
        return u;
    };
}

InputStrategy constant_input_strategy(std::vector<double> value) {
    return [value = std::move(value)](std::size_t, const std::vector<double>&,
                                      const std::vector<double>&, const std::vector<double>&,
                                      std::mt19937_64&) { return value; };
}

InputStrategy policy_input_strategy(const AugmentedSystem& aug, std::vector<Polynomial> policy,
                                    bool partner_sees_plain_input) {
    std::vector<std::string> state_names = aug.base.state_space.names();
    std::vector<std::string> input_names = aug.base.input_space.names();
    return [&aug, policy = std::move(policy), partner_sees_plain_input, state_names,
            input_names](std::size_t, const std::vector<double>& x, const std::vector<double>& xh,
                         const std::vector<double>& partner_input, std::mt19937_64&) {
        std::unordered_map<std::string, double> values;
        for (std::size_t i = 0; i < state_names.size(); ++i) {
            values[state_names[i]] = x[i];
            values[partner_name(state_names[i])] = xh[i];
        }
        for (std::size_t i = 0; i < partner_input.size(); ++i) {
            const auto& key = partner_sees_plain_input ? input_names[i]
                                                       : partner_name(input_names[i]);
            values[key] = partner_input[i];
        }
        std::vector<double> out(policy.size());
        for (std::size_t i = 0; i < policy.size(); ++i) out[i] = eval_by_name(policy[i], values);
        return out;
    };
}

InputStrategy greedy_adversary_strategy(const AugmentedSystem& aug, InputStrategy responder,
                                        std::size_t grid) {
    auto box = input_box(aug.base.input_set);
    return [&aug, responder = std::move(responder), grid, box](
               std::size_t t, const std::vector<double>& x, const std::vector<double>& xh,
               const std::vector<double>&, std::mt19937_64& rng) {
        const std::size_t m = box.size();
        std::vector<std::size_t> idx(m, 0);
        std::vector<double> best;
        double best_gap = std::numeric_limits<double>::infinity();
        // Full grid walk in a fixed order; ties keep the earliest point.
        while (true) {
            std::vector<double> cand(m);
            for (std::size_t i = 0; i < m; ++i)
                cand[i] = box[i].degenerate() || grid < 2
                              ? 0.5 * (box[i].lo + box[i].hi)
                              : box[i].lo + box[i].width() * static_cast<double>(idx[i]) /
                                                static_cast<double>(grid - 1);
            auto response = responder(t, x, xh, cand, rng);
            double g = output_gap(aug.base, aug.base.step(x, response), aug.base.step(xh, cand));
            if (g < best_gap) {
                best_gap = g;
                best = cand;
            }
            std::size_t d = 0;
            while (d < m && ++idx[d] == grid) idx[d++] = 0;
            if (d == m) break;
        }
        return best;
    };
}

Trajectory simulate_pair(const AugmentedSystem& aug, const std::vector<double>& x0,
                         const std::vector<double>& xh0, const InputStrategy& first,
                         const InputStrategy& second, std::size_t horizon, std::uint64_t seed) {
    if (x0.size() != aug.n() || xh0.size() != aug.n())
        throw SetError("initial pair dimensions do not match the system");
    Trajectory traj;
    traj.x.push_back(x0);
    traj.xh.push_back(xh0);
    traj.gap.push_back(output_gap(aug.base, x0, xh0));
    std::mt19937_64 rng(seed);
    for (std::size_t t = 0; t < horizon; ++t) {
        const auto& x = traj.x.back();
        const auto& xh = traj.xh.back();
        auto u = first(t, x, xh, {}, rng);
        auto uh = second(t, x, xh, u, rng);
        if (u.size() != aug.m() || uh.size() != aug.m())
            throw SetError("input strategy returned the wrong dimension");
        auto xn = aug.base.step(x, u);
        auto xhn = aug.base.step(xh, uh);
        traj.u.push_back(std::move(u));
        traj.uh.push_back(std::move(uh));
        traj.gap.push_back(output_gap(aug.base, xn, xhn));
        if (!aug.base.state_set.membership(xn) || !aug.base.state_set.membership(xhn))
            traj.boundary_exits.push_back(t + 1);
        traj.x.push_back(std::move(xn));
        traj.xh.push_back(std::move(xhn));
    }
    return traj;
}

SafetySummary monte_carlo_safety(const AugmentedSystem& aug, const RegionBundle& regions,
                                 const Certificate& cert, std::size_t trials,
                                 std::size_t horizon, std::uint64_t seed,
                                 std::vector<Trajectory>* keep) {
    SafetySummary summary;
    const std::size_t n = aug.n();
    auto starts = initial_points(regions.r0, trials, seed);
    auto u_strategy = random_input_strategy(aug.base.input_set);
    auto uh_strategy = policy_input_strategy(aug, cert.policy, true);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto& pr = starts[trial % starts.size()];
        std::vector<double> x0(pr.begin(), pr.begin() + n);
        std::vector<double> xh0(pr.begin() + n, pr.end());
        auto traj = simulate_pair(aug, x0, xh0, u_strategy, uh_strategy, horizon,
                                  trial_seed(seed, trial));
        ++summary.trials;
        summary.boundary_exits += traj.boundary_exits.size();
        bool entered = false;
        for (std::size_t t = 0; t < traj.x.size(); ++t) {
            summary.worst_gap = std::max(summary.worst_gap, traj.gap[t]);
            std::vector<double> pt = traj.x[t];
            pt.insert(pt.end(), traj.xh[t].begin(), traj.xh[t].end());
            if (regions.ru.membership(pt)) {
                ++summary.ru_entries;
                entered = true;
            }
        }
        if (entered) ++summary.unsafe_trials;
        if (keep) keep->push_back(std::move(traj));
    }
    return summary;
}

ReachSummary monte_carlo_reach(const AugmentedSystem& aug, const RegionBundle& regions,
                               const std::vector<Polynomial>& policy, AdversaryKind adversary,
                               std::size_t trials, std::size_t horizon, std::uint64_t seed,
                               std::vector<Trajectory>* keep) {
    ReachSummary summary;
    const std::size_t n = aug.n();
    auto starts = initial_points(regions.r0, trials, seed);
    // The certificate side moves second: u responds to the adversary's uh.
    auto u_strategy = policy_input_strategy(aug, policy, false);
    InputStrategy uh_strategy = adversary == AdversaryKind::Random
                                    ? random_input_strategy(aug.base.input_set)
                                    : greedy_adversary_strategy(aug, u_strategy, 5);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const auto& pr = starts[trial % starts.size()];
        std::vector<double> x0(pr.begin(), pr.begin() + n);
        std::vector<double> xh0(pr.begin() + n, pr.end());

        // Adversary first, responder second; columns stay (u, uh) by
        // swapping around simulate_pair's ordering.
        Trajectory traj;
        traj.x.push_back(x0);
        traj.xh.push_back(xh0);
        traj.gap.push_back(0);
        std::mt19937_64 rng(trial_seed(seed, trial));
        traj.gap.back() = output_gap(aug.base, x0, xh0);
        std::optional<std::size_t> reach_time;
        {
            std::vector<double> pt = x0;
            pt.insert(pt.end(), xh0.begin(), xh0.end());
            if (regions.ru.membership(pt)) reach_time = 0;
        }
        for (std::size_t t = 0; t < horizon && !reach_time; ++t) {
            const auto& x = traj.x.back();
            const auto& xh = traj.xh.back();
            auto uh = uh_strategy(t, x, xh, {}, rng);
            auto u = u_strategy(t, x, xh, uh, rng);
            auto xn = aug.base.step(x, u);
            auto xhn = aug.base.step(xh, uh);
            traj.u.push_back(std::move(u));
            traj.uh.push_back(std::move(uh));
            traj.gap.push_back(output_gap(aug.base, xn, xhn));
            if (!aug.base.state_set.membership(xn) || !aug.base.state_set.membership(xhn))
                traj.boundary_exits.push_back(t + 1);
            traj.x.push_back(std::move(xn));
            traj.xh.push_back(std::move(xhn));
            std::vector<double> pt = traj.x.back();
            pt.insert(pt.end(), traj.xh.back().begin(), traj.xh.back().end());
            if (regions.ru.membership(pt)) reach_time = t + 1;
        }
        ++summary.trials;
        if (reach_time) {
            ++summary.reached;
            summary.reach_times.push_back(*reach_time);
        } else {
            ++summary.timeouts;
        }
        if (keep) keep->push_back(std::move(traj));
    }
    if (!summary.reach_times.empty()) {
        auto times = summary.reach_times;
        std::sort(times.begin(), times.end());
        summary.median_time = static_cast<double>(times[times.size() / 2]);
    }
    return summary;
}

void export_trajectories(const std::vector<Trajectory>& trajectories, const AugmentedSystem& aug,
                         const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write trajectories to " + path);
    f << "traj,t";
    for (const auto& name : aug.base.state_space.names()) f << "," << name;
    for (const auto& name : aug.base.state_space.names()) f << "," << partner_name(name);
    for (const auto& name : aug.base.input_space.names()) f << "," << name;
    for (const auto& name : aug.base.input_space.names()) f << "," << partner_name(name);
    f << ",gap\n";
    for (std::size_t id = 0; id < trajectories.size(); ++id) {
        const auto& traj = trajectories[id];
        for (std::size_t t = 0; t < traj.x.size(); ++t) {
            f << id << "," << t;
            for (double v : traj.x[t]) f << "," << format_double(v);
            for (double v : traj.xh[t]) f << "," << format_double(v);
            const bool has_input = t < traj.u.size();
            for (std::size_t i = 0; i < aug.m(); ++i)
                f << "," << (has_input ? format_double(traj.u[t][i]) : "");
            for (std::size_t i = 0; i < aug.m(); ++i)
                f << "," << (has_input ? format_double(traj.uh[t][i]) : "");
            f << "," << format_double(traj.gap[t]) << "\n";
        }
    }
    if (!f) throw std::runtime_error("failed writing trajectories to " + path);
}

}  // namespace opacheck
