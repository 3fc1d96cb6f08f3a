/*
 * semialg.hpp
 * -----------
 * Semialgebraic sets as conjunctions of polynomial inequalities g(z) >= 0,
 * with a box shorthand and a disjunctive-union escape hatch.  Membership is
 * decided by evaluating all constraints; sampling is rejection sampling
 * inside a bounding box.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "opacheck/poly.hpp"

namespace opacheck {

struct Interval {
    double lo = 0;
    double hi = 0;
    bool degenerate() const { return lo == hi; }
    double width() const { return hi - lo; }
};

class SetError : public std::runtime_error {
public:
    explicit SetError(const std::string& what) : std::runtime_error(what) {}
};

class SemiAlgebraicSet {
public:
    SemiAlgebraicSet() = default;
    explicit SemiAlgebraicSet(VariableSpace space) : space_(std::move(space)) {}

    static SemiAlgebraicSet box(const VariableSpace& space, std::vector<Interval> bounds);
    static SemiAlgebraicSet inequalities(const VariableSpace& space,
                                         std::vector<Polynomial> constraints);
    static SemiAlgebraicSet union_of(std::vector<SemiAlgebraicSet> members);

    const VariableSpace& space() const { return space_; }
    bool is_union() const { return !members_.empty(); }
    const std::vector<SemiAlgebraicSet>& members() const { return members_; }
    bool is_box() const { return box_.has_value() && constraints_.empty() && !is_union(); }
    const std::optional<std::vector<Interval>>& box_bounds() const { return box_; }
    const std::vector<Polynomial>& raw_constraints() const { return constraints_; }

    // Intersect with an extra polynomial constraint g >= 0 (distributes over
    // union members).
    SemiAlgebraicSet with_constraint(const Polynomial& g) const;

    // Box shorthand expanded: exactly two affine constraints per variable,
    // (z_i - lo) >= 0 and (hi - z_i) >= 0, followed by the explicit ones.
    // Union sets cannot be flattened this way and throw.
    std::vector<Polynomial> expanded_constraints() const;

    bool membership(const std::vector<double>& point) const;

    // Smallest covering box, when derivable from box shorthands.
    std::optional<std::vector<Interval>> bounding_box() const;

    // Corner points of the box shorthand (union: corners of every member);
    // empty when no box is available or the corner count exceeds the cap.
    std::vector<std::vector<double>> corners(std::size_t cap = 4096) const;

private:
    VariableSpace space_;
    std::vector<Polynomial> constraints_;
    std::optional<std::vector<Interval>> box_;
    std::vector<SemiAlgebraicSet> members_;
};

// Deterministic rejection sampler.  Throws SetError if no bounding box is
// available or the acceptance rate drops below 1e-4.
std::vector<std::vector<double>> sample_set(const SemiAlgebraicSet& set,
                                            const std::optional<std::vector<Interval>>& bounding_box,
                                            std::size_t count, std::uint64_t seed);

// The four boundary faces of a paired 1-D box [lo,hi] x [lo,hi] restricted
// to |z - zh| <= delta, in the order: partner pinned low, primary pinned
// low, primary pinned high, partner pinned high.  Each face is a box over
// the two paired variables.
std::vector<std::vector<Interval>> pair_box_boundary_faces(const Interval& range, double delta);

}  // namespace opacheck
