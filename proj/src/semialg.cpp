#include "opacheck/semialg.hpp"

#include <algorithm>
#include <cmath>

namespace opacheck {

SemiAlgebraicSet SemiAlgebraicSet::box(const VariableSpace& space, std::vector<Interval> bounds) {
    if (bounds.size() != space.size())
        throw SetError("box: interval count does not match variable count");
    for (const auto& iv : bounds)
        if (iv.lo > iv.hi) throw SetError("box: empty interval (lo > hi)");
    SemiAlgebraicSet s(space);
    s.box_ = std::move(bounds);
    return s;
}

SemiAlgebraicSet SemiAlgebraicSet::inequalities(const VariableSpace& space,
                                                std::vector<Polynomial> constraints) {
    SemiAlgebraicSet s(space);
    for (const auto& g : constraints)
        if (g.space() != space) throw SetError("inequalities: constraint over wrong space");
    s.constraints_ = std::move(constraints);
    return s;
}

SemiAlgebraicSet SemiAlgebraicSet::union_of(std::vector<SemiAlgebraicSet> members) {
    if (members.empty()) throw SetError("union: no members");
    SemiAlgebraicSet s(members.front().space());
    for (const auto& m : members)
        if (m.space() != s.space_) throw SetError("union: members over different spaces");
    s.members_ = std::move(members);
    return s;
}

SemiAlgebraicSet SemiAlgebraicSet::with_constraint(const Polynomial& g) const {
    SemiAlgebraicSet s = *this;
    if (is_union()) {
        for (auto& m : s.members_) m = m.with_constraint(g);
    } else {
        s.constraints_.push_back(g.space() == space_ ? g : g.lift(space_));
    }
    return s;
}

std::vector<Polynomial> SemiAlgebraicSet::expanded_constraints() const {
    if (is_union()) throw SetError("expanded_constraints: set is a union");
    std::vector<Polynomial> out;
    if (box_) {
        for (std::size_t i = 0; i < box_->size(); ++i) {
            Polynomial zi = Polynomial::variable(space_, i);
            out.push_back(zi - Polynomial::constant(space_, (*box_)[i].lo));
            out.push_back(Polynomial::constant(space_, (*box_)[i].hi) - zi);
        }
    }
    for (const auto& g : constraints_) out.push_back(g);
    return out;
}

bool SemiAlgebraicSet::membership(const std::vector<double>& point) const {
    if (point.size() != space_.size()) throw SetError("membership: dimension mismatch");
    if (is_union()) {
        for (const auto& m : members_)
            if (m.membership(point)) return true;
        return false;
    }
    if (box_) {
        for (std::size_t i = 0; i < box_->size(); ++i)
            if (point[i] < (*box_)[i].lo || point[i] > (*box_)[i].hi) return false;
    }
    for (const auto& g : constraints_)
        if (g.evaluate(point) < 0) return false;
    return true;
}

std::optional<std::vector<Interval>> SemiAlgebraicSet::bounding_box() const {
    if (is_union()) {
        std::optional<std::vector<Interval>> hull;
        for (const auto& m : members_) {
            auto b = m.bounding_box();
            if (!b) return std::nullopt;
            if (!hull) {
                hull = b;
            } else {
                for (std::size_t i = 0; i < hull->size(); ++i) {
                    (*hull)[i].lo = std::min((*hull)[i].lo, (*b)[i].lo);
                    (*hull)[i].hi = std::max((*hull)[i].hi, (*b)[i].hi);
                }
            }
        }
        return hull;
    }
    return box_;
}

std::vector<std::vector<double>> SemiAlgebraicSet::corners(std::size_t cap) const {
    std::vector<std::vector<double>> out;
    if (is_union()) {
        for (const auto& m : members_) {
            auto c = m.corners(cap);
            out.insert(out.end(), c.begin(), c.end());
        }
        return out;
    }
    if (!box_) return out;
    // Degenerate dimensions contribute a single value.
    std::vector<std::size_t> free_dims;
    for (std::size_t i = 0; i < box_->size(); ++i)
        if (!(*box_)[i].degenerate()) free_dims.push_back(i);
    if (free_dims.size() > 12 || (std::size_t{1} << free_dims.size()) > cap) return out;
    std::size_t n = std::size_t{1} << free_dims.size();
    for (std::size_t mask = 0; mask < n; ++mask) {
        std::vector<double> p(box_->size());
        for (std::size_t i = 0; i < box_->size(); ++i) p[i] = (*box_)[i].lo;
        for (std::size_t k = 0; k < free_dims.size(); ++k)
            if (mask & (std::size_t{1} << k)) p[free_dims[k]] = (*box_)[free_dims[k]].hi;
        if (membership(p)) out.push_back(std::move(p));
    }
    return out;
}

std::vector<std::vector<double>> sample_set(const SemiAlgebraicSet& set,
                                            const std::optional<std::vector<Interval>>& bounding_box,
                                            std::size_t count, std::uint64_t seed) {
    auto bb = bounding_box ? bounding_box : set.bounding_box();
    if (!bb) throw SetError("sample_set: no bounding box available");
    if (bb->size() != set.space().size())
        throw SetError("sample_set: bounding box dimension mismatch");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<double>> out;
    out.reserve(count);
    std::size_t attempts = 0;
    const std::size_t check_after = 20000;
    while (out.size() < count) {
        ++attempts;
        std::vector<double> p(bb->size());
        for (std::size_t i = 0; i < bb->size(); ++i) {
            const auto& iv = (*bb)[i];
            p[i] = iv.degenerate() ? iv.lo : iv.lo + unit(rng) * iv.width();
        }
        if (set.membership(p)) out.push_back(std::move(p));
        if (attempts >= check_after &&
            static_cast<double>(out.size()) / static_cast<double>(attempts) < 1e-4)
            throw SetError("sample_set: acceptance rate below 1e-4 after " +
                           std::to_string(attempts) + " attempts (" +
                           std::to_string(out.size()) + " accepted)");
    }
    return out;
}

std::vector<std::vector<Interval>> pair_box_boundary_faces(const Interval& range, double delta) {
    if (delta < 0) throw SetError("boundary faces: negative delta");
    const double lo = range.lo, hi = range.hi;
    const double lo_cap = std::min(lo + delta, hi);
    const double hi_cap = std::max(hi - delta, lo);
    // Order matches the construction: primary spans near lo with partner
    // pinned, then partner spans near lo with primary pinned, then the two
    // mirrored faces at hi.
    return {
        {{lo, lo_cap}, {lo, lo}},  // partner pinned at lo
        {{lo, lo}, {lo, lo_cap}},  // primary pinned at lo
        {{hi, hi}, {hi_cap, hi}},  // primary pinned at hi
        {{hi_cap, hi}, {hi, hi}},  // partner pinned at hi
    };
}

}  // namespace opacheck
