#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "opacheck/semialg.hpp"

using namespace opacheck;

namespace {
VariableSpace xy() { return VariableSpace::states({"x", "y"}); }
}

TEST_CASE("box expansion: two affine constraints per variable") {
    auto set = SemiAlgebraicSet::box(xy(), {{0, 10}, {0, 0.1}});
    auto gs = set.expanded_constraints();
    REQUIRE(gs.size() == 4);
    // (x - lo) >= 0, (hi - x) >= 0, then the same for y.
    CHECK(gs[0].evaluate({3, 0}) == doctest::Approx(3));
    CHECK(gs[1].evaluate({3, 0}) == doctest::Approx(7));
    CHECK(gs[2].evaluate({3, 0.04}) == doctest::Approx(0.04));
    CHECK(gs[3].evaluate({3, 0.04}) == doctest::Approx(0.06));
}

TEST_CASE("membership: boxes are closed") {
    auto set = SemiAlgebraicSet::box(xy(), {{0, 10}, {0, 0.1}});
    CHECK(set.membership({0, 0}));
    CHECK(set.membership({10, 0.1}));
    CHECK(set.membership({5, 0.05}));
    CHECK_FALSE(set.membership({10.0001, 0.05}));
    CHECK_FALSE(set.membership({5, -0.0001}));
}

TEST_CASE("inequality set membership is exact at the boundary") {
    auto g = parse_polynomial("1 - x^2 - y^2", xy());
    auto set = SemiAlgebraicSet::inequalities(xy(), {g});
    CHECK(set.membership({1, 0}));
    CHECK(set.membership({0.5, 0.5}));
    // (0.6, 0.8) rounds to just outside the circle in doubles; membership
    // is exact, with no hidden tolerance
    CHECK_FALSE(set.membership({0.6, 0.8}));
    CHECK_FALSE(set.membership({0.8, 0.8}));
}

TEST_CASE("with_constraint distributes over unions") {
    auto a = SemiAlgebraicSet::box(xy(), {{0, 1}, {0, 1}});
    auto b = SemiAlgebraicSet::box(xy(), {{2, 3}, {0, 1}});
    auto u = SemiAlgebraicSet::union_of({a, b});
    auto cut = u.with_constraint(parse_polynomial("y - 0.5", xy()));
    REQUIRE(cut.is_union());
    CHECK(cut.members().size() == 2);
    CHECK(cut.membership({0.5, 0.7}));
    CHECK(cut.membership({2.5, 0.7}));
    CHECK_FALSE(cut.membership({0.5, 0.3}));
    CHECK_FALSE(cut.membership({1.5, 0.7}));
}

TEST_CASE("bounding box of a union is the hull") {
    auto a = SemiAlgebraicSet::box(xy(), {{0, 1}, {0, 1}});
    auto b = SemiAlgebraicSet::box(xy(), {{2, 3}, {-1, 0.5}});
    auto u = SemiAlgebraicSet::union_of({a, b});
    auto box = u.bounding_box();
    REQUIRE(box.has_value());
    CHECK((*box)[0].lo == 0);
    CHECK((*box)[0].hi == 3);
    CHECK((*box)[1].lo == -1);
    CHECK((*box)[1].hi == 1);
}

TEST_CASE("corners of a box, degenerate dimensions collapse") {
    auto set = SemiAlgebraicSet::box(xy(), {{0, 1}, {0.5, 0.5}});
    auto corners = set.corners();
    REQUIRE(corners.size() == 2);
    for (const auto& c : corners) CHECK(c[1] == 0.5);
}

TEST_CASE("sampling: deterministic, inside the set, degenerate dims pinned") {
    auto set = SemiAlgebraicSet::box(xy(), {{0, 10}, {0, 0}});
    auto pts1 = sample_set(set, set.bounding_box(), 100, 42);
    auto pts2 = sample_set(set, set.bounding_box(), 100, 42);
    REQUIRE(pts1.size() == 100);
    CHECK(pts1 == pts2);
    for (const auto& p : pts1) {
        CHECK(set.membership(p));
        CHECK(p[1] == 0);
    }
    auto pts3 = sample_set(set, set.bounding_box(), 100, 43);
    CHECK(pts1 != pts3);
}

TEST_CASE("sampling a cut set rejects outside points") {
    auto set = SemiAlgebraicSet::box(xy(), {{-1, 1}, {-1, 1}})
                   .with_constraint(parse_polynomial("x - y", xy()));
    for (const auto& p : sample_set(set, set.bounding_box(), 200, 7)) CHECK(p[0] >= p[1]);
}

TEST_CASE("unsampleable set reports an error") {
    // Empty slice: x >= 2 inside a unit box.
    auto set = SemiAlgebraicSet::box(xy(), {{0, 1}, {0, 1}})
                   .with_constraint(parse_polynomial("x - 2", xy()));
    CHECK_THROWS_AS(sample_set(set, set.bounding_box(), 10, 1), SetError);
}

TEST_CASE("pair boundary faces: order, extents, and the delta cap") {
    auto faces = pair_box_boundary_faces({0, 50}, 1.0);
    REQUIRE(faces.size() == 4);
    // partner pinned low: primary in [0,1], partner = 0.
    CHECK(faces[0][0].lo == 0);
    CHECK(faces[0][0].hi == 1);
    CHECK(faces[0][1].lo == 0);
    CHECK(faces[0][1].hi == 0);
    // primary pinned low: primary = 0, partner in [0,1].
    CHECK(faces[1][0].degenerate());
    CHECK(faces[1][1].hi == 1);
    // primary pinned high: primary = 50, partner in [49,50].
    CHECK(faces[2][0].lo == 50);
    CHECK(faces[2][0].degenerate());
    CHECK(faces[2][1].lo == 49);
    CHECK(faces[2][1].hi == 50);
    // partner pinned high: primary in [49,50], partner = 50.
    CHECK(faces[3][0].lo == 49);
    CHECK(faces[3][1].lo == 50);
    CHECK(faces[3][1].degenerate());
}
