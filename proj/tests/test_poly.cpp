#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "opacheck/poly.hpp"

using namespace opacheck;

namespace {

VariableSpace two_vars() { return VariableSpace::states({"x1", "x2"}); }

Polynomial random_poly(const VariableSpace& space, std::mt19937_64& rng, unsigned max_deg = 4) {
    std::uniform_int_distribution<int> nterms(0, 6);
    std::uniform_int_distribution<unsigned> expd(0, max_deg);
    std::uniform_real_distribution<double> coeff(-4.0, 4.0);
    Polynomial::TermMap terms;
    int k = nterms(rng);
    for (int t = 0; t < k; ++t) {
        Monomial m(space.size());
        unsigned budget = max_deg;
        for (std::size_t i = 0; i < space.size(); ++i) {
            unsigned e = expd(rng) % (budget + 1);
            m.exp[i] = e;
            budget -= e;
        }
        double c = coeff(rng);
        if (c != 0) terms[m] = c;
    }
    return Polynomial(space, std::move(terms));
}

}  // namespace

TEST_CASE("parse: direct term reading") {
    auto space = VariableSpace::states({"x1", "x2", "u1"});
    auto p = parse_polynomial("x1 + x2 + 0.5*u1", space);
    CHECK(p.term_count() == 3);
    CHECK(p.coefficient(Monomial({1, 0, 0})) == 1.0);
    CHECK(p.coefficient(Monomial({0, 1, 0})) == 1.0);
    CHECK(p.coefficient(Monomial({0, 0, 1})) == 0.5);
}

TEST_CASE("parse: zero normalization") {
    auto p = parse_polynomial("0*x1", two_vars());
    CHECK(p.is_zero());
    CHECK(p.term_count() == 0);
}

TEST_CASE("parse: leading terms of the vehicle certificate") {
    auto p = parse_polynomial("0.9227*x1^2+0.2348*x2^2", two_vars());
    CHECK(p.coefficient(Monomial({2, 0})) == doctest::Approx(0.9227));
    CHECK(p.coefficient(Monomial({0, 2})) == doctest::Approx(0.2348));
}

TEST_CASE("parse errors carry byte offsets and identifiers") {
    auto space = two_vars();
    CHECK_THROWS_AS(parse_polynomial("x1 + ", space), ParseError);
    CHECK_THROWS_WITH_AS(parse_polynomial("x1 + zz", space),
                         doctest::Contains("unknown variable 'zz'"), ParseError);
    try {
        parse_polynomial("x1 + zz", space);
    } catch (const ParseError& e) {
        CHECK(e.offset() == 5);
    }
}

TEST_CASE("arithmetic basics") {
    auto space = two_vars();
    auto x1 = Polynomial::variable(space, "x1");
    CHECK((x1 + (-x1)).is_zero());
    auto one = Polynomial::constant(space, 1.0);
    auto prod = (x1 + one) * (x1 - one);
    CHECK(prod == parse_polynomial("x1^2 - 1", space));
    auto space_u = VariableSpace::states({"u1"});
    auto half_u = parse_polynomial("0.5*u1", space_u);
    CHECK(2.0 * half_u == Polynomial::variable(space_u, "u1"));
    CHECK_THROWS_AS(x1 + Polynomial::variable(space_u, "u1"), PolyError);
}

TEST_CASE("evaluate") {
    auto space = VariableSpace::states({"x1"});
    auto p = parse_polynomial("x1^2 - 1", space);
    CHECK(p.evaluate({2.0}) == doctest::Approx(3.0));
    CHECK_THROWS_AS(p.evaluate({1.0, 2.0}), PolyError);
}

TEST_CASE("evaluate: published vehicle certificate at the origin") {
    auto space = VariableSpace::states({"x1", "x2", "xh1", "xh2"});
    auto b = parse_polynomial(
        "0.9227*x1^2+0.2348*x2^2+0.9227*xh1^2+0.2348*xh2^2"
        "+0.006*x1*x2-0.006*xh1*x2-0.006*x1*xh2-0.006*xh1*xh2"
        "-0.4696*x2*xh2-1.845*x1*xh1-0.0002*xh1+0.0728",
        space);
    CHECK(b.evaluate({0, 0, 0, 0}) == doctest::Approx(0.0728));
}

TEST_CASE("evaluate: vehicle position update") {
    auto space = VariableSpace::states({"x1", "x2", "u"});
    auto f1 = parse_polynomial("x1 + x2 + 0.5*u", space);
    CHECK(f1.evaluate({0.5, 0.0, 0.05}) == doctest::Approx(0.525));
}

TEST_CASE("substitute: square of a shift") {
    auto space = VariableSpace::states({"x1"});
    auto p = parse_polynomial("x1^2", space);
    auto image = parse_polynomial("x1 + 1", space);
    CHECK(p.substitute({image}) == parse_polynomial("x1^2 + 2*x1 + 1", space));
}

TEST_CASE("substitute: degree bookkeeping through dynamics") {
    // Degree-2 certificate composed with affine dynamics stays degree 2;
    // with bilinear dynamics the degree doubles.
    auto pair_space = VariableSpace::states({"x1", "x2"});
    auto target = VariableSpace::states({"x1", "x2", "u"});
    auto b = parse_polynomial("x1^2 + x1*x2 + x2^2", pair_space);
    auto f1 = parse_polynomial("x1 + x2 + 0.5*u", target);
    auto f2 = parse_polynomial("x2 + u", target);
    CHECK(b.substitute({f1, f2}).degree() == 2);

    auto bilinear1 = parse_polynomial("0.892*x1 - 0.0036*u*x1 + 0.05*x2", target);
    auto bilinear2 = parse_polynomial("0.05*x1 + 0.892*x2", target);
    auto deg6 = parse_polynomial("x1^6", pair_space) + parse_polynomial("x2^6", pair_space);
    CHECK(deg6.substitute({bilinear1, bilinear2}).degree() == 12);
}

TEST_CASE("substitute: missing image throws") {
    auto p = parse_polynomial("x1 + x2", two_vars());
    auto image = Polynomial::variable(two_vars(), "x1");
    CHECK_THROWS_AS(p.substitute({image}), PolyError);
}

TEST_CASE("monomial basis sizes and order") {
    auto space = two_vars();
    auto basis = monomial_basis(space, 1);
    REQUIRE(basis.size() == 3);
    CHECK(basis[0] == Monomial({0, 0}));
    CHECK(basis[1] == Monomial({1, 0}));
    CHECK(basis[2] == Monomial({0, 1}));

    CHECK(monomial_basis(6, 2).size() == 28);  // C(8,2)
    CHECK(monomial_basis(5, 0).size() == 1);
    CHECK(monomial_basis(4, 2).size() == 15);  // C(6,2)
}

TEST_CASE("ring axioms on random polynomials") {
    auto space = VariableSpace::states({"x1", "x2", "x3", "x4"});
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 1000; ++trial) {
        auto p = random_poly(space, rng);
        auto q = random_poly(space, rng);
        auto r = random_poly(space, rng);
        // Both sides of each law accumulate coefficient sums in different
        // orders, so compare term-wise up to relative rounding noise;
        // addition commutativity alone is bitwise exact.
        auto close = [](const Polynomial& lhs, const Polynomial& rhs) {
            double scale =
                std::max(1.0, std::max(lhs.max_abs_coefficient(), rhs.max_abs_coefficient()));
            return (lhs - rhs).max_abs_coefficient() <= 1e-12 * scale;
        };
        REQUIRE(p + q == q + p);
        REQUIRE(close((p + q) + r, p + (q + r)));
        REQUIRE(close(p * q, q * p));
        REQUIRE(close((p * q) * r, p * (q * r)));
        REQUIRE(close(p * (q + r), p * q + p * r));
    }
}

TEST_CASE("print/parse round-trip") {
    auto space = VariableSpace::states({"x1", "x2", "u1"});
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        auto p = random_poly(space, rng);
        auto printed = p.print();
        CHECK(parse_polynomial(printed, space) == p);
    }
}

TEST_CASE("substitution/evaluation commutation") {
    auto space = VariableSpace::states({"x1", "x2"});
    auto target = VariableSpace::states({"x1", "x2", "u"});
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> pt(-1.5, 1.5);
    for (int trial = 0; trial < 200; ++trial) {
        auto p = random_poly(space, rng, 3);
        std::vector<Polynomial> images = {random_poly(target, rng, 2), random_poly(target, rng, 2)};
        auto composed = p.substitute(images);
        for (int k = 0; k < 5; ++k) {
            std::vector<double> v = {pt(rng), pt(rng), pt(rng)};
            double direct = composed.evaluate(v);
            double via = p.evaluate({images[0].evaluate(v), images[1].evaluate(v)});
            REQUIRE(std::abs(direct - via) <= 1e-12 * (1.0 + std::abs(via)));
        }
    }
}

TEST_CASE("degree additivity for products") {
    auto space = VariableSpace::states({"x1", "x2", "x3"});
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 500; ++trial) {
        auto p = random_poly(space, rng);
        auto q = random_poly(space, rng);
        if (p.is_zero() || q.is_zero()) continue;
        auto prod = p * q;
        if (prod.is_zero()) continue;  // exact cancellation of the top term
        CHECK(prod.degree() == p.degree() + q.degree());
    }
}

TEST_CASE("lift into a larger space preserves evaluation") {
    auto small = VariableSpace::states({"x1", "x2"});
    auto big = VariableSpace::states({"x1", "xh1", "x2", "xh2"});
    auto p = parse_polynomial("x1^2 - 2*x2", small);
    auto lifted = p.lift(big);
    CHECK(lifted.evaluate({3, 0, 5, 0}) == doctest::Approx(p.evaluate({3, 5})));
}
