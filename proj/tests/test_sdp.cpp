#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <random>

#include "opacheck/sdp.hpp"
#include "opacheck/sos.hpp"

using namespace opacheck;

namespace {

// SOS membership test for a fixed polynomial: a single constraint with no
// unknowns and no multipliers, compiled to a Gram feasibility problem.
CompiledSdp sos_problem(const Polynomial& p) {
    SosProgram prog;
    prog.certificate_space = p.space();
    SosConstraint c;
    c.label = "candidate";
    c.space = p.space();
    for (const auto& [m, coef] : p.terms()) c.expr[m].constant = coef;
    prog.constraints.push_back(std::move(c));
    return compile_to_sdp(prog);
}

Polynomial random_poly(const VariableSpace& space, unsigned degree, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    Polynomial::TermMap terms;
    for (const auto& m : monomial_basis(space, degree)) {
        double c = coef(rng);
        if (std::abs(c) > 0.4) terms[m] = c;
    }
    if (terms.empty()) terms[Monomial(space.size())] = 1.0;
    return Polynomial(space, std::move(terms));
}

}  // namespace

TEST_CASE("(x+1)^2 is SOS; the Gram matrix is recovered") {
    auto space = VariableSpace::states({"x"});
    auto compiled = sos_problem(parse_polynomial("x^2 + 2*x + 1", space));
    REQUIRE(compiled.problem.block_dims == std::vector<int>{2});
    auto sol = solve_feasibility(compiled.problem);
    REQUIRE(sol.status == SolveStatus::Feasible);
    // The Gram over [1, x] is uniquely [[1,1],[1,1]].
    const auto& Q = sol.blocks[0];
    CHECK(Q(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(Q(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(Q(1, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("x^2 - 1 is not SOS") {
    auto space = VariableSpace::states({"x"});
    auto compiled = sos_problem(parse_polynomial("x^2 - 1", space));
    auto sol = solve_feasibility(compiled.problem);
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("the Motzkin polynomial is not SOS, with a dual witness") {
    auto space = VariableSpace::states({"x", "y"});
    auto motzkin = parse_polynomial("x^4*y^2 + x^2*y^4 - 3*x^2*y^2 + 1", space);
    CHECK(motzkin.evaluate({1.0, 1.0}) == doctest::Approx(0.0));  // nonneg, touches zero
    auto compiled = sos_problem(motzkin);
    auto sol = solve_feasibility(compiled.problem);
    REQUIRE(sol.status == SolveStatus::Infeasible);
    REQUIRE(sol.dual_ray.size() == compiled.problem.num_rows());
    CHECK(sol.ray_objective > 0);
}

TEST_CASE("zero polynomial is trivially SOS") {
    auto space = VariableSpace::states({"x"});
    auto compiled = sos_problem(Polynomial::zero(space));
    auto sol = solve_feasibility(compiled.problem);
    CHECK(sol.status == SolveStatus::Feasible);
}

TEST_CASE("random constructed-feasible instances are classified feasible") {
    auto space = VariableSpace::states({"x", "y"});
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        // Sums of squares of random quadratics are SOS by construction.
        auto a = random_poly(space, 2, rng);
        auto b = random_poly(space, 2, rng);
        auto c = random_poly(space, 2, rng);
        auto p = a * a + b * b + c * c;
        auto sol = solve_feasibility(sos_problem(p).problem);
        REQUIRE(sol.status == SolveStatus::Feasible);
    }
}

TEST_CASE("random constructed-infeasible instances are classified infeasible") {
    auto space = VariableSpace::states({"x", "y"});
    std::mt19937_64 rng(4048);
    std::uniform_real_distribution<double> pt(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        auto a = random_poly(space, 2, rng);
        auto b = random_poly(space, 2, rng);
        auto p = a * a + b * b;
        // Shift below the value at a random point: negative there, so not SOS.
        std::vector<double> at = {pt(rng), pt(rng)};
        auto shifted = p - Polynomial::constant(space, p.evaluate(at) + 1.0);
        auto sol = solve_feasibility(sos_problem(shifted).problem);
        REQUIRE(sol.status == SolveStatus::Infeasible);
    }
}

TEST_CASE("free scalars: a tunable constant makes x^2 + w SOS") {
    // x^2 + w with free scalar w: feasibility must pick w >= 0.
    auto space = VariableSpace::states({"x"});
    SosProgram prog;
    prog.certificate_space = space;
    SosConstraint c;
    c.space = space;
    c.label = "shifted";
    c.expr[Monomial(std::vector<unsigned>{2})].constant = 1.0;
    c.expr[Monomial(std::vector<unsigned>{0})].coeffs[0] = 1.0;
    prog.num_scalars = 1;
    prog.constraints.push_back(std::move(c));
    auto compiled = compile_to_sdp(prog);
    auto sol = solve_feasibility(compiled.problem);
    REQUIRE(sol.status == SolveStatus::Feasible);
    CHECK(sol.free_values.size() == 1);
    CHECK(sol.free_values[0] >= -1e-7);
}

TEST_CASE("budget enforcement") {
    SdpProblem p;
    p.block_dims = {2000};
    p.rhs = {1.0};
    p.entries.push_back({0, 0, 0, 0, 1.0});
    SolverConfig config;
    config.budget = 1200;
    CHECK_THROWS_AS(solve_feasibility(p, config), SdpError);
}

TEST_CASE("trivially inconsistent rows are reported infeasible immediately") {
    SdpProblem p;
    p.block_dims = {1};
    p.rhs = {1.0};  // empty row: 0 = 1
    auto sol = solve_feasibility(p);
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("problem dump round-trips through the documented text format") {
    auto space = VariableSpace::states({"x"});
    auto compiled = sos_problem(parse_polynomial("x^2 + 2*x + 1", space));
    const std::string path = "dump_test.sdp";
    compiled.problem.dump(path);
    std::ifstream f(path);
    REQUIRE(f.good());
    std::string first;
    std::getline(f, first);
    CHECK(first.rfind("sdp", 0) == 0);
}
