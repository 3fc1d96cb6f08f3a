#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "opacheck/sim.hpp"

using namespace opacheck;

namespace {
const std::string kSpecsDir = SPECS_DIR;

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::stringstream buf;
    buf << f.rdbuf();
    return buf.str();
}
}  // namespace

TEST_CASE("stored trajectories re-evaluate exactly") {
    auto aug = build_product(load_spec(kSpecsDir + "/vehicle.json"));
    auto rand_u = random_input_strategy(aug.base.input_set);
    auto traj = simulate_pair(aug, {0.5, 0.0}, {4.0, 0.05}, rand_u, rand_u, 25, 7);
    REQUIRE(traj.horizon() == 25);
    REQUIRE(traj.x.size() == 26);
    const auto& f = aug.base.dynamics;
    for (std::size_t t = 0; t < traj.horizon(); ++t) {
        std::vector<double> args = traj.x[t];
        args.insert(args.end(), traj.u[t].begin(), traj.u[t].end());
        for (std::size_t i = 0; i < f.size(); ++i)
            CHECK(traj.x[t + 1][i] == f[i].evaluate(args));
        std::vector<double> hargs = traj.xh[t];
        hargs.insert(hargs.end(), traj.uh[t].begin(), traj.uh[t].end());
        for (std::size_t i = 0; i < f.size(); ++i)
            CHECK(traj.xh[t + 1][i] == f[i].evaluate(hargs));
    }
}

TEST_CASE("identical pair under shared inputs keeps zero gap") {
    auto aug = build_product(load_spec(kSpecsDir + "/room.json"));
    auto u = constant_input_strategy({0.7, 0.3});
    auto traj = simulate_pair(aug, {25.0, 30.0}, {25.0, 30.0}, u, u, 40, 1);
    for (double g : traj.gap) CHECK(g == 0.0);
}

TEST_CASE("unheated room trajectories settle at the fixed point") {
    // T+ = 0.892 T + 0.05 T_other - 0.008 has the symmetric fixed point
    // T* = -0.008 / (1 - 0.942) = -0.13793...
    auto aug = build_product(load_spec(kSpecsDir + "/room.json"));
    auto off = constant_input_strategy({0.0, 0.0});
    auto traj = simulate_pair(aug, {30.0, 20.0}, {22.0, 21.0}, off, off, 400, 1);
    const double fp = -0.008 / (1.0 - 0.942);
    CHECK(traj.x[400][0] == doctest::Approx(fp).epsilon(1e-6));
    CHECK(traj.x[400][1] == doctest::Approx(fp).epsilon(1e-6));
    CHECK(traj.xh[400][0] == doctest::Approx(fp).epsilon(1e-6));
    CHECK(!traj.boundary_exits.empty());  // cooling below 0 leaves the state box
}

TEST_CASE("simulation is deterministic in the seed") {
    auto aug = build_product(load_spec(kSpecsDir + "/vehicle.json"));
    auto rand_u = random_input_strategy(aug.base.input_set);
    auto a = simulate_pair(aug, {2.0, 0.05}, {8.0, 0.0}, rand_u, rand_u, 30, 42);
    auto b = simulate_pair(aug, {2.0, 0.05}, {8.0, 0.0}, rand_u, rand_u, 30, 42);
    CHECK(a.u == b.u);
    CHECK(a.x == b.x);
    auto c = simulate_pair(aug, {2.0, 0.05}, {8.0, 0.0}, rand_u, rand_u, 30, 43);
    CHECK(a.u != c.u);
}

TEST_CASE("CSV export shape and byte determinism") {
    auto aug = build_product(load_spec(kSpecsDir + "/vehicle.json"));
    auto rand_u = random_input_strategy(aug.base.input_set);
    std::vector<Trajectory> trajs = {
        simulate_pair(aug, {0.5, 0.0}, {4.0, 0.0}, rand_u, rand_u, 3, 1),
        simulate_pair(aug, {1.5, 0.1}, {9.0, 0.05}, rand_u, rand_u, 3, 2)};
    export_trajectories(trajs, aug, "trajs_a.csv");
    export_trajectories(trajs, aug, "trajs_b.csv");
    auto text = slurp("trajs_a.csv");
    CHECK(text == slurp("trajs_b.csv"));
    CHECK(text.rfind("traj,t,x1,x2,xh1,xh2,u,uh,gap\n", 0) == 0);
    CHECK(text.find("\r") == std::string::npos);
    // header + 2 trajectories x 4 rows each (horizon 3 plus the final state)
    std::size_t lines = 0;
    for (char ch : text)
        if (ch == '\n') ++lines;
    CHECK(lines == 9);
    // final row of a trajectory has empty input cells
    CHECK(text.find(",,,") != std::string::npos);
}

TEST_CASE("greedy adversary reaches the distinguishing region no more often than random") {
    auto aug = build_product(load_spec(kSpecsDir + "/room.json"));
    auto regions = build_reach_regions(aug, std::nullopt);
    std::vector<std::string> names = {"T1", "T2", "Th1", "Th2", "vh1", "vh2"};
    std::vector<VarRole> roles = {VarRole::State, VarRole::State, VarRole::PartnerState,
                                  VarRole::PartnerState, VarRole::PartnerInput,
                                  VarRole::PartnerInput};
    VariableSpace policy_space(names, roles);
    std::vector<Polynomial> frozen = {Polynomial::zero(policy_space),
                                      Polynomial::zero(policy_space)};
    auto random = monte_carlo_reach(aug, regions, frozen, AdversaryKind::Random, 20, 60, 17);
    auto greedy = monte_carlo_reach(aug, regions, frozen, AdversaryKind::Greedy, 20, 60, 17);
    CHECK(random.trials == 20);
    CHECK(greedy.trials == 20);
    // the greedy partner actively minimizes the gap, so it escapes the
    // distinguishing region at least as well as blind draws
    CHECK(greedy.reached <= random.reached);
}

TEST_CASE("reach summaries are reproducible for a fixed seed") {
    auto aug = build_product(load_spec(kSpecsDir + "/room.json"));
    auto regions = build_reach_regions(aug, std::nullopt);
    std::vector<std::string> names = {"T1", "T2", "Th1", "Th2", "vh1", "vh2"};
    std::vector<VarRole> roles = {VarRole::State, VarRole::State, VarRole::PartnerState,
                                  VarRole::PartnerState, VarRole::PartnerInput,
                                  VarRole::PartnerInput};
    VariableSpace policy_space(names, roles);
    std::vector<Polynomial> frozen = {Polynomial::zero(policy_space),
                                      Polynomial::zero(policy_space)};
    auto a = monte_carlo_reach(aug, regions, frozen, AdversaryKind::Random, 10, 40, 3);
    auto b = monte_carlo_reach(aug, regions, frozen, AdversaryKind::Random, 10, 40, 3);
    CHECK(a.reached == b.reached);
    CHECK(a.reach_times == b.reach_times);
    CHECK(a.timeouts == b.timeouts);
}

TEST_CASE("monte-carlo safety counts unsafe entries for a bad policy") {
    auto aug = build_product(load_spec(kSpecsDir + "/vehicle.json"));
    auto regions = build_safety_regions(aug, 0.01);
    Certificate cert;
    cert.kind = CertificateKind::Safety;
    // partner ignores the observed input and brakes flat-out, so the pair
    // drifts apart and the output gap grows past delta
    cert.policy = {parse_polynomial("-0.05", aug.full_space)};
    auto summary = monte_carlo_safety(aug, regions, cert, 30, 100, 9);
    CHECK(summary.trials == 30);
    CHECK(summary.worst_gap > 0.0);
}
