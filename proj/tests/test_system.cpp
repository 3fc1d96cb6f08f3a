#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "opacheck/system.hpp"

using namespace opacheck;

namespace {
const std::string kSpecsDir = SPECS_DIR;
}

TEST_CASE("vehicle spec loads and steps correctly") {
    auto sys = load_spec(kSpecsDir + "/vehicle.json");
    CHECK(sys.name == "vehicle");
    CHECK(sys.state_dim == 2);
    CHECK(sys.input_dim == 1);
    CHECK(sys.delta == 1.0);

    auto next = sys.step({0.5, 0.0}, {0.05});
    CHECK(next[0] == doctest::Approx(0.525));
    CHECK(next[1] == doctest::Approx(0.05));

    CHECK(sys.output_at({3.25, 0.07})[0] == doctest::Approx(3.25));
}

TEST_CASE("room spec loads and steps correctly") {
    auto sys = load_spec(kSpecsDir + "/room.json");
    CHECK(sys.state_dim == 2);
    CHECK(sys.input_dim == 2);

    auto next = sys.step({21.5, 21.0}, {0.0, 0.0});
    CHECK(next[0] == doctest::Approx(20.220).epsilon(1e-9));
    CHECK(next[1] == doctest::Approx(19.799).epsilon(1e-9));
    CHECK(sys.output_at({21.5, 21.0})[0] == doctest::Approx(21.0));
}

TEST_CASE("unknown top-level fields are rejected") {
    const std::string text = R"({
      "name": "t", "state_vars": ["x"], "input_vars": [],
      "dynamics": ["x"], "output": ["x"],
      "state_set": {"box": [[0,1]]}, "initial_set": {"box": [[0,1]]},
      "secret_set": {"box": [[0,1]]}, "input_set": {"box": []},
      "delta": 0, "extra": 1
    })";
    CHECK_THROWS_WITH_AS(parse_spec(text), doctest::Contains("unknown field 'extra'"),
                         SpecError);
}

TEST_CASE("missing fields are rejected") {
    CHECK_THROWS_AS(parse_spec(R"({"name": "t"})"), SpecError);
}

TEST_CASE("dimension mismatches are rejected") {
    const std::string text = R"({
      "name": "t", "state_vars": ["x", "y"], "input_vars": [],
      "dynamics": ["x"], "output": ["x"],
      "state_set": {"box": [[0,1],[0,1]]}, "initial_set": {"box": [[0,1],[0,1]]},
      "secret_set": {"box": [[0,1],[0,1]]}, "input_set": {"box": []},
      "delta": 0
    })";
    CHECK_THROWS_AS(parse_spec(text), SpecError);
}

TEST_CASE("negative delta is rejected") {
    const std::string text = R"({
      "name": "t", "state_vars": ["x"], "input_vars": [],
      "dynamics": ["x"], "output": ["x"],
      "state_set": {"box": [[0,1]]}, "initial_set": {"box": [[0,1]]},
      "secret_set": {"box": [[0,1]]}, "input_set": {"box": []},
      "delta": -1
    })";
    CHECK_THROWS_AS(parse_spec(text), SpecError);
}

TEST_CASE("dynamics referencing unknown variables are rejected") {
    const std::string text = R"({
      "name": "t", "state_vars": ["x"], "input_vars": [],
      "dynamics": ["x + z"], "output": ["x"],
      "state_set": {"box": [[0,1]]}, "initial_set": {"box": [[0,1]]},
      "secret_set": {"box": [[0,1]]}, "input_set": {"box": []},
      "delta": 0
    })";
    CHECK_THROWS_AS(parse_spec(text), SpecError);
}

TEST_CASE("initial set escaping the state set is caught by sampling") {
    const std::string text = R"({
      "name": "t", "state_vars": ["x"], "input_vars": [],
      "dynamics": ["x"], "output": ["x"],
      "state_set": {"box": [[0,1]]}, "initial_set": {"box": [[5,6]]},
      "secret_set": {"box": [[0,1]]}, "input_set": {"box": []},
      "delta": 0
    })";
    CHECK_THROWS_WITH_AS(parse_spec(text), doctest::Contains("outside state_set"), SpecError);
}

TEST_CASE("union sets parse and answer membership") {
    const std::string text = R"({
      "name": "t", "state_vars": ["x"], "input_vars": [],
      "dynamics": ["x"], "output": ["x"],
      "state_set": {"box": [[0,10]]},
      "initial_set": {"union": [{"box": [[0,1]]}, {"box": [[3,4]]}]},
      "secret_set": {"inequalities": ["x - 1"]},
      "input_set": {"box": []},
      "delta": 0.5
    })";
    auto sys = parse_spec(text);
    CHECK(sys.initial_set.membership({0.5}));
    CHECK(sys.initial_set.membership({3.5}));
    CHECK_FALSE(sys.initial_set.membership({2.0}));
    CHECK(sys.secret_set.membership({2.0}));
    CHECK_FALSE(sys.secret_set.membership({0.5}));
}
