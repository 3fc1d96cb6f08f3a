/*
 * system.hpp
 * ----------
 * The discrete-time control system tuple (state set, initial set, secret
 * set, input set, dynamics, output map) plus the intruder precision delta,
 * loaded from a strict JSON document and validated on ingestion.
 */
#pragma once

#include <string>

#include "opacheck/semialg.hpp"

namespace opacheck {

class SpecError : public std::runtime_error {
public:
    explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

struct ControlSystem {
    std::string name;
    std::size_t state_dim = 0;
    std::size_t input_dim = 0;
    VariableSpace state_space;     // state variables only
    VariableSpace dynamics_space;  // state variables followed by input variables
    std::vector<Polynomial> dynamics;  // over dynamics_space, one per state
    std::vector<Polynomial> output;    // over state_space
    SemiAlgebraicSet state_set;        // X, over state_space
    SemiAlgebraicSet initial_set;      // X0
    SemiAlgebraicSet secret_set;       // Xs
    SemiAlgebraicSet input_set;        // U, over the input variables
    VariableSpace input_space;
    double delta = 0;

    // One simulation step x' = f(x, u).
    std::vector<double> step(const std::vector<double>& x, const std::vector<double>& u) const;
    std::vector<double> output_at(const std::vector<double>& x) const;
};

// Parse and validate a system spec document.  Rejects unknown fields,
// dimension mismatches, and delta < 0.  Inclusion of the initial and secret
// sets in the state set is spot-checked by sampling.
ControlSystem load_spec(const std::string& path);
ControlSystem parse_spec(const std::string& json_text, const std::string& origin = "<inline>");

}  // namespace opacheck
