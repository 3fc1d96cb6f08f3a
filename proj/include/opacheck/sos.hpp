/*
 * sos.hpp
 * -------
 * Sum-of-squares feasibility programs for the two certificate constructions
 * over the paired system: the safety form (certificate B, bounds eps_lo <
 * eps_hi, a synthesized partner-input policy) and the reachability form
 * (certificate V, positive slack, optionally a fixed input policy).
 *
 * Every constraint expression is affine in the unknown coefficients: the
 * certificate composes only with the *known* dynamics, multipliers multiply
 * *known* region constraints, and policy components enter through a linear
 * correction term.  Compilation to a semidefinite feasibility problem is
 * plain Gram-matrix coefficient matching, one PSD block per SOS constraint
 * and per SOS multiplier.
 */
#pragma once

#include <map>
#include <optional>

#include "opacheck/augment.hpp"
#include "opacheck/sdp.hpp"

namespace opacheck {

class SosError : public std::runtime_error {
public:
    explicit SosError(const std::string& what) : std::runtime_error(what) {}
};

enum class TemplateRole { Certificate, PolicyComponent, SosMultiplier };

// A polynomial with unknown coefficients: one free scalar per basis
// monomial.  Used for the certificate and for policy components; SOS
// multipliers are instead realized directly as Gram blocks.
struct ScalarTemplate {
    std::string label;
    TemplateRole role = TemplateRole::Certificate;
    VariableSpace space;
    std::vector<Monomial> basis;
    int first_unknown = 0;

    Polynomial materialize(const Eigen::VectorXd& values) const;
};

// Affine expression in the scalar unknowns.
struct LinExpr {
    std::map<int, double> coeffs;
    double constant = 0;
};

// One SOS constraint: expr + sum_k weight_k * lambda_k must be SOS, where
// expr collects the known terms and the scalar-unknown templates, and each
// lambda_k is an SOS multiplier with its own Gram block.  Weights are the
// (negated, max-abs-normalized) region constraints.
struct SosMultiplierSlot {
    std::string label;
    Polynomial weight;
    std::optional<unsigned> degree;  // filled during compilation when unset
};

struct SosConstraint {
    std::string label;
    VariableSpace space;
    std::map<Monomial, LinExpr, GradedLexLess> expr;
    std::vector<SosMultiplierSlot> multipliers;
};

struct SosProgram {
    int num_scalars = 0;
    std::vector<ScalarTemplate> templates;
    std::vector<SosConstraint> constraints;
    int certificate_template = -1;            // -1 when the certificate is fixed
    std::vector<int> policy_templates;        // empty in fixed-policy mode or m=0
    VariableSpace certificate_space;
    std::optional<Polynomial> fixed_certificate;
    std::vector<Polynomial> fixed_policy;     // echoed through extraction
    std::optional<unsigned> multiplier_degree;  // override for every multiplier
};

struct ProgramDegrees {
    unsigned certificate = 2;
    unsigned policy = 1;
    std::optional<unsigned> multiplier;  // default: per-weight, see below
};

struct SafetyProgramOptions {
    double eps_lo = 1;
    double eps_hi = 1.001;
    std::optional<Polynomial> fixed_certificate;       // over the pair-state space
    std::optional<std::vector<Polynomial>> fixed_policy;  // m components, no partner inputs
};

struct ReachProgramOptions {
    double slack = 0.01;
    std::optional<Polynomial> fixed_certificate;
    // Fixed-policy mode: candidate inputs for the observed trajectory as
    // polynomials over (x, xh, uh); the u variables are substituted away
    // and the policy correction term is dropped.
    std::optional<std::vector<Polynomial>> fixed_policy;
};

// Safety construction: the certificate is at most eps_lo on every branch of
// the initial region, at least eps_hi on the unsafe region, and
// non-increasing one step ahead for some partner input chosen by the
// synthesized policy.  Requires eps_hi > eps_lo.
SosProgram build_safety_program(const AugmentedSystem& aug, const RegionBundle& regions,
                                const ProgramDegrees& degrees, const SafetyProgramOptions& options);

// Reachability construction: the certificate is nonpositive on the initial
// region, at least `slack` on every boundary face, and strictly decreasing
// (by `slack`) on the core region for every partner input.  Requires the
// bundle to carry a boundary decomposition and slack > 0.
SosProgram build_reach_program(const AugmentedSystem& aug, const RegionBundle& regions,
                                const ProgramDegrees& degrees, const ReachProgramOptions& options);

// Gram compilation artifacts: block indices and bases, needed to read the
// solution back.
struct CompiledSdp {
    SdpProblem problem;
    std::vector<int> constraint_block;               // per constraint, main Gram
    std::vector<std::vector<int>> multiplier_block;  // per constraint, per multiplier
    std::vector<std::vector<Monomial>> constraint_basis;
    std::vector<std::vector<std::vector<Monomial>>> multiplier_basis;
    std::vector<unsigned> constraint_degree;
};

// One PSD block per constraint and per multiplier; one equality row per
// monomial of degree <= the constraint degree.  Unset multiplier degrees
// default to the smallest even degree whose product with the weight reaches
// the degree of the non-multiplier terms; odd constraint degrees are raised
// to even.  Throws SosError on structural violations.
CompiledSdp compile_to_sdp(const SosProgram& prog);

struct ExtractedCertificate {
    Polynomial certificate;
    std::vector<Polynomial> policy;
    std::vector<std::vector<Polynomial>> multipliers;  // per constraint, normalized weights
    double max_residual = 0;  // worst coefficient-matching error after re-substitution
    double min_gram_eig = 0;  // smallest eigenvalue over all Gram blocks
};

// Materialize the solved certificate, policy, and multipliers, and verify
// that re-substituting them reproduces each SOS constraint from its Gram
// block.  Requires a feasible solution.
ExtractedCertificate extract_certificate(const SosProgram& prog, const CompiledSdp& compiled,
                                         const SdpSolution& solution);

}  // namespace opacheck
