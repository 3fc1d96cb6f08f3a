/*
 * certificate.hpp
 * ---------------
 * Candidate certificates (synthesized or user-supplied), their JSON
 * exchange format, and independent validation: dense stratified sampling
 * of the level-set and decrease conditions, SOS re-checking with the
 * certificate held fixed, and policy range checks against the input set.
 */
#pragma once

#include "opacheck/sos.hpp"

namespace opacheck {

enum class CertificateKind { Safety, Reach };
enum class Provenance { Synthesized, UserSupplied };

struct Certificate {
    CertificateKind kind = CertificateKind::Safety;
    Provenance provenance = Provenance::Synthesized;
    Polynomial certificate;          // over the pair-state space
    std::vector<Polynomial> policy;  // safety: uh = p(x, xh, u); reach: u = p(x, xh, uh)
    double eps_lo = 0;               // safety levels, eps_hi > eps_lo
    double eps_hi = 0;
    double slack = 0;                // reach strictness margin
};

// Exchange format: {kind, variables, polynomial, policy, constants} with
// every polynomial as a graded-lex-ordered list of exponent/coefficient
// pairs.  Writing is deterministic.
void save_certificate(const Certificate& cert, const std::string& path);
Certificate load_certificate(const std::string& path);

struct ConditionReport {
    std::string name;
    std::size_t samples = 0;
    std::size_t violations = 0;
    double max_excess = -std::numeric_limits<double>::infinity();  // > 0 means violated
    std::vector<std::vector<double>> witnesses;  // at most 10, re-evaluable points
};

struct ValidationReport {
    std::vector<ConditionReport> conditions;
    bool violated = false;
};

// Sampled check of the three safety conditions: certificate at most eps_lo
// on the initial region, at least eps_hi on the unsafe region, and
// non-increasing along one step with the partner input taken from the
// policy.  Non-strict conditions tolerate 1e-9 of float noise.
ValidationReport validate_safety_certificate(const Certificate& cert, const AugmentedSystem& aug,
                                             const RegionBundle& regions, std::size_t samples,
                                             std::uint64_t seed);

// Sampled check of the three reachability conditions: nonpositive on the
// initial region, at least `slack` on every boundary face, and decreasing
// by `slack` per step on the core region for sampled partner inputs.
ValidationReport validate_reach_certificate(const Certificate& cert, const AugmentedSystem& aug,
                                            const RegionBundle& regions, std::size_t samples,
                                            std::uint64_t seed);

struct RecheckResult {
    bool certified = false;
    SolveStatus status = SolveStatus::Unknown;
    double max_residual = 0;
    double min_gram_eig = 0;
    int iterations = 0;
    std::string message;
};

// Re-solve the SOS program with the certificate (and policy) held fixed;
// only the multipliers remain unknown.  A feasible solve is a sound proof
// for this specific candidate; an infeasible or stalled solve is merely
// inconclusive.
RecheckResult recheck_fixed_certificate(const Certificate& cert, const AugmentedSystem& aug,
                                        const RegionBundle& regions, const ProgramDegrees& degrees);

struct PolicyBoundsReport {
    std::size_t samples = 0;
    std::size_t out_of_bounds = 0;
    double fraction = 0;
    std::vector<std::vector<double>> witnesses;  // argument points, at most 10
};

// Fraction of sampled policy arguments whose policy output leaves the
// input set; the certificate conditions themselves never check this.
PolicyBoundsReport check_policy_bounds(const Certificate& cert, const AugmentedSystem& aug,
                                       std::size_t samples, std::uint64_t seed);

}  // namespace opacheck
