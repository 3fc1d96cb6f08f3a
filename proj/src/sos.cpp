#include "opacheck/sos.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace opacheck {

namespace {

unsigned round_up_even(unsigned d) { return d + (d & 1u); }

unsigned smallest_even_at_least(int d) {
    if (d <= 0) return 0;
    return round_up_even(static_cast<unsigned>(d));
}

// Monomial index remap from a smaller space into a containing one, by name.
std::vector<std::size_t> index_map(const VariableSpace& from, const VariableSpace& into) {
    std::vector<std::size_t> map(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        auto idx = into.find(from.name(i));
        if (!idx) throw SosError("variable '" + from.name(i) + "' missing from constraint space");
        map[i] = *idx;
    }
    return map;
}

Monomial lift_monomial(const Monomial& m, const std::vector<std::size_t>& map, std::size_t nvars) {
    Monomial out(nvars);
    for (std::size_t i = 0; i < m.exp.size(); ++i) out.exp[map[i]] = m.exp[i];
    return out;
}

// Accumulates one constraint expression.  Everything added here is affine
// in the scalar unknowns by construction: known polynomials carry no
// unknowns, and a template is only ever scaled by constants or composed
// with known images.
struct ExprBuilder {
    explicit ExprBuilder(VariableSpace sp) : space(std::move(sp)) {}

    VariableSpace space;
    std::map<Monomial, LinExpr, GradedLexLess> terms;

    void add_constant(double c) {
        if (c != 0) terms[Monomial(space.size())].constant += c;
    }

    void add_known(const Polynomial& p, double scale) {
        const Polynomial q = p.space() == space ? p : p.lift(space);
        for (const auto& [m, c] : q.terms()) terms[m].constant += scale * c;
    }

    void add_template(const ScalarTemplate& t, double scale) {
        auto map = index_map(t.space, space);
        for (std::size_t i = 0; i < t.basis.size(); ++i) {
            auto m = lift_monomial(t.basis[i], map, space.size());
            terms[m].coeffs[t.first_unknown + static_cast<int>(i)] += scale;
        }
    }

    // Template composed with known images: for each basis monomial alpha,
    // the known polynomial prod_i images[i]^alpha_i multiplies the
    // corresponding unknown coefficient.
    void add_composed(const ScalarTemplate& t, const std::vector<Polynomial>& images,
                      double scale) {
        if (images.size() != t.space.size())
            throw SosError("composition image count mismatch for template " + t.label);
        // Power cache per image variable.
        std::vector<std::vector<Polynomial>> powers(images.size());
        auto power = [&](std::size_t v, unsigned e) -> const Polynomial& {
            auto& cache = powers[v];
            if (cache.empty()) {
                cache.push_back(Polynomial::constant(space, 1.0));
                cache.push_back(images[v].space() == space ? images[v] : images[v].lift(space));
            }
            while (cache.size() <= e) cache.push_back(cache.back() * cache[1]);
            return cache[e];
        };
        for (std::size_t i = 0; i < t.basis.size(); ++i) {
            Polynomial prod = Polynomial::constant(space, 1.0);
            for (std::size_t v = 0; v < t.basis[i].exp.size(); ++v)
                if (unsigned e = t.basis[i].exp[v]; e > 0) prod = prod * power(v, e);
            int unknown = t.first_unknown + static_cast<int>(i);
            for (const auto& [m, c] : prod.terms()) terms[m].coeffs[unknown] += scale * c;
        }
    }
};

int add_scalar_template(SosProgram& prog, std::string label, TemplateRole role,
                        const VariableSpace& space, std::vector<Monomial> basis) {
    ScalarTemplate t;
    t.label = std::move(label);
    t.role = role;
    t.space = space;
    t.basis = std::move(basis);
    t.first_unknown = prog.num_scalars;
    prog.num_scalars += static_cast<int>(t.basis.size());
    prog.templates.push_back(std::move(t));
    return static_cast<int>(prog.templates.size()) - 1;
}

// Basis for a template that may only mention variables passing the filter.
std::vector<Monomial> filtered_basis(const VariableSpace& space, unsigned degree,
                                     const std::vector<bool>& allowed) {
    std::vector<Monomial> out;
    for (auto& m : monomial_basis(space, degree)) {
        bool ok = true;
        for (std::size_t v = 0; v < m.exp.size(); ++v)
            if (m.exp[v] > 0 && !allowed[v]) { ok = false; break; }
        if (ok) out.push_back(m);
    }
    return out;
}

std::vector<const SemiAlgebraicSet*> branches(const SemiAlgebraicSet& set) {
    std::vector<const SemiAlgebraicSet*> out;
    if (set.is_union())
        for (const auto& m : set.members()) out.push_back(&m);
    else
        out.push_back(&set);
    return out;
}

// Attach one SOS multiplier per region constraint, lifted into the
// constraint space and max-abs-normalized (the multiplier absorbs the
// scale; this keeps the coefficient-matching rows well conditioned).
void add_region_multipliers(SosConstraint& c, const SemiAlgebraicSet& set,
                            const std::string& prefix) {
    auto gs = set.expanded_constraints();
    for (std::size_t k = 0; k < gs.size(); ++k) {
        const Polynomial g = gs[k].space() == c.space ? gs[k] : gs[k].lift(c.space);
        double scale = g.max_abs_coefficient();
        if (scale == 0) throw SosError("zero region constraint in " + prefix);
        SosMultiplierSlot slot;
        slot.label = prefix + ".g[" + std::to_string(k) + "]";
        slot.weight = g * (-1.0 / scale);
        c.multipliers.push_back(std::move(slot));
    }
}

void add_substituted_multipliers(SosConstraint& c, const SemiAlgebraicSet& set,
                                 const std::vector<Polynomial>& images,
                                 const std::string& prefix) {
    auto gs = set.expanded_constraints();
    for (std::size_t k = 0; k < gs.size(); ++k) {
        const Polynomial g = gs[k].substitute(images);
        double scale = g.max_abs_coefficient();
        if (scale == 0) throw SosError("zero region constraint in " + prefix);
        SosMultiplierSlot slot;
        slot.label = prefix + ".g[" + std::to_string(k) + "]";
        slot.weight = g * (-1.0 / scale);
        c.multipliers.push_back(std::move(slot));
    }
}

}  // namespace

Polynomial ScalarTemplate::materialize(const Eigen::VectorXd& values) const {
    Polynomial::TermMap terms;
    for (std::size_t i = 0; i < basis.size(); ++i) {
        double v = values[first_unknown + static_cast<Eigen::Index>(i)];
        if (v != 0) terms[basis[i]] = v;
    }
    return Polynomial(space, std::move(terms));
}

SosProgram build_safety_program(const AugmentedSystem& aug, const RegionBundle& regions,
                                const ProgramDegrees& degrees, const SafetyProgramOptions& options) {
    if (!(options.eps_hi > options.eps_lo))
        throw SosError("level bounds inconsistent: need eps_hi > eps_lo");
    const std::size_t m = aug.m();
    if (options.fixed_policy && options.fixed_policy->size() != m)
        throw SosError("fixed policy must have one component per input");

    SosProgram prog;
    prog.multiplier_degree = degrees.multiplier;
    prog.certificate_space = aug.pair_state_space;
    if (options.fixed_certificate) {
        prog.fixed_certificate = options.fixed_certificate->space() == aug.pair_state_space
                                     ? *options.fixed_certificate
                                     : options.fixed_certificate->lift(aug.pair_state_space);
    } else {
        prog.certificate_template =
            add_scalar_template(prog, "B", TemplateRole::Certificate, aug.pair_state_space,
                                monomial_basis(aug.pair_state_space, degrees.certificate));
    }

    // Partner-input policy components over (x, xh, u): no partner inputs.
    if (options.fixed_policy) {
        for (auto& p : *options.fixed_policy)
            prog.fixed_policy.push_back(p.space() == aug.full_space ? p : p.lift(aug.full_space));
    } else {
        std::vector<bool> allowed(aug.full_space.size());
        for (std::size_t v = 0; v < aug.full_space.size(); ++v)
            allowed[v] = aug.full_space.role(v) != VarRole::PartnerInput;
        auto basis = filtered_basis(aug.full_space, degrees.policy, allowed);
        for (std::size_t i = 0; i < m; ++i)
            prog.policy_templates.push_back(add_scalar_template(
                prog, "p_" + partner_name(aug.base.input_space.name(i)),
                TemplateRole::PolicyComponent, aug.full_space, basis));
    }

    auto add_certificate = [&](ExprBuilder& e, double scale) {
        if (prog.fixed_certificate)
            e.add_known(*prog.fixed_certificate, scale);
        else
            e.add_template(prog.templates[prog.certificate_template], scale);
    };

    // Initial region: eps_lo - B - lambda0.g0 is SOS, per branch.
    auto r0_branches = branches(regions.r0);
    for (std::size_t b = 0; b < r0_branches.size(); ++b) {
        SosConstraint c;
        c.label = "initial[" + std::to_string(b) + "]";
        c.space = aug.pair_state_space;
        ExprBuilder e(c.space);
        e.add_constant(options.eps_lo);
        add_certificate(e, -1.0);
        c.expr = std::move(e.terms);
        add_region_multipliers(c, *r0_branches[b], c.label);
        prog.constraints.push_back(std::move(c));
    }

    // Unsafe region: B - eps_hi - lambdau.gu is SOS.
    {
        SosConstraint c;
        c.label = "unsafe";
        c.space = aug.pair_state_space;
        ExprBuilder e(c.space);
        add_certificate(e, 1.0);
        e.add_constant(-options.eps_hi);
        c.expr = std::move(e.terms);
        add_region_multipliers(c, regions.ru, c.label);
        prog.constraints.push_back(std::move(c));
    }

    // One-step decrease with the policy correction:
    //   -B(f(x,u), f(xh,uh)) + B - lambda.g - sum_i (uh_i - p_i) - lambdac.gc
    {
        SosConstraint c;
        c.label = "decrease";
        c.space = aug.full_space;
        ExprBuilder e(c.space);
        // Compose the certificate with the paired dynamics.
        if (prog.fixed_certificate) {
            // B(f, fh): substitute pair-state variables by the paired dynamics.
            e.add_known(prog.fixed_certificate->substitute(aug.paired_dynamics), -1.0);
            e.add_known(*prog.fixed_certificate, 1.0);
        } else {
            const auto& bt = prog.templates[prog.certificate_template];
            e.add_composed(bt, aug.paired_dynamics, -1.0);
            e.add_template(bt, 1.0);
        }
        for (std::size_t i = 0; i < m; ++i) {
            auto uh = Polynomial::variable(aug.full_space,
                                           partner_name(aug.base.input_space.name(i)));
            e.add_known(uh, -1.0);
            if (options.fixed_policy)
                e.add_known(prog.fixed_policy[i], 1.0);
            else
                e.add_template(prog.templates[prog.policy_templates[i]], 1.0);
        }
        c.expr = std::move(e.terms);
        add_region_multipliers(c, aug.pair_region, c.label);
        if (m > 0) add_region_multipliers(c, aug.base.input_set, c.label + ".input");
        prog.constraints.push_back(std::move(c));
    }
    return prog;
}

SosProgram build_reach_program(const AugmentedSystem& aug, const RegionBundle& regions,
                                const ProgramDegrees& degrees, const ReachProgramOptions& options) {
    if (!(options.slack > 0)) throw SosError("slack must be positive");
    if (!regions.boundary || !regions.closure_core)
        throw SosError("region bundle lacks a boundary decomposition");
    const std::size_t m = aug.m();
    const bool fixed_mode = options.fixed_policy.has_value();
    if (fixed_mode && options.fixed_policy->size() != m)
        throw SosError("fixed policy must have one component per input");

    // In fixed-policy mode the observed input u is substituted away, so the
    // decrease constraint lives over (x, xh, uh) only.
    VariableSpace work_space;
    if (fixed_mode) {
        std::vector<std::string> names;
        std::vector<VarRole> roles;
        for (std::size_t v = 0; v < aug.full_space.size(); ++v) {
            if (aug.full_space.role(v) == VarRole::Input) continue;
            names.push_back(aug.full_space.name(v));
            roles.push_back(aug.full_space.role(v));
        }
        work_space = VariableSpace(std::move(names), std::move(roles));
    } else {
        work_space = aug.full_space;
    }

    SosProgram prog;
    prog.multiplier_degree = degrees.multiplier;
    prog.certificate_space = aug.pair_state_space;
    if (options.fixed_certificate) {
        prog.fixed_certificate = options.fixed_certificate->space() == aug.pair_state_space
                                     ? *options.fixed_certificate
                                     : options.fixed_certificate->lift(aug.pair_state_space);
    } else {
        prog.certificate_template =
            add_scalar_template(prog, "V", TemplateRole::Certificate, aug.pair_state_space,
                                monomial_basis(aug.pair_state_space, degrees.certificate));
    }
    if (fixed_mode) {
        for (auto& p : *options.fixed_policy)
            prog.fixed_policy.push_back(p.space() == work_space ? p : p.lift(work_space));
    } else {
        // Observed-input policy over (x, xh, uh): no plain inputs.
        std::vector<bool> allowed(work_space.size());
        for (std::size_t v = 0; v < work_space.size(); ++v)
            allowed[v] = work_space.role(v) != VarRole::Input;
        auto basis = filtered_basis(work_space, degrees.policy, allowed);
        for (std::size_t i = 0; i < m; ++i)
            prog.policy_templates.push_back(
                add_scalar_template(prog, "p_" + aug.base.input_space.name(i),
                                    TemplateRole::PolicyComponent, work_space, basis));
    }

    auto add_certificate = [&](ExprBuilder& e, double scale) {
        if (prog.fixed_certificate)
            e.add_known(*prog.fixed_certificate, scale);
        else
            e.add_template(prog.templates[prog.certificate_template], scale);
    };

    // Initial region: -V - lambda0.g0 is SOS, per branch.
    auto r0_branches = branches(regions.r0);
    for (std::size_t b = 0; b < r0_branches.size(); ++b) {
        SosConstraint c;
        c.label = "initial[" + std::to_string(b) + "]";
        c.space = aug.pair_state_space;
        ExprBuilder e(c.space);
        add_certificate(e, -1.0);
        c.expr = std::move(e.terms);
        add_region_multipliers(c, *r0_branches[b], c.label);
        prog.constraints.push_back(std::move(c));
    }

    // Boundary faces: V - slack - lambdau.gu is SOS, one constraint each.
    auto faces = branches(*regions.boundary);
    for (std::size_t b = 0; b < faces.size(); ++b) {
        SosConstraint c;
        c.label = "boundary[" + std::to_string(b) + "]";
        c.space = aug.pair_state_space;
        ExprBuilder e(c.space);
        add_certificate(e, 1.0);
        e.add_constant(-options.slack);
        c.expr = std::move(e.terms);
        add_region_multipliers(c, *faces[b], c.label);
        prog.constraints.push_back(std::move(c));
    }

    // Decrease on the core region, for every partner input:
    //   -V(f(x,u), f(xh,uh)) + V - lambda.g - sum_i (u_i - p_i) - lambdac(uh).gc - slack
    {
        SosConstraint c;
        c.label = "decrease";
        c.space = work_space;
        ExprBuilder e(c.space);

        // Images of the paired dynamics over the working space; in fixed
        // mode the u variables map to the candidate policy components.
        std::vector<Polynomial> images;
        images.reserve(aug.full_space.size());
        const auto input_indices = aug.full_space.indices_with_role(VarRole::Input);
        const std::size_t first_input = input_indices.empty() ? 0 : input_indices.front();
        for (std::size_t v = 0; v < aug.full_space.size(); ++v) {
            if (fixed_mode && aug.full_space.role(v) == VarRole::Input)
                images.push_back(prog.fixed_policy[v - first_input]);
            else
                images.push_back(Polynomial::variable(work_space, aug.full_space.name(v)));
        }
        std::vector<Polynomial> dyn;
        dyn.reserve(aug.paired_dynamics.size());
        for (const auto& f : aug.paired_dynamics) dyn.push_back(f.substitute(images));

        if (prog.fixed_certificate) {
            e.add_known(prog.fixed_certificate->substitute(dyn), -1.0);
            e.add_known(*prog.fixed_certificate, 1.0);
        } else {
            const auto& vt = prog.templates[prog.certificate_template];
            e.add_composed(vt, dyn, -1.0);
            e.add_template(vt, 1.0);
        }
        if (!fixed_mode) {
            for (std::size_t i = 0; i < m; ++i) {
                auto u = Polynomial::variable(work_space, aug.base.input_space.name(i));
                e.add_known(u, -1.0);
                e.add_template(prog.templates[prog.policy_templates[i]], 1.0);
            }
        }
        e.add_constant(-options.slack);
        c.expr = std::move(e.terms);
        add_region_multipliers(c, *regions.closure_core, c.label);
        if (m > 0) {
            // Partner-input membership, with the input variables renamed.
            std::vector<Polynomial> uh_images;
            for (std::size_t i = 0; i < m; ++i)
                uh_images.push_back(Polynomial::variable(
                    work_space, partner_name(aug.base.input_space.name(i))));
            add_substituted_multipliers(c, aug.base.input_set, uh_images, c.label + ".input");
        }
        prog.constraints.push_back(std::move(c));
    }
    return prog;
}

CompiledSdp compile_to_sdp(const SosProgram& prog) {
    CompiledSdp out;
    SdpProblem& P = out.problem;
    P.num_free = prog.num_scalars;

    int row_base = 0;
    for (const auto& c : prog.constraints) {
        // Degree of the non-multiplier part.
        unsigned d0 = 0;
        for (const auto& [mono, lin] : c.expr) d0 = std::max(d0, mono.degree());

        std::vector<unsigned> mdeg(c.multipliers.size());
        unsigned dmax = d0;
        for (std::size_t k = 0; k < c.multipliers.size(); ++k) {
            unsigned wdeg = c.multipliers[k].weight.degree();
            mdeg[k] = prog.multiplier_degree
                          ? *prog.multiplier_degree
                          : smallest_even_at_least(static_cast<int>(d0) - static_cast<int>(wdeg));
            dmax = std::max(dmax, mdeg[k] + wdeg);
        }
        const unsigned D = round_up_even(dmax);

        auto main_basis = monomial_basis(c.space, D / 2);
        std::vector<std::vector<Monomial>> mbases;
        for (std::size_t k = 0; k < c.multipliers.size(); ++k)
            mbases.push_back(monomial_basis(c.space, mdeg[k] / 2));

        const int main_block = static_cast<int>(P.block_dims.size());
        P.block_dims.push_back(static_cast<int>(main_basis.size()));
        std::vector<int> mult_blocks;
        for (const auto& b : mbases) {
            mult_blocks.push_back(static_cast<int>(P.block_dims.size()));
            P.block_dims.push_back(static_cast<int>(b.size()));
        }

        // Row accumulator keyed by monomial; (block, i, j) coefficients and
        // free-scalar coefficients accumulate before emission.
        struct Row {
            std::map<std::tuple<int, int, int>, double> gram;
            std::map<int, double> free;
            double rhs = 0;
        };
        std::map<Monomial, Row, GradedLexLess> rows;

        // Main Gram: coefficient of m_i*m_j is Q(i,i) on the diagonal and
        // 2*Q(i,j) off it.
        for (std::size_t i = 0; i < main_basis.size(); ++i)
            for (std::size_t j = i; j < main_basis.size(); ++j) {
                auto mono = main_basis[i] * main_basis[j];
                rows[mono].gram[{main_block, static_cast<int>(i), static_cast<int>(j)}] +=
                    i == j ? 1.0 : 2.0;
            }

        // Multiplier Grams enter through their weights; the identity is
        //   main_gram = expr + sum_k weight_k * lambda_k,
        // so the weighted entries move to the left with a sign flip.
        for (std::size_t k = 0; k < mbases.size(); ++k) {
            const auto& basis = mbases[k];
            for (std::size_t i = 0; i < basis.size(); ++i)
                for (std::size_t j = i; j < basis.size(); ++j) {
                    auto pair_mono = basis[i] * basis[j];
                    double sym = i == j ? 1.0 : 2.0;
                    for (const auto& [w_mono, w_coef] : c.multipliers[k].weight.terms())
                        rows[pair_mono * w_mono]
                            .gram[{mult_blocks[k], static_cast<int>(i), static_cast<int>(j)}] -=
                            sym * w_coef;
                }
        }

        for (const auto& [mono, lin] : c.expr) {
            Row& r = rows[mono];
            r.rhs += lin.constant;
            for (const auto& [unknown, coef] : lin.coeffs) r.free[unknown] -= coef;
        }

        for (const auto& [mono, r] : rows) {
            const int row = row_base++;
            for (const auto& [key, v] : r.gram) {
                if (v == 0) continue;
                auto [blk, i, j] = key;
                P.entries.push_back({row, blk, i, j, v});
            }
            for (const auto& [unknown, v] : r.free) {
                if (v == 0) continue;
                P.entries.push_back({row, -1, unknown, 0, v});
            }
            P.rhs.push_back(r.rhs);
        }

        out.constraint_block.push_back(main_block);
        out.multiplier_block.push_back(std::move(mult_blocks));
        out.constraint_basis.push_back(std::move(main_basis));
        out.multiplier_basis.push_back(std::move(mbases));
        out.constraint_degree.push_back(D);
    }
    return out;
}

namespace {

Polynomial gram_polynomial(const VariableSpace& space, const std::vector<Monomial>& basis,
                           const Eigen::MatrixXd& Q) {
    Polynomial::TermMap terms;
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (std::size_t j = i; j < basis.size(); ++j) {
            double v = (i == j ? 1.0 : 2.0) * Q(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(j));
            if (v == 0) continue;
            terms[basis[i] * basis[j]] += v;
        }
    for (auto it = terms.begin(); it != terms.end();)
        it = it->second == 0 ? terms.erase(it) : std::next(it);
    return Polynomial(space, std::move(terms));
}

}  // namespace

ExtractedCertificate extract_certificate(const SosProgram& prog, const CompiledSdp& compiled,
                                         const SdpSolution& solution) {
    if (solution.status != SolveStatus::Feasible)
        throw SosError("cannot extract a certificate from a non-feasible solve");

    ExtractedCertificate out;
    if (prog.fixed_certificate)
        out.certificate = *prog.fixed_certificate;
    else if (prog.certificate_template >= 0)
        out.certificate = prog.templates[prog.certificate_template].materialize(solution.free_values);
    else
        out.certificate = Polynomial::zero(prog.certificate_space);

    if (!prog.fixed_policy.empty())
        out.policy = prog.fixed_policy;
    else
        for (int t : prog.policy_templates)
            out.policy.push_back(prog.templates[t].materialize(solution.free_values));

    out.min_gram_eig = std::numeric_limits<double>::infinity();
    for (std::size_t ci = 0; ci < prog.constraints.size(); ++ci) {
        const auto& c = prog.constraints[ci];

        // Materialize the full expression with solved scalars.
        Polynomial::TermMap expr_terms;
        for (const auto& [mono, lin] : c.expr) {
            double v = lin.constant;
            for (const auto& [unknown, coef] : lin.coeffs)
                v += coef * solution.free_values[unknown];
            if (v != 0) expr_terms[mono] += v;
        }
        Polynomial expr(c.space, std::move(expr_terms));

        std::vector<Polynomial> mults;
        for (std::size_t k = 0; k < c.multipliers.size(); ++k) {
            int blk = compiled.multiplier_block[ci][k];
            auto lambda = gram_polynomial(c.space, compiled.multiplier_basis[ci][k],
                                          solution.blocks[blk]);
            expr = expr + c.multipliers[k].weight * lambda;
            auto eig = min_eigenvalue_check(solution.blocks[blk], 1.0);
            out.min_gram_eig = std::min(out.min_gram_eig, eig.min_eig);
            mults.push_back(std::move(lambda));
        }
        out.multipliers.push_back(std::move(mults));

        int blk = compiled.constraint_block[ci];
        auto main = gram_polynomial(c.space, compiled.constraint_basis[ci], solution.blocks[blk]);
        auto eig = min_eigenvalue_check(solution.blocks[blk], 1.0);
        out.min_gram_eig = std::min(out.min_gram_eig, eig.min_eig);

        out.max_residual = std::max(out.max_residual, (expr - main).max_abs_coefficient());
    }
    return out;
}

}  // namespace opacheck
