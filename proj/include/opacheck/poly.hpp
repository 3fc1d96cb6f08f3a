/*
 * poly.hpp
 * --------
 * Sparse multivariate polynomial arithmetic over a fixed, ordered variable
 * space.  Polynomials are immutable value types; all operations are pure.
 *
 * Monomials are ordered graded-lexicographically (total degree first, then
 * lexicographic with earlier variables ranking higher), so printed output
 * and enumerated bases are stable across runs.
 */
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace opacheck {

class PolyError : public std::runtime_error {
public:
    explicit PolyError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public PolyError {
public:
    ParseError(const std::string& what, std::size_t offset)
        : PolyError(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

enum class VarRole { State, PartnerState, Input, PartnerInput };

// Ordered list of named variables with roles.  The order is fixed and
// determines exponent-vector positions; roles must appear contiguously in
// the order state, partner-state, input, partner-input.
class VariableSpace {
public:
    VariableSpace() = default;
    VariableSpace(std::vector<std::string> names, std::vector<VarRole> roles);

    // All variables get the same role (common case for plain state spaces).
    static VariableSpace states(std::vector<std::string> names);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<VarRole>& roles() const { return roles_; }
    const std::string& name(std::size_t i) const { return names_[i]; }
    VarRole role(std::size_t i) const { return roles_[i]; }

    // Index of a variable name, or nullopt.
    std::optional<std::size_t> find(const std::string& name) const;
    std::size_t index_of(const std::string& name) const;

    std::vector<std::size_t> indices_with_role(VarRole r) const;

    bool operator==(const VariableSpace& o) const {
        return names_ == o.names_ && roles_ == o.roles_;
    }
    bool operator!=(const VariableSpace& o) const { return !(*this == o); }

private:
    std::vector<std::string> names_;
    std::vector<VarRole> roles_;
};

// Exponent vector aligned with some VariableSpace.
struct Monomial {
    std::vector<unsigned> exp;

    Monomial() = default;
    explicit Monomial(std::size_t nvars) : exp(nvars, 0) {}
    explicit Monomial(std::vector<unsigned> e) : exp(std::move(e)) {}

    unsigned degree() const {
        unsigned d = 0;
        for (unsigned e : exp) d += e;
        return d;
    }
    bool is_constant() const { return degree() == 0; }

    Monomial operator*(const Monomial& o) const;

    bool operator==(const Monomial& o) const { return exp == o.exp; }
    bool operator!=(const Monomial& o) const { return !(*this == o); }
};

// Graded-lex order: lower total degree first; ties broken so that earlier
// variables come first (x1 before x2).
struct GradedLexLess {
    bool operator()(const Monomial& a, const Monomial& b) const;
};

class Polynomial {
public:
    using TermMap = std::map<Monomial, double, GradedLexLess>;

    Polynomial() = default;
    explicit Polynomial(VariableSpace space) : space_(std::move(space)) {}
    Polynomial(VariableSpace space, TermMap terms);

    static Polynomial zero(const VariableSpace& space) { return Polynomial(space); }
    static Polynomial constant(const VariableSpace& space, double c);
    static Polynomial variable(const VariableSpace& space, std::size_t index);
    static Polynomial variable(const VariableSpace& space, const std::string& name);

    const VariableSpace& space() const { return space_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t term_count() const { return terms_.size(); }
    unsigned degree() const;  // 0 for the zero polynomial
    unsigned degree_in(std::size_t var) const;
    double coefficient(const Monomial& m) const;
    double constant_term() const;
    double max_abs_coefficient() const;

    Polynomial operator+(const Polynomial& o) const;
    Polynomial operator-(const Polynomial& o) const;
    Polynomial operator-() const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator*(double c) const;

    double evaluate(const std::vector<double>& point) const;

    // Composition: replace every variable by its image.  All images must
    // share one target space.
    Polynomial substitute(const std::vector<Polynomial>& images) const;

    // Same polynomial over a larger/renamed space; every variable of this
    // space must exist (by name) in the target.
    Polynomial lift(const VariableSpace& target) const;

    std::string print() const;

    bool operator==(const Polynomial& o) const {
        return space_ == o.space_ && terms_ == o.terms_;
    }
    bool operator!=(const Polynomial& o) const { return !(*this == o); }

private:
    void add_term(const Monomial& m, double c);

    VariableSpace space_;
    TermMap terms_;
};

Polynomial operator*(double c, const Polynomial& p);

// Recursive-descent parser for the polynomial grammar:
//   expr   := ['-'] term { ('+'|'-') term }
//   term   := factor { '*' factor }
//   factor := number | ident [ '^' uint ] | '(' expr ')'
// Whitespace is insignificant.  Unknown identifiers and syntax errors throw
// ParseError with the byte offset.
Polynomial parse_polynomial(const std::string& text, const VariableSpace& space);

// All monomials of total degree <= degree in graded-lex order;
// the count is C(n + degree, degree).
std::vector<Monomial> monomial_basis(const VariableSpace& space, unsigned degree);
std::vector<Monomial> monomial_basis(std::size_t nvars, unsigned degree);

// Shortest round-trip decimal form of a double ("0.5", "1e-07", ...).
std::string format_double(double v);

}  // namespace opacheck
