#include "opacheck/poly.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

namespace opacheck {

VariableSpace::VariableSpace(std::vector<std::string> names, std::vector<VarRole> roles)
    : names_(std::move(names)), roles_(std::move(roles)) {
    if (names_.size() != roles_.size())
        throw PolyError("variable space: names/roles size mismatch");
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
        if (n.empty()) throw PolyError("variable space: empty variable name");
        if (!seen.insert(n).second)
            throw PolyError("variable space: duplicate variable name '" + n + "'");
    }
    // Roles must be contiguous in the order state, partner-state, input, partner-input.
    int last = -1;
    for (VarRole r : roles_) {
        int v = static_cast<int>(r);
        if (v < last)
            throw PolyError("variable space: roles not contiguous in x, xh, u, uh order");
        last = v;
    }
}

VariableSpace VariableSpace::states(std::vector<std::string> names) {
    std::vector<VarRole> roles(names.size(), VarRole::State);
    return VariableSpace(std::move(names), std::move(roles));
}

std::optional<std::size_t> VariableSpace::find(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    return std::nullopt;
}

std::size_t VariableSpace::index_of(const std::string& name) const {
    auto i = find(name);
    if (!i) throw PolyError("unknown variable '" + name + "'");
    return *i;
}

std::vector<std::size_t> VariableSpace::indices_with_role(VarRole r) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < roles_.size(); ++i)
        if (roles_[i] == r) out.push_back(i);
    return out;
}

Monomial Monomial::operator*(const Monomial& o) const {
    if (exp.size() != o.exp.size()) throw PolyError("monomial product: dimension mismatch");
    Monomial r(exp.size());
    for (std::size_t i = 0; i < exp.size(); ++i) r.exp[i] = exp[i] + o.exp[i];
    return r;
}

bool GradedLexLess::operator()(const Monomial& a, const Monomial& b) const {
    unsigned da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    // Same degree: the monomial with more weight on earlier variables ranks
    // first, so x1 < x2 in the order (x1 appears earlier in bases).
    return std::lexicographical_compare(b.exp.begin(), b.exp.end(),
                                        a.exp.begin(), a.exp.end());
}

Polynomial::Polynomial(VariableSpace space, TermMap terms)
    : space_(std::move(space)), terms_(std::move(terms)) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        if (it->first.exp.size() != space_.size())
            throw PolyError("polynomial term: exponent vector length mismatch");
        if (it->second == 0.0)
            it = terms_.erase(it);
        else
            ++it;
    }
}

Polynomial Polynomial::constant(const VariableSpace& space, double c) {
    Polynomial p(space);
    if (c != 0.0) p.terms_.emplace(Monomial(space.size()), c);
    return p;
}

Polynomial Polynomial::variable(const VariableSpace& space, std::size_t index) {
    if (index >= space.size()) throw PolyError("variable index out of range");
    Monomial m(space.size());
    m.exp[index] = 1;
    Polynomial p(space);
    p.terms_.emplace(std::move(m), 1.0);
    return p;
}

Polynomial Polynomial::variable(const VariableSpace& space, const std::string& name) {
    return variable(space, space.index_of(name));
}

unsigned Polynomial::degree() const {
    unsigned d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
}

unsigned Polynomial::degree_in(std::size_t var) const {
    unsigned d = 0;
    for (const auto& [m, c] : terms_) d = std::max(d, m.exp[var]);
    return d;
}

double Polynomial::coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::constant_term() const { return coefficient(Monomial(space_.size())); }

double Polynomial::max_abs_coefficient() const {
    double m = 0;
    for (const auto& [mono, c] : terms_) m = std::max(m, std::abs(c));
    return m;
}

void Polynomial::add_term(const Monomial& m, double c) {
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
        it->second += c;
        if (it->second == 0.0) terms_.erase(it);
    }
}

Polynomial Polynomial::operator+(const Polynomial& o) const {
    if (space_ != o.space_) throw PolyError("polynomial add: variable space mismatch");
    Polynomial r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, c);
    return r;
}

Polynomial Polynomial::operator-(const Polynomial& o) const {
    if (space_ != o.space_) throw PolyError("polynomial sub: variable space mismatch");
    Polynomial r = *this;
    for (const auto& [m, c] : o.terms_) r.add_term(m, -c);
    return r;
}

Polynomial Polynomial::operator-() const {
    Polynomial r(space_);
    for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
    return r;
}

Polynomial Polynomial::operator*(const Polynomial& o) const {
    if (space_ != o.space_) throw PolyError("polynomial mul: variable space mismatch");
    Polynomial r(space_);
    for (const auto& [ma, ca] : terms_)
        for (const auto& [mb, cb] : o.terms_) r.add_term(ma * mb, ca * cb);
    return r;
}

Polynomial Polynomial::operator*(double c) const {
    Polynomial r(space_);
    if (c == 0.0) return r;
    for (const auto& [m, k] : terms_) r.terms_.emplace(m, k * c);
    return r;
}

Polynomial operator*(double c, const Polynomial& p) { return p * c; }

double Polynomial::evaluate(const std::vector<double>& point) const {
    if (point.size() != space_.size())
        throw PolyError("evaluate: point dimension mismatch");
    double total = 0;
    for (const auto& [m, c] : terms_) {
        double v = c;
        for (std::size_t i = 0; i < m.exp.size(); ++i)
            for (unsigned e = 0; e < m.exp[i]; ++e) v *= point[i];
        total += v;
    }
    return total;
}

Polynomial Polynomial::substitute(const std::vector<Polynomial>& images) const {
    if (images.size() != space_.size())
        throw PolyError("substitute: missing image for a variable");
    if (space_.size() == 0)
        throw PolyError("substitute: empty variable space");
    const VariableSpace& target = images.front().space();
    for (const auto& img : images)
        if (img.space() != target)
            throw PolyError("substitute: images do not share one target space");

    // Power cache per variable to avoid recomputing img^k.
    std::vector<std::vector<Polynomial>> powers(space_.size());
    auto power = [&](std::size_t var, unsigned k) -> const Polynomial& {
        auto& cache = powers[var];
        if (cache.empty()) cache.push_back(Polynomial::constant(target, 1.0));
        while (cache.size() <= k) cache.push_back(cache.back() * images[var]);
        return cache[k];
    };

    Polynomial result(target);
    for (const auto& [m, c] : terms_) {
        Polynomial term = Polynomial::constant(target, c);
        for (std::size_t i = 0; i < m.exp.size(); ++i)
            if (m.exp[i] > 0) term = term * power(i, m.exp[i]);
        result = result + term;
    }
    return result;
}

Polynomial Polynomial::lift(const VariableSpace& target) const {
    std::vector<std::size_t> map(space_.size());
    for (std::size_t i = 0; i < space_.size(); ++i)
        map[i] = target.index_of(space_.name(i));
    Polynomial r(target);
    for (const auto& [m, c] : terms_) {
        Monomial t(target.size());
        for (std::size_t i = 0; i < m.exp.size(); ++i) t.exp[map[i]] += m.exp[i];
        r.add_term(t, c);
    }
    return r;
}

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string Polynomial::print() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    for (const auto& [m, c] : terms_) {
        double coeff = c;
        if (first) {
            if (coeff < 0) {
                os << "-";
                coeff = -coeff;
            }
        } else {
            os << (coeff < 0 ? " - " : " + ");
            coeff = std::abs(coeff);
        }
        bool need_coeff = (coeff != 1.0) || m.is_constant();
        if (need_coeff) os << format_double(coeff);
        bool need_star = need_coeff;
        for (std::size_t i = 0; i < m.exp.size(); ++i) {
            if (m.exp[i] == 0) continue;
            if (need_star) os << "*";
            os << space_.name(i);
            if (m.exp[i] > 1) os << "^" << m.exp[i];
            need_star = true;
        }
        first = false;
    }
    return os.str();
}

namespace {

class Parser {
public:
    Parser(const std::string& text, const VariableSpace& space)
        : text_(text), space_(space) {}

    Polynomial run() {
        Polynomial p = parse_expr();
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError("unexpected trailing input", pos_);
        return p;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Polynomial parse_expr() {
        bool neg = eat('-');
        Polynomial p = parse_term();
        if (neg) p = -p;
        for (;;) {
            if (eat('+'))
                p = p + parse_term();
            else if (eat('-'))
                p = p - parse_term();
            else
                return p;
        }
    }

    Polynomial parse_term() {
        Polynomial p = parse_factor();
        while (eat('*')) p = p * parse_factor();
        return p;
    }

    Polynomial parse_factor() {
        char c = peek();
        if (c == '(') {
            ++pos_;
            Polynomial p = parse_expr();
            if (!eat(')')) throw ParseError("expected ')'", pos_);
            return p;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        throw ParseError("expected number, identifier, or '('", pos_);
    }

    Polynomial parse_number() {
        skip_ws();
        std::size_t start = pos_;
        double value = 0;
        auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
        if (res.ec != std::errc())
            throw ParseError("malformed number", start);
        pos_ = static_cast<std::size_t>(res.ptr - text_.data());
        return Polynomial::constant(space_, value);
    }

    Polynomial parse_ident() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name = text_.substr(start, pos_ - start);
        auto idx = space_.find(name);
        if (!idx) throw ParseError("unknown variable '" + name + "'", start);
        Polynomial p = Polynomial::variable(space_, *idx);
        if (eat('^')) {
            skip_ws();
            std::size_t estart = pos_;
            unsigned e = 0;
            auto res = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), e);
            if (res.ec != std::errc())
                throw ParseError("expected exponent", estart);
            pos_ = static_cast<std::size_t>(res.ptr - text_.data());
            Polynomial q = Polynomial::constant(space_, 1.0);
            for (unsigned k = 0; k < e; ++k) q = q * p;
            p = q;
        }
        return p;
    }

    const std::string& text_;
    const VariableSpace& space_;
    std::size_t pos_ = 0;
};

void enumerate_monomials(std::size_t nvars, unsigned degree, std::size_t var, Monomial& cur,
                         unsigned used, std::vector<Monomial>& out) {
    if (var == nvars) {
        out.push_back(cur);
        return;
    }
    for (unsigned e = 0; e + used <= degree; ++e) {
        cur.exp[var] = e;
        enumerate_monomials(nvars, degree, var + 1, cur, used + e, out);
    }
    cur.exp[var] = 0;
}

}  // namespace

Polynomial parse_polynomial(const std::string& text, const VariableSpace& space) {
    return Parser(text, space).run();
}

std::vector<Monomial> monomial_basis(std::size_t nvars, unsigned degree) {
    std::vector<Monomial> out;
    Monomial cur(nvars);
    enumerate_monomials(nvars, degree, 0, cur, 0, out);
    std::sort(out.begin(), out.end(), GradedLexLess{});
    return out;
}

std::vector<Monomial> monomial_basis(const VariableSpace& space, unsigned degree) {
    return monomial_basis(space.size(), degree);
}

}  // namespace opacheck
