#include "ppmc/pctl.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace ppmc {

FormulaPtr Formula::make_true() {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::True;
    return f;
}
FormulaPtr Formula::make_false() {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::False;
    return f;
}
FormulaPtr Formula::make_atom(std::string name) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Atom;
    f->atom = std::move(name);
    return f;
}
FormulaPtr Formula::make_not(FormulaPtr x) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Not;
    f->lhs = std::move(x);
    return f;
}
FormulaPtr Formula::make_and(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::And;
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}
FormulaPtr Formula::make_or(FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Or;
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}
FormulaPtr Formula::make_next(Rel r, Rational rho, FormulaPtr x) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Next;
    f->rel = r;
    f->rho = std::move(rho);
    f->lhs = std::move(x);
    return f;
}
FormulaPtr Formula::make_until(Rel r, Rational rho, FormulaPtr a, FormulaPtr b) {
    auto f = std::make_shared<Formula>();
    f->kind = Kind::Until;
    f->rel = r;
    f->rho = std::move(rho);
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}

namespace {

std::string rel_spec(Rel r, const Rational& rho) {
    if (r == Rel::Le && rho == 0) return "=0";
    if (r == Rel::Ge && rho == 1) return "=1";
    return rel_to_string(r) + rational_to_string(rho);
}

} // namespace

std::string formula_to_string(const FormulaPtr& f) {
    switch (f->kind) {
        case Formula::Kind::True: return "tt";
        case Formula::Kind::False: return "ff";
        case Formula::Kind::Atom: return f->atom;
        case Formula::Kind::Not: return "!" + formula_to_string(f->lhs);
        case Formula::Kind::And:
            return "(" + formula_to_string(f->lhs) + " & " + formula_to_string(f->rhs) + ")";
        case Formula::Kind::Or:
            return "(" + formula_to_string(f->lhs) + " | " + formula_to_string(f->rhs) + ")";
        case Formula::Kind::Next:
            return "X[" + rel_spec(f->rel, f->rho) + "] " + formula_to_string(f->lhs);
        case Formula::Kind::Until:
            return "(" + formula_to_string(f->lhs) + " U[" + rel_spec(f->rel, f->rho) + "] " +
                   formula_to_string(f->rhs) + ")";
    }
    return "?";
}

namespace {

struct FormulaParser {
    std::string text;
    size_t pos = 0;

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw ParseError("formula: " + msg, 1, static_cast<int>(pos) + 1);
    }
    std::string ident() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (start == pos) fail("expected identifier");
        return text.substr(start, pos - start);
    }

    std::pair<Rel, Rational> rel_spec() {
        skip_ws();
        if (!eat('[')) fail("expected '['");
        skip_ws();
        std::string op;
        while (pos < text.size() && (text[pos] == '<' || text[pos] == '>' || text[pos] == '='))
            op.push_back(text[pos++]);
        skip_ws();
        size_t start = pos;
        while (pos < text.size() && text[pos] != ']' &&
               !std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
        std::string num = text.substr(start, pos - start);
        if (!eat(']')) fail("expected ']'");
        if (op == "=") {
            if (num == "0") return {Rel::Le, Rational(0)};
            if (num == "1") return {Rel::Ge, Rational(1)};
            fail("only =0 and =1 are allowed as equality thresholds");
        }
        auto rel = rel_from_string(op);
        if (!rel || *rel == Rel::Eq) fail("bad relation '" + op + "'");
        auto rho = parse_rational(num);
        if (!rho) fail("bad rational '" + num + "'");
        if (*rho < 0 || *rho > 1) fail("threshold outside [0,1]");
        return {*rel, *rho};
    }

    FormulaPtr parse_expr() {
        FormulaPtr left = parse_or();
        skip_ws();
        if (pos < text.size() && text[pos] == 'U' &&
            (pos + 1 >= text.size() || !std::isalnum(static_cast<unsigned char>(text[pos + 1])))) {
            ++pos;
            auto [rel, rho] = rel_spec();
            FormulaPtr right = parse_expr();
            return Formula::make_until(rel, rho, left, right);
        }
        return left;
    }

    FormulaPtr parse_or() {
        FormulaPtr f = parse_and();
        while (true) {
            skip_ws();
            if (pos < text.size() && text[pos] == '|') {
                ++pos;
                f = Formula::make_or(f, parse_and());
            } else {
                return f;
            }
        }
    }

    FormulaPtr parse_and() {
        FormulaPtr f = parse_unary();
        while (true) {
            skip_ws();
            if (pos < text.size() && text[pos] == '&') {
                ++pos;
                f = Formula::make_and(f, parse_unary());
            } else {
                return f;
            }
        }
    }

    FormulaPtr parse_unary() {
        skip_ws();
        if (pos >= text.size()) fail("unexpected end of formula");
        char c = text[pos];
        if (c == '!') {
            ++pos;
            return Formula::make_not(parse_unary());
        }
        if (c == '(') {
            ++pos;
            FormulaPtr f = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return f;
        }
        if (c == 'X' &&
            (pos + 1 < text.size() && (text[pos + 1] == '[' || std::isspace(static_cast<unsigned char>(text[pos + 1]))))) {
            ++pos;
            auto [rel, rho] = rel_spec();
            return Formula::make_next(rel, rho, parse_unary());
        }
        std::string name = ident();
        if (name == "tt") return Formula::make_true();
        if (name == "ff") return Formula::make_false();
        if (name == "X" || name == "U") fail("temporal operator needs [rel]");
        return Formula::make_atom(name);
    }
};

} // namespace

FormulaPtr parse_formula(const std::string& text) {
    FormulaParser p{text};
    FormulaPtr f = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return f;
}

bool is_qualitative(const FormulaPtr& f) {
    auto qual_rel = [](Rel r, const Rational& rho) {
        return (r == Rel::Le && rho == 0) || (r == Rel::Ge && rho == 1) ||
               (r == Rel::Gt && rho == 0) || (r == Rel::Lt && rho == 1);
    };
    switch (f->kind) {
        case Formula::Kind::True:
        case Formula::Kind::False:
        case Formula::Kind::Atom: return true;
        case Formula::Kind::Not: return is_qualitative(f->lhs);
        case Formula::Kind::And:
        case Formula::Kind::Or: return is_qualitative(f->lhs) && is_qualitative(f->rhs);
        case Formula::Kind::Next: return qual_rel(f->rel, f->rho) && is_qualitative(f->lhs);
        case Formula::Kind::Until:
            return qual_rel(f->rel, f->rho) && is_qualitative(f->lhs) && is_qualitative(f->rhs);
    }
    return false;
}

namespace {

Rel dual_rel(Rel r) {
    switch (r) {
        case Rel::Ge: return Rel::Lt;
        case Rel::Gt: return Rel::Le;
        case Rel::Le: return Rel::Gt;
        case Rel::Lt: return Rel::Ge;
        case Rel::Eq: break;
    }
    throw std::logic_error("dual_rel: Eq has no dual");
}

struct NegationEliminator {
    RegularValuation nu;

    FormulaPtr positive(const FormulaPtr& f) {
        switch (f->kind) {
            case Formula::Kind::True:
            case Formula::Kind::False:
            case Formula::Kind::Atom: return f;
            case Formula::Kind::Not: return negative(f->lhs);
            case Formula::Kind::And:
                return Formula::make_and(positive(f->lhs), positive(f->rhs));
            case Formula::Kind::Or:
                return Formula::make_or(positive(f->lhs), positive(f->rhs));
            case Formula::Kind::Next:
                return Formula::make_next(f->rel, f->rho, positive(f->lhs));
            case Formula::Kind::Until:
                return Formula::make_until(f->rel, f->rho, positive(f->lhs), positive(f->rhs));
        }
        throw std::logic_error("positive: bad node");
    }

    FormulaPtr negative(const FormulaPtr& f) {
        switch (f->kind) {
            case Formula::Kind::True: return Formula::make_false();
            case Formula::Kind::False: return Formula::make_true();
            case Formula::Kind::Atom: {
                std::string fresh = "!" + f->atom;
                auto it = nu.atoms.find(f->atom);
                if (it == nu.atoms.end())
                    throw std::invalid_argument("negation_free: unbound atom " + f->atom);
                if (!nu.atoms.count(fresh)) nu.atoms.emplace(fresh, complement(it->second));
                return Formula::make_atom(fresh);
            }
            case Formula::Kind::Not: return positive(f->lhs);
            case Formula::Kind::And:
                return Formula::make_or(negative(f->lhs), negative(f->rhs));
            case Formula::Kind::Or:
                return Formula::make_and(negative(f->lhs), negative(f->rhs));
            case Formula::Kind::Next:
                // negation flips the probability comparison only
                return Formula::make_next(dual_rel(f->rel), f->rho, positive(f->lhs));
            case Formula::Kind::Until:
                return Formula::make_until(dual_rel(f->rel), f->rho, positive(f->lhs),
                                           positive(f->rhs));
        }
        throw std::logic_error("negative: bad node");
    }
};

} // namespace

std::pair<FormulaPtr, RegularValuation> negation_free(const FormulaPtr& f,
                                                      const RegularValuation& nu) {
    NegationEliminator e{nu};
    FormulaPtr out = e.positive(f);
    return {out, std::move(e.nu)};
}

// ---------------------------------------------------------------------------
// one-step sets

namespace {

/// Shared state layout for top-two-symbol automata: state 0..nq-1 = "p, eps";
/// then (p, top) for length-1; then (p, top, below).
struct TopTwoLayout {
    int nq, ns;
    int eps(int p) const { return p; }
    int one(int p, int top) const { return nq + p * ns + top; }
    int two(int p, int top, int below) const {
        return nq + nq * ns + ((p * ns) + top) * ns + below;
    }
    int total() const { return nq + nq * ns + nq * ns * ns; }
};

DeltaAutomaton top_two_automaton(const PPDA& ppda,
                                 const std::function<bool(int p, int top, int below)>& accept_cfg,
                                 const std::function<bool(int p)>& accept_eps) {
    // below = -1 encodes a length-1 stack
    TopTwoLayout L{ppda.state_count(), ppda.symbol_count()};
    DeltaAutomaton out;
    out.symbol_count = L.ns;
    out.state_names.resize(L.total());
    out.trans.assign(L.total(), std::vector<int>(L.ns, 0));
    for (int p = 0; p < L.nq; ++p) {
        out.control_init.push_back(L.eps(p));
        out.state_names[L.eps(p)] = ppda.states[p] + "/eps";
        for (int a = 0; a < L.ns; ++a) out.trans[L.eps(p)][a] = L.one(p, a);
        if (accept_eps(p)) out.accepting.insert(L.eps(p));
        for (int top = 0; top < L.ns; ++top) {
            out.state_names[L.one(p, top)] = ppda.states[p] + "/" + ppda.alphabet[top];
            // reading another symbol moves it on top of the current one
            for (int a = 0; a < L.ns; ++a) out.trans[L.one(p, top)][a] = L.two(p, a, top);
            if (accept_cfg(p, top, -1)) out.accepting.insert(L.one(p, top));
            for (int below = 0; below < L.ns; ++below) {
                out.state_names[L.two(p, top, below)] =
                    ppda.states[p] + "/" + ppda.alphabet[top] + "," + ppda.alphabet[below];
                for (int a = 0; a < L.ns; ++a) out.trans[L.two(p, top, below)][a] = L.two(p, a, top);
                if (accept_cfg(p, top, below)) out.accepting.insert(L.two(p, top, below));
            }
        }
    }
    return out;
}

} // namespace

DeltaAutomaton sat_next_qual(const PPDA& ppda, const SimpleSet& c, NextMode mode) {
    auto succ_in_c = [&](const Rule& r, int below) {
        if (r.rhs_stack.empty()) {
            if (below < 0) return c.eps_states.count(r.rhs_state) > 0;
            return c.heads.count(Head{r.rhs_state, below}) > 0;
        }
        return c.heads.count(Head{r.rhs_state, r.rhs_stack[0]}) > 0;
    };
    auto accept_cfg = [&](int p, int top, int below) {
        const auto& rules = ppda.rules_for(Head{p, top});
        if (mode == NextMode::Eq1) {
            if (rules.empty()) return false;
            for (int ri : rules) {
                if (!succ_in_c(ppda.rules[ri], below)) return false;
            }
            return true;
        }
        for (int ri : rules) {
            if (succ_in_c(ppda.rules[ri], below)) return false;
        }
        return true;
    };
    auto accept_eps = [&](int) { return mode == NextMode::Eq0; }; // no successors at all
    return top_two_automaton(ppda, accept_cfg, accept_eps);
}

// ---------------------------------------------------------------------------
// until subset constructions

namespace {

/// Forward DFA over subsets of Q reading the stack top-down, then converted
/// to the bottom-up interface via reverse+determinize, one component per
/// control state.
struct SubsetAutomaton {
    std::map<std::set<int>, int> ids;
    std::vector<std::set<int>> subsets;
    std::vector<std::vector<int>> trans; // [id][symbol]
    int sink = -1;                       // rejecting absorbing state

    int id_of(const std::set<int>& s) {
        auto it = ids.find(s);
        if (it != ids.end()) return it->second;
        int id = static_cast<int>(subsets.size());
        ids.emplace(s, id);
        subsets.push_back(s);
        trans.emplace_back();
        return id;
    }
};

DeltaAutomaton assemble_from_topdown(const PPDA& ppda,
                                     const std::vector<Dfa>& per_state_reversed) {
    // disjoint union; control p starts its component
    DeltaAutomaton out;
    out.symbol_count = ppda.symbol_count();
    int offset = 0;
    for (int p = 0; p < ppda.state_count(); ++p) {
        const Dfa& d = per_state_reversed[p];
        for (size_t s = 0; s < d.trans.size(); ++s) {
            out.state_names.push_back(ppda.states[p] + "#" + std::to_string(s));
            out.trans.emplace_back(out.symbol_count, 0);
            for (int a = 0; a < out.symbol_count; ++a)
                out.trans.back()[a] = offset + d.trans[s][a];
            if (d.accepting.count(static_cast<int>(s)))
                out.accepting.insert(offset + static_cast<int>(s));
        }
        out.control_init.push_back(offset + d.initial);
        offset += static_cast<int>(d.trans.size());
    }
    return out;
}

} // namespace

DeltaAutomaton sat_until_eq1(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                             const Oracle& oracle) {
    int nq = ppda.state_count();
    int ns = ppda.symbol_count();

    MonotoneSystem sys = build_until_system(ppda, c1, c2);
    BooleanSystem bsys = boolean_abstraction(sys);
    // R(qX) = {r | [qXr] > 0}
    auto r_set = [&](const Head& h) {
        std::set<int> r;
        for (int q = 0; q < nq; ++q) {
            if (var_positive(bsys, sys, VarId{VarId::Kind::PopTo, h, q})) r.insert(q);
        }
        return r;
    };
    // sum predicate [qX.] + sum_{r in R} [qXr] = 1, decided through the
    // C2-with-all-eps reformulation (the eps outcomes not in R are 0).
    SimpleSet c2_all_eps = c2;
    for (int q = 0; q < nq; ++q) c2_all_eps.eps_states.insert(q);
    std::map<std::pair<int, int>, bool> sum_one;
    for (int q = 0; q < nq; ++q) {
        for (int x = 0; x < ns; ++x) {
            OracleAnswer a = oracle.until_one(ppda, c1, c2_all_eps, Head{q, x});
            if (a.verdict == Verdict::Unknown)
                throw UndecidedPredicate("sat_until_eq1: predicate [" + ppda.head_name(Head{q, x}) +
                                         ",*]+sum=1 undecided: " + a.note);
            sum_one[{q, x}] = a.verdict == Verdict::True;
        }
    }

    std::vector<Dfa> components;
    for (int p = 0; p < nq; ++p) {
        SubsetAutomaton sa;
        int init = sa.id_of({p});
        int sink = sa.id_of(std::set<int>{-1}); // rejecting trap
        sa.sink = sink;
        for (int id = 0; id < static_cast<int>(sa.subsets.size()); ++id) {
            sa.trans[id].assign(ns, sink);
            if (id == sink) {
                for (int a = 0; a < ns; ++a) sa.trans[id][a] = sink;
                continue;
            }
            const std::set<int> cur = sa.subsets[id];
            for (int a = 0; a < ns; ++a) {
                bool ok = true;
                std::set<int> next;
                for (int q : cur) {
                    if (!sum_one[{q, a}]) {
                        ok = false;
                        break;
                    }
                    std::set<int> r = r_set(Head{q, a});
                    next.insert(r.begin(), r.end());
                }
                sa.trans[id][a] = ok ? sa.id_of(next) : sink;
            }
        }
        Dfa fwd;
        fwd.symbol_count = ns;
        fwd.initial = init;
        fwd.trans = sa.trans;
        for (int id = 0; id < static_cast<int>(sa.subsets.size()); ++id) {
            if (id == sa.sink) continue;
            bool fin = true;
            for (int q : sa.subsets[id]) {
                if (!c2.eps_states.count(q)) {
                    fin = false;
                    break;
                }
            }
            if (fin) fwd.accepting.insert(id);
        }
        components.push_back(reverse_determinize(fwd));
    }
    return assemble_from_topdown(ppda, components);
}

DeltaAutomaton sat_until_eq0(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2) {
    int nq = ppda.state_count();
    int ns = ppda.symbol_count();
    MonotoneSystem sys = build_until_system(ppda, c1, c2);
    BooleanSystem bsys = boolean_abstraction(sys);
    auto bullet_zero = [&](const Head& h) {
        return !var_positive(bsys, sys, VarId{VarId::Kind::Bullet, h, 0});
    };
    auto r_set = [&](const Head& h) {
        std::set<int> r;
        for (int q = 0; q < nq; ++q) {
            if (var_positive(bsys, sys, VarId{VarId::Kind::PopTo, h, q})) r.insert(q);
        }
        return r;
    };

    std::vector<Dfa> components;
    for (int p = 0; p < nq; ++p) {
        SubsetAutomaton sa;
        int init = sa.id_of({p});
        int sink = sa.id_of(std::set<int>{-1});
        sa.sink = sink;
        for (int id = 0; id < static_cast<int>(sa.subsets.size()); ++id) {
            sa.trans[id].assign(ns, sink);
            if (id == sink) continue;
            const std::set<int> cur = sa.subsets[id];
            for (int a = 0; a < ns; ++a) {
                bool ok = true;
                std::set<int> next;
                for (int q : cur) {
                    if (!bullet_zero(Head{q, a})) {
                        ok = false;
                        break;
                    }
                    std::set<int> r = r_set(Head{q, a});
                    next.insert(r.begin(), r.end());
                }
                sa.trans[id][a] = ok ? sa.id_of(next) : sink;
            }
        }
        Dfa fwd;
        fwd.symbol_count = ns;
        fwd.initial = init;
        fwd.trans = sa.trans;
        for (int id = 0; id < static_cast<int>(sa.subsets.size()); ++id) {
            if (id == sa.sink) continue;
            bool fin = true;
            for (int q : sa.subsets[id]) {
                if (c2.eps_states.count(q)) {
                    fin = false;
                    break;
                }
            }
            if (fin) fwd.accepting.insert(id);
        }
        components.push_back(reverse_determinize(fwd));
    }
    return assemble_from_topdown(ppda, components);
}

// ---------------------------------------------------------------------------
// the checker

namespace {

DeltaAutomaton check_rec(const PPDA& ppda, const FormulaPtr& f, const RegularValuation& nu,
                         const Oracle& oracle) {
    switch (f->kind) {
        case Formula::Kind::True: return universal_automaton(ppda);
        case Formula::Kind::False: return empty_automaton(ppda);
        case Formula::Kind::Atom: {
            auto it = nu.atoms.find(f->atom);
            if (it == nu.atoms.end())
                throw std::invalid_argument("check_qualitative: unbound atom " + f->atom);
            return it->second;
        }
        case Formula::Kind::Not: return complement(check_rec(ppda, f->lhs, nu, oracle));
        case Formula::Kind::And:
            return intersect(check_rec(ppda, f->lhs, nu, oracle),
                             check_rec(ppda, f->rhs, nu, oracle));
        case Formula::Kind::Or:
            return unite(check_rec(ppda, f->lhs, nu, oracle),
                         check_rec(ppda, f->rhs, nu, oracle));
        case Formula::Kind::Next: {
            DeltaAutomaton sub = check_rec(ppda, f->lhs, nu, oracle);
            RegSimReduction red = reduce_to_simple(ppda, {sub});
            bool complemented = f->rel == Rel::Gt || f->rel == Rel::Lt;
            NextMode mode = (f->rel == Rel::Ge || f->rel == Rel::Lt) ? NextMode::Eq1 : NextMode::Eq0;
            DeltaAutomaton prod_aut = sat_next_qual(red.product, red.simple_images[0], mode);
            DeltaAutomaton back = map_back(ppda, red, prod_aut);
            return complemented ? complement(back) : back;
        }
        case Formula::Kind::Until: {
            DeltaAutomaton a1 = check_rec(ppda, f->lhs, nu, oracle);
            DeltaAutomaton a2 = check_rec(ppda, f->rhs, nu, oracle);
            RegSimReduction red = reduce_to_simple(ppda, {a1, a2});
            bool complemented = f->rel == Rel::Gt || f->rel == Rel::Lt;
            DeltaAutomaton prod_aut =
                (f->rel == Rel::Ge || f->rel == Rel::Lt)
                    ? sat_until_eq1(red.product, red.simple_images[0], red.simple_images[1], oracle)
                    : sat_until_eq0(red.product, red.simple_images[0], red.simple_images[1]);
            DeltaAutomaton back = map_back(ppda, red, prod_aut);
            return complemented ? complement(back) : back;
        }
    }
    throw std::logic_error("check_rec: bad node");
}

} // namespace

DeltaAutomaton check_qualitative(const PPDA& ppda, const FormulaPtr& f,
                                 const RegularValuation& nu, const Oracle& oracle) {
    if (!is_qualitative(f))
        throw std::invalid_argument("check_qualitative: formula is not in the qualitative fragment");
    return check_rec(ppda, f, nu, oracle).trimmed();
}

DeltaAutomaton extend_alphabet(const DeltaAutomaton& a, int new_symbol_count) {
    if (new_symbol_count < a.symbol_count)
        throw std::invalid_argument("extend_alphabet: alphabet shrank");
    if (new_symbol_count == a.symbol_count) return a;
    DeltaAutomaton out = a;
    out.symbol_count = new_symbol_count;
    int sink = out.state_count();
    out.state_names.push_back("_sink");
    for (auto& row : out.trans) row.resize(new_symbol_count, sink);
    out.trans.emplace_back(new_symbol_count, sink);
    return out;
}

} // namespace ppmc
