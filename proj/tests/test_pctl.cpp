#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "finite_oracle.hpp"
#include "fixtures.hpp"

#include "ppmc/pctl.hpp"
#include "ppmc/sim.hpp"

using namespace ppmc;

namespace {

DeltaAutomaton z_atom(const PPDA& p) {
    return simple_to_automaton(p, fixtures::z_topped(p));
}

} // namespace

TEST_CASE("formula parsing") {
    FormulaPtr f = parse_formula("a U[>=1] b");
    CHECK(f->kind == Formula::Kind::Until);
    CHECK(f->rel == Rel::Ge);
    CHECK(f->rho == Rational(1));
    CHECK(is_qualitative(f));

    FormulaPtr g = parse_formula("X[>1/2] tt");
    CHECK(g->kind == Formula::Kind::Next);
    CHECK(g->rel == Rel::Gt);
    CHECK(g->rho == Rational(1, 2));
    CHECK_FALSE(is_qualitative(g));

    FormulaPtr h = parse_formula("!(a U[>=1] b)");
    CHECK(h->kind == Formula::Kind::Not);
    CHECK(is_qualitative(h));

    CHECK(formula_to_string(parse_formula("(a U[=1] b)")) == "(a U[=1] b)");
    CHECK_THROWS_AS(parse_formula("a U[>=3/2] b"), ParseError);
    CHECK_THROWS_AS(parse_formula("a &"), ParseError);
}

TEST_CASE("negation free transformation") {
    PPDA p = fixtures::walk_half();
    RegularValuation nu;
    nu.atoms["a"] = z_atom(p);
    nu.atoms["b"] = simple_to_automaton(p, SimpleSet::eps_only(p));

    auto [f1, nu1] = negation_free(parse_formula("!!a"), nu);
    CHECK(formula_to_string(f1) == "a");

    auto [f2, nu2] = negation_free(parse_formula("!(a U[>=1] b)"), nu);
    CHECK(f2->kind == Formula::Kind::Until);
    CHECK(f2->rel == Rel::Lt);
    CHECK(f2->rho == Rational(1));

    // extensional check of !(a & !b) on all configurations up to length 4
    FormulaPtr original = parse_formula("!(a & !b)");
    auto [f3, nu3] = negation_free(original, nu);
    // no negations remain
    std::function<bool(const FormulaPtr&)> has_not = [&](const FormulaPtr& f) {
        if (f->kind == Formula::Kind::Not) return true;
        if (f->lhs && has_not(f->lhs)) return true;
        if (f->rhs && has_not(f->rhs)) return true;
        return false;
    };
    CHECK_FALSE(has_not(f3));
    // membership equality via the finite oracle on a pop/swap system
    PPDA fin = parse_ppda("pbpa\nalphabet Z I D;\nZ -> 1 ;\nI -> 1/2 Z;\nI -> 1/2 ;\nD -> 1 D;\n");
    RegularValuation nuf;
    nuf.atoms["a"] = z_atom(fin);
    nuf.atoms["b"] = simple_to_automaton(fin, SimpleSet::eps_only(fin));
    auto [ff, nuff] = negation_free(original, nuf);
    auto chain = finite_oracle::FiniteChain::build(fin, 4);
    auto lhs = chain.eval(original, nuf.atoms);
    auto rhs = chain.eval(ff, nuff.atoms);
    CHECK(lhs == rhs);
}

TEST_CASE("one-step qualitative sets on the walk") {
    PPDA p = fixtures::walk_half();
    SimpleSet everything = SimpleSet::all(p);
    DeltaAutomaton all1 = sat_next_qual(p, everything, NextMode::Eq1);
    // accepts exactly the non-dead configurations
    for (const Configuration& c : enumerate_configurations(p, 3)) {
        bool dead = c.empty_stack() || p.is_stuck(c.head());
        CHECK(all1.accepts(c) == !dead);
    }
    DeltaAutomaton none0 = sat_next_qual(p, SimpleSet::none(), NextMode::Eq0);
    for (const Configuration& c : enumerate_configurations(p, 3)) CHECK(none0.accepts(c));

    // c = {Z-topped}, mode =0: Z has successors IZ, DZ (not Z-topped);
    // IZ's successor Z is Z-topped
    DeltaAutomaton z0 = sat_next_qual(p, fixtures::z_topped(p), NextMode::Eq0);
    CHECK(z0.accepts(fixtures::config(p, "Z")));
    CHECK_FALSE(z0.accepts(fixtures::config(p, "I Z")));
    // enumerate successors as the oracle
    for (const Configuration& c : enumerate_configurations(p, 4)) {
        bool any_in = false;
        for (auto& [s, pr] : successors(p, c)) {
            if (fixtures::z_topped(p).contains(s)) any_in = true;
        }
        CHECK(z0.accepts(c) == !any_in);
    }
}

TEST_CASE("sat_until_eq1 on the walk matches the closed forms") {
    Oracle oracle;
    PPDA half = fixtures::walk_half();
    DeltaAutomaton a_half =
        sat_until_eq1(half, SimpleSet::all(half), fixtures::z_topped(half), oracle);
    CHECK(a_half.accepts(fixtures::config(half, "Z")));
    CHECK(a_half.accepts(fixtures::config(half, "I Z")));
    CHECK(a_half.accepts(fixtures::config(half, "I I Z")));
    CHECK(a_half.accepts(fixtures::config(half, "D D Z")));

    PPDA tt = fixtures::walk_two_thirds();
    DeltaAutomaton a_tt = sat_until_eq1(tt, SimpleSet::all(tt), fixtures::z_topped(tt), oracle);
    CHECK(a_tt.accepts(fixtures::config(tt, "Z")));       // already Z-topped
    CHECK_FALSE(a_tt.accepts(fixtures::config(tt, "I Z"))); // P = [I,eps] = 1/2
    CHECK(a_tt.accepts(fixtures::config(tt, "D Z")));       // [D,eps] = 1

    // C2 = everything: zero-step until holds everywhere
    DeltaAutomaton all2 = sat_until_eq1(half, SimpleSet::all(half), SimpleSet::all(half), oracle);
    SimpleSet all_with_eps = SimpleSet::all(half);
    for (const Configuration& c : enumerate_configurations(half, 3)) {
        CHECK(all2.accepts(c) == all_with_eps.contains(c));
    }
}

TEST_CASE("sat_until_eq0 trivial and reachability cases") {
    PPDA p = fixtures::walk_half();
    DeltaAutomaton none = sat_until_eq0(p, SimpleSet::all(p), SimpleSet::none());
    for (const Configuration& c : enumerate_configurations(p, 3)) CHECK(none.accepts(c));

    DeltaAutomaton everything = sat_until_eq0(p, SimpleSet::all(p), SimpleSet::all(p));
    for (const Configuration& c : enumerate_configurations(p, 3)) CHECK_FALSE(everything.accepts(c));

    // D...D configurations never see Z on top
    DeltaAutomaton z0 = sat_until_eq0(p, SimpleSet::all(p), fixtures::z_topped(p));
    CHECK(z0.accepts(fixtures::config(p, "D")));
    CHECK(z0.accepts(fixtures::config(p, "D D D")));
    CHECK_FALSE(z0.accepts(fixtures::config(p, "Z")));
    CHECK_FALSE(z0.accepts(fixtures::config(p, "I Z")));
    CHECK(z0.accepts(fixtures::config(p, "eps"))); // eps not in C2
}

TEST_CASE("eq1 and eq0 are disjoint unless vacuous") {
    Oracle oracle;
    PPDA p = fixtures::walk_two_thirds();
    DeltaAutomaton one = sat_until_eq1(p, SimpleSet::all(p), fixtures::z_topped(p), oracle);
    DeltaAutomaton zero = sat_until_eq0(p, SimpleSet::all(p), fixtures::z_topped(p));
    for (const Configuration& c : enumerate_configurations(p, 4)) {
        bool both = one.accepts(c) && zero.accepts(c);
        CHECK_FALSE(both);
    }
}

TEST_CASE("check_qualitative: the return-probability-one property") {
    // Z revisits a Z-topped configuration almost surely iff x = 1/2,
    // expressed as X[=1](tt U[=1] atZ)
    Oracle oracle;
    FormulaPtr f = parse_formula("X[=1] (tt U[=1] atZ)");
    REQUIRE(is_qualitative(f));
    struct Case {
        PPDA p;
        bool expected;
    };
    std::vector<Case> cases;
    cases.push_back({fixtures::walk_third(), false});
    cases.push_back({fixtures::walk_half(), true});
    cases.push_back({fixtures::walk_two_thirds(), false});
    for (auto& c : cases) {
        RegularValuation nu;
        nu.atoms["atZ"] = z_atom(c.p);
        DeltaAutomaton sat = check_qualitative(c.p, f, nu, oracle);
        CHECK(sat.accepts(fixtures::config(c.p, "Z")) == c.expected);
    }
}

TEST_CASE("check_qualitative handles tt and negation") {
    Oracle oracle;
    PPDA p = fixtures::walk_half();
    RegularValuation nu;
    nu.atoms["atZ"] = z_atom(p);
    DeltaAutomaton top = check_qualitative(p, parse_formula("tt"), nu, oracle);
    for (const Configuration& c : enumerate_configurations(p, 3)) CHECK(top.accepts(c));

    FormulaPtr f = parse_formula("tt U[=1] atZ");
    DeltaAutomaton sat = check_qualitative(p, f, nu, oracle);
    DeltaAutomaton nsat = check_qualitative(p, Formula::make_not(f), nu, oracle);
    for (const Configuration& c : enumerate_configurations(p, 4)) {
        CHECK(sat.accepts(c) != nsat.accepts(c));
    }
}

TEST_CASE("check_qualitative agrees with the finite oracle on bounded systems") {
    // pop/swap system: finite reachable space, brute-force comparable
    PPDA p = parse_ppda(
        "pbpa\nalphabet Z I D;\n"
        "Z -> 1/2 I;\nZ -> 1/2 D;\n"
        "I -> 1/3 Z;\nI -> 2/3 ;\n"
        "D -> 1 D;\n");
    REQUIRE(validate(p).ok());
    Oracle oracle;
    RegularValuation nu;
    nu.atoms["atZ"] = z_atom(p);
    nu.atoms["atD"] = simple_to_automaton(p, [&] {
        SimpleSet s;
        s.heads.insert(fixtures::head(p, "D"));
        return s;
    }());

    auto chain = finite_oracle::FiniteChain::build(p, 5);
    std::vector<std::string> formulas = {
        "tt U[=1] atZ",
        "tt U[=0] atD",
        "X[=1] atD",
        "X[=0] atZ",
        "(atZ | atD) U[=1] atD",
        "!(tt U[=1] atZ) & !atD",
        "tt U[>0] atZ",
        "X[<1] (tt U[=1] atD)",
    };
    for (const std::string& text : formulas) {
        FormulaPtr f = parse_formula(text);
        REQUIRE(is_qualitative(f));
        DeltaAutomaton sat = check_qualitative(p, f, nu, oracle);
        auto expect = chain.eval(f, nu.atoms);
        for (size_t i = 0; i < chain.configs.size(); ++i) {
            INFO(text, " at ", p.config_name(chain.configs[i]));
            CHECK(sat.accepts(chain.configs[i]) == static_cast<bool>(expect[i]));
        }
    }
}

TEST_CASE("undecided predicates raise a named error") {
    // a genuinely quadratic two-control-state system defeats the internal
    // exact layer, and with no external solver the =1 predicate must be
    // reported, not guessed
    PPDA p = parse_ppda(
        "ppda\nstates p q;\nalphabet X Y;\n"
        "p X -> 1/3 q X X;\np X -> 1/3 p ;\np X -> 1/3 q Y;\n"
        "q X -> 1/2 p X;\nq X -> 1/2 q ;\n"
        "p Y -> 1 p Y X;\n"
        "q Y -> 1/2 q Y;\nq Y -> 1/2 p ;\n");
    REQUIRE(validate(p).ok());
    Oracle oracle;
    CHECK_THROWS_AS(
        sat_until_eq1(p, SimpleSet::all(p), SimpleSet::eps_only(p), oracle),
        UndecidedPredicate);
}

TEST_CASE("extend_alphabet sends new symbols to a rejecting sink") {
    PPDA p = fixtures::walk_half();
    DeltaAutomaton a = z_atom(p);
    DeltaAutomaton wide = extend_alphabet(a, p.symbol_count() + 2);
    CHECK(wide.symbol_count == p.symbol_count() + 2);
    Configuration z = fixtures::config(p, "Z");
    CHECK(wide.accepts(z));
    Configuration fresh{0, {p.symbol_count()}};
    CHECK_FALSE(wide.accepts(fresh));
}
