#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"

#include "ppmc/equations.hpp"
#include "ppmc/sim.hpp"

#include <set>

using namespace ppmc;

namespace {

VarId eps_var(const PPDA& p, const std::string& sym) {
    return VarId{VarId::Kind::PopTo, fixtures::head(p, sym), 0};
}
VarId bullet_var(const PPDA& p, const std::string& sym) {
    return VarId{VarId::Kind::Bullet, fixtures::head(p, sym), 0};
}

} // namespace

TEST_CASE("the walk until system matches the worked example") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = build_until_system(p, SimpleSet::all(p), fixtures::z_topped(p));

    // <Z,.> pinned to 1, Z not in G1\G2 so <Z,eps> pinned... no: Z in G2
    // means <Z,eps> is pinned to 0 and <Z,.> to 1.
    CHECK(sys.pins.at(bullet_var(p, "Z")) == Rational(1));
    CHECK(sys.pins.at(eps_var(p, "Z")) == Rational(0));

    // <I,eps> = 1/2 <I,eps>^2 + 1/2
    auto idx = sys.index_of(eps_var(p, "I"));
    REQUIRE(idx.has_value());
    const Polynomial& poly = sys.rhs[*idx];
    CHECK(poly.constant == Rational(1, 2));
    REQUIRE(poly.monomials.size() == 1);
    CHECK(poly.monomials[0].coeff == Rational(1, 2));
    CHECK(poly.monomials[0].v1 == *idx);
    CHECK(poly.monomials[0].v2 == *idx);

    // canonical dump is stable
    std::string dump = sys.dump(p);
    CHECK(dump.find("<I,eps> = 1/2 + 1/2*<I,eps>*<I,eps>") != std::string::npos);
    CHECK(dump.find("<Z,*> := 1 (pinned)") != std::string::npos);
}

TEST_CASE("F(0) of the example system") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = build_until_system(p, SimpleSet::all(p), fixtures::z_topped(p));
    Valuation zero(sys.size(), Rational(0));
    Valuation once = sys.evaluate(zero);
    CHECK(sys.value_of(eps_var(p, "I"), once) == Rational(1, 2));
    CHECK(sys.value_of(eps_var(p, "D"), once) == Rational(1, 2));
    CHECK(sys.value_of(bullet_var(p, "Z"), once) == Rational(1)); // pinned
}

TEST_CASE("pinned variables never change under evaluation") {
    PPDA p = fixtures::walk_two_thirds();
    MonotoneSystem sys = build_until_system(p, SimpleSet::all(p), fixtures::z_topped(p));
    Valuation v(sys.size(), Rational(1, 3));
    Valuation w = sys.evaluate(v);
    CHECK(sys.pins.at(bullet_var(p, "Z")) == Rational(1));
    CHECK(static_cast<int>(w.size()) == sys.size());
}

TEST_CASE("C2 = everything pins all bullets to one") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = build_until_system(p, SimpleSet::all(p), SimpleSet::all(p));
    for (const auto& sym : {"Z", "I", "D"}) {
        CHECK(sys.pins.at(bullet_var(p, sym)) == Rational(1));
    }
    // C1 = C2 = {} pins everything to zero
    MonotoneSystem zero = build_until_system(p, SimpleSet::none(), SimpleSet::none());
    CHECK(zero.size() == 0);
    for (const auto& [v, val] : zero.pins) CHECK(val == Rational(0));
}

TEST_CASE("monotone evaluation and Kleene chain") {
    PPDA p = fixtures::walk_two_thirds();
    MonotoneSystem sys = build_until_system(p, SimpleSet::all(p), fixtures::z_topped(p));
    Valuation v(sys.size(), Rational(0));
    Valuation prev = v;
    for (int k = 0; k < 200; ++k) {
        Valuation next = sys.evaluate(prev);
        for (int i = 0; i < sys.size(); ++i) {
            CHECK(next[i] >= prev[i]);
            CHECK(next[i] <= Rational(1));
        }
        // keep the rationals small: this test only checks monotonicity of
        // the first few exact steps, then stops
        if (k >= 12) break;
        prev = std::move(next);
    }
}

TEST_CASE("boolean abstraction of the example") {
    PPDA p = fixtures::walk_two_thirds();
    MonotoneSystem sys = build_until_system(p, SimpleSet::all(p), fixtures::z_topped(p));
    BooleanSystem b = boolean_abstraction(sys);
    CHECK(var_positive(b, sys, eps_var(p, "I")));
    CHECK(var_positive(b, sys, eps_var(p, "D")));
    CHECK_FALSE(var_positive(b, sys, bullet_var(p, "I"))); // no Z below pure-I stacks
    CHECK(var_positive(b, sys, bullet_var(p, "Z")));       // pinned 1
}

TEST_CASE("zero elimination drops exactly the boolean-false variables") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = build_until_system(p, SimpleSet::all(p), fixtures::z_topped(p));
    MonotoneSystem red = eliminate_zero_vars(sys);
    CHECK(red.size() < sys.size());
    CHECK(red.pins.at(bullet_var(p, "I")) == Rational(0));
    CHECK(red.index_of(eps_var(p, "I")).has_value());
    // the reduced system's equations mention only live variables
    for (const Polynomial& poly : red.rhs) {
        for (const Monomial& m : poly.monomials) {
            CHECK(m.v1 >= 0);
            CHECK(m.v1 < red.size());
        }
    }
}

namespace {

/// Independent oracle: explicit bounded path search for positivity of
/// <pXq>: BFS through configurations (stack bound, depth bound) staying in
/// C1\C2, looking for q-eps.
bool bounded_pop_search(const PPDA& p, const SimpleSet& c1, const SimpleSet& c2, Head start,
                        StateId target, size_t stack_bound, int depth_bound) {
    std::set<Configuration> seen;
    std::vector<Configuration> frontier{Configuration{start.state, {start.symbol}}};
    if (c2.heads.count(start) || !c1.heads.count(start)) return false;
    for (int d = 0; d < depth_bound && !frontier.empty(); ++d) {
        std::vector<Configuration> next;
        for (const Configuration& c : frontier) {
            for (auto& [succ, prob] : successors(p, c)) {
                if (succ.empty_stack()) {
                    if (succ.state == target) return true;
                    continue;
                }
                if (succ.stack.size() > stack_bound) continue;
                if (!c1.heads.count(succ.head()) || c2.heads.count(succ.head())) continue;
                if (seen.insert(succ).second) next.push_back(succ);
            }
        }
        frontier = std::move(next);
    }
    return false;
}

PPDA random_ppda(uint64_t seed) {
    SplitMix64 rng(seed);
    int nq = 1 + static_cast<int>(rng.next() % 2);
    int ns = 2 + static_cast<int>(rng.next() % 2);
    PPDA p;
    for (int i = 0; i < nq; ++i) p.states.push_back("q" + std::to_string(i));
    for (int i = 0; i < ns; ++i) p.alphabet.push_back(std::string(1, char('A' + i)));
    for (int q = 0; q < nq; ++q) {
        for (int x = 0; x < ns; ++x) {
            int nrules = static_cast<int>(rng.next() % 4); // 0..3, 0 = stuck head
            if (nrules == 0) continue;
            for (int r = 0; r < nrules; ++r) {
                Rule rule;
                rule.lhs = Head{q, x};
                rule.rhs_state = static_cast<int>(rng.next() % nq);
                int len = static_cast<int>(rng.next() % 3);
                for (int k = 0; k < len; ++k)
                    rule.rhs_stack.push_back(static_cast<int>(rng.next() % ns));
                rule.prob = Rational(1, nrules);
                p.rules.push_back(rule);
            }
        }
    }
    p.reindex();
    return p;
}

} // namespace

TEST_CASE("boolean lfp positivity agrees with bounded path search") {
    int checked = 0;
    for (uint64_t seed = 1; seed <= 120; ++seed) {
        PPDA p = random_ppda(seed);
        if (!validate(p).ok()) continue;
        SimpleSet c1 = SimpleSet::all(p);
        SimpleSet c2; // empty: pure emptying
        MonotoneSystem sys = build_until_system(p, c1, c2);
        BooleanSystem b = boolean_abstraction(sys);
        for (int q = 0; q < p.state_count(); ++q) {
            for (int x = 0; x < p.symbol_count(); ++x) {
                for (int t = 0; t < p.state_count(); ++t) {
                    bool lfp = var_positive(b, sys, VarId{VarId::Kind::PopTo, Head{q, x}, t});
                    bool found = bounded_pop_search(p, c1, c2, Head{q, x}, t, 6, 200);
                    // bounded search under-approximates: found => lfp
                    if (found) CHECK(lfp);
                    ++checked;
                }
            }
        }
    }
    CHECK(checked > 300);
}
