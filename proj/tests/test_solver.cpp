#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"

#include "ppmc/equations.hpp"
#include "ppmc/solver.hpp"

#include <cstdlib>
#include <fstream>

using namespace ppmc;

namespace {

VarId eps_var(const PPDA& p, const std::string& sym) {
    return VarId{VarId::Kind::PopTo, fixtures::head(p, sym), 0};
}
VarId bullet_var(const PPDA& p, const std::string& sym) {
    return VarId{VarId::Kind::Bullet, fixtures::head(p, sym), 0};
}

MonotoneSystem walk_system(const PPDA& p) {
    return build_until_system(p, SimpleSet::all(p), fixtures::z_topped(p));
}

} // namespace

TEST_CASE("kleene lower bounds increase toward the fixed point") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = eliminate_zero_vars(walk_system(p));
    KleeneResult k100 = kleene_lower(sys, KleeneStop{100, std::nullopt});
    Rational l = sys.value_of(eps_var(p, "I"), k100.lower);
    CHECK(l >= Rational(98, 100));
    CHECK(l < Rational(1));

    // monotone in iteration count
    KleeneResult k10 = kleene_lower(sys, KleeneStop{10, std::nullopt});
    CHECK(sys.value_of(eps_var(p, "I"), k10.lower) <= l);
}

TEST_CASE("kleene converges to 1/2 from below at x = 2/3") {
    PPDA p = fixtures::walk_two_thirds();
    MonotoneSystem sys = eliminate_zero_vars(walk_system(p));
    Valuation prev(sys.size(), Rational(0));
    KleeneResult k = kleene_lower(sys, KleeneStop{200, std::nullopt});
    Rational l = sys.value_of(eps_var(p, "I"), k.lower);
    CHECK(l <= Rational(1, 2));
    CHECK(l >= Rational(49, 100));
}

TEST_CASE("pinned-only system reaches its fixed point immediately") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = build_until_system(p, SimpleSet::none(), SimpleSet::none());
    KleeneResult k = kleene_lower(sys, KleeneStop{std::nullopt, std::nullopt});
    CHECK(k.fixpoint);
    CHECK(k.iterations <= 1);
}

TEST_CASE("certify_upper on the known least solution") {
    PPDA p = fixtures::walk_two_thirds();
    MonotoneSystem sys = walk_system(p);
    Valuation mu(sys.size());
    mu[*sys.index_of(eps_var(p, "I"))] = Rational(1, 2);
    mu[*sys.index_of(eps_var(p, "D"))] = Rational(1);
    mu[*sys.index_of(bullet_var(p, "I"))] = Rational(0);
    mu[*sys.index_of(bullet_var(p, "D"))] = Rational(0);
    CHECK(certify_upper(sys, mu));

    Valuation below = mu;
    below[*sys.index_of(eps_var(p, "I"))] = Rational(49, 100);
    CHECK_FALSE(certify_upper(sys, below));
}

TEST_CASE("all-ones certifies exactly when F(1) <= 1") {
    // at x = 1/2 the bullet rows have mass exactly 1 at the all-ones point
    PPDA half = fixtures::walk_half();
    MonotoneSystem s_half = walk_system(half);
    CHECK(certify_upper(s_half, Valuation(s_half.size(), Rational(1))));
    // at x = 2/3 the <I,.> row evaluates to 4/3 at all-ones
    PPDA tt = fixtures::walk_two_thirds();
    MonotoneSystem s_tt = walk_system(tt);
    CHECK_FALSE(certify_upper(s_tt, Valuation(s_tt.size(), Rational(1))));
    // after zero elimination the offending row is gone
    MonotoneSystem red = eliminate_zero_vars(s_tt);
    CHECK(certify_upper(red, Valuation(red.size(), Rational(1))));
}

TEST_CASE("find_upper brackets the x = 2/3 value within 1/1000") {
    PPDA p = fixtures::walk_two_thirds();
    MonotoneSystem sys = walk_system(p);
    UpperResult up = find_upper(sys, Rational(1, 1000));
    REQUIRE(up.certified);
    Rational u = up.upper[*sys.index_of(eps_var(p, "I"))];
    CHECK(u >= Rational(1, 2));
    CHECK(u <= Rational(1, 2) + Rational(1, 1000));
}

TEST_CASE("find_upper accepts the trivial upper bound for value-1 components") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = walk_system(p);
    UpperResult up = find_upper(sys, Rational(1, 10));
    REQUIRE(up.certified);
    CHECK(up.upper[*sys.index_of(eps_var(p, "I"))] <= Rational(1));
}

TEST_CASE("pinned-only system returns its constants exactly") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = build_until_system(p, SimpleSet::none(), SimpleSet::none());
    UpperResult up = find_upper(sys, Rational(1, 100));
    CHECK(up.certified);
    CHECK(up.upper.empty()); // everything pinned
    Brackets b = solve_brackets(sys, Rational(1, 100));
    CHECK(b.var_interval(sys, eps_var(p, "I")) == Interval::point(Rational(0)));
}

TEST_CASE("solve_brackets meets the requested width on the walk") {
    for (auto* mk : {&fixtures::walk_third, &fixtures::walk_half, &fixtures::walk_two_thirds,
                     &fixtures::walk_three_quarters}) {
        PPDA p = mk();
        MonotoneSystem sys = walk_system(p);
        Brackets b = solve_brackets(sys, Rational(1, 2000));
        CHECK(b.width_met);
        CHECK(b.hi_certified);
        Interval iv = b.var_interval(sys, eps_var(p, "I"));
        CHECK(iv.width() <= Rational(1, 2000));
    }
}

TEST_CASE("exact linear least fixed points") {
    // A -> 1/2 B | 1/2 eps ; B -> 1/2 A | 1/2 eps has [A,eps] = [B,eps] = 1
    PPDA p = parse_ppda("pbpa\nalphabet A B;\nA -> 1/2 B;\nA -> 1/2 ;\nB -> 1/2 A;\nB -> 1/2 ;\n");
    MonotoneSystem sys = eliminate_zero_vars(build_termination_system(p));
    auto mu = solve_linear_lfp(sys);
    REQUIRE(mu.has_value());
    QueryPoly g = head_until_sum(sys, p, dead_set(p), fixtures::head(p, "A"));
    CHECK(g.eval(*mu) == Rational(1));

    // sub-stochastic variant: A -> 1/2 A | 1/4 eps leaks mass into a stuck head
    PPDA q = parse_ppda(
        "pbpa\nalphabet A S;\nA -> 1/2 A;\nA -> 1/4 ;\nA -> 1/4 S;\nS -> 1 S;\n");
    MonotoneSystem sys2 = eliminate_zero_vars(build_until_system(q, SimpleSet::all(q),
                                                                 SimpleSet::eps_only(q)));
    auto mu2 = solve_linear_lfp(sys2);
    REQUIRE(mu2.has_value());
    // [A,eps] = 1/2 [A,eps] + 1/4  =>  1/2
    CHECK(sys2.value_of(eps_var(q, "A"), *mu2) == Rational(1, 2));
}

TEST_CASE("until_probability brackets the worked example values") {
    struct Case {
        PPDA p;
        Rational expected;
    };
    std::vector<Case> cases;
    cases.push_back({fixtures::walk_third(), Rational(1)});
    cases.push_back({fixtures::walk_half(), Rational(1)});
    cases.push_back({fixtures::walk_two_thirds(), Rational(1, 4)});
    cases.push_back({fixtures::walk_three_quarters(), Rational(1, 9)});
    for (auto& c : cases) {
        IntervalResult r = until_probability(c.p, SimpleSet::all(c.p), fixtures::z_topped(c.p),
                                             fixtures::config(c.p, "IIZ"), Rational(1, 1000));
        CHECK(r.width_met);
        CHECK(r.value.contains(c.expected));
        CHECK(r.value.width() <= Rational(1, 1000));
    }
}

TEST_CASE("until_probability base cases at the empty stack") {
    PPDA p = fixtures::walk_half();
    SimpleSet c2_eps = SimpleSet::eps_only(p);
    IntervalResult in_c2 = until_probability(p, SimpleSet::all(p), c2_eps,
                                             fixtures::config(p, "eps"), Rational(1, 10));
    CHECK(in_c2.value == Interval::point(Rational(1)));
    IntervalResult not_in = until_probability(p, SimpleSet::all(p), fixtures::z_topped(p),
                                              fixtures::config(p, "eps"), Rational(1, 10));
    CHECK(not_in.value == Interval::point(Rational(0)));
}

TEST_CASE("decide via intervals separates away from the threshold") {
    PPDA p = fixtures::walk_two_thirds();
    Oracle oracle;
    // C2 = Z-topped plus the empty stack, so the until sum for I is
    // [I,.] + [I,eps] = 0 + 1/2
    SimpleSet c2 = fixtures::z_topped(p);
    c2.eps_states.insert(0);
    MonotoneSystem sys = build_until_system(p, SimpleSet::all(p), c2);
    DecisionQuery q;
    q.system = sys;
    q.expr = head_until_sum(sys, p, c2, fixtures::head(p, "I"));
    q.bound = Rational(3, 4);
    q.rel = Rel::Lt; // value 1/2 < 3/4
    OracleAnswer a = oracle.decide(q, p, Backend::Intervals);
    CHECK(a.verdict == Verdict::True);

    q.rel = Rel::Eq;
    q.bound = Rational(1, 2);
    OracleAnswer eq = oracle.decide(q, p, Backend::Intervals);
    CHECK(eq.verdict == Verdict::Unknown); // at the exact value, inherent
    CHECK(eq.evidence.has_value());
    CHECK(eq.evidence->contains(Rational(1, 2)));
}

TEST_CASE("decide trivial facts exactly") {
    PPDA p = fixtures::walk_half();
    Oracle oracle;
    MonotoneSystem sys = walk_system(p);
    DecisionQuery q;
    q.system = sys;
    // <Z,eps> is pinned to zero
    q.expr.constant = sys.pins.at(eps_var(p, "Z"));
    q.rel = Rel::Le;
    q.bound = Rational(0);
    OracleAnswer a = oracle.decide(q, p, Backend::Intervals);
    CHECK(a.verdict == Verdict::True);
    CHECK(a.method == "trivial");
}

TEST_CASE("export_smt emits a deterministic QF_NRA script") {
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = walk_system(p);
    DecisionQuery q;
    q.system = sys;
    q.expr = head_until_sum(sys, p, fixtures::z_topped(p), fixtures::head(p, "I"));
    q.rel = Rel::Ge;
    q.bound = Rational(1);
    q.label = "P(I, C1 U C2)";
    std::string script = export_smt(q, p);
    CHECK(script.find("(set-logic QF_NRA)") != std::string::npos);
    CHECK(script.find("(check-sat)") != std::string::npos);
    CHECK(script.find("; post-fixed point: F(x) <= x") != std::string::npos);
    // >= queries assert the negated form
    CHECK(script.find("(assert (< ") != std::string::npos);
    // deterministic
    CHECK(script == export_smt(q, p));
}

TEST_CASE("external backend maps sat/unsat through scripted solvers") {
    // The stand-in solver commands below return fixed answers whose
    // correctness for these specific queries was established by hand:
    // for x = 1/2 every post-fixed point has x_I >= 1, so 'x_I < 1' is
    // unsatisfiable; 'x_I <= 1' is satisfiable (mu itself).
    PPDA p = fixtures::walk_half();
    MonotoneSystem sys = walk_system(p);
    DecisionQuery q;
    q.system = sys;
    q.expr = head_until_sum(sys, p, fixtures::z_topped(p), fixtures::head(p, "I"));

    SolverOptions unsat_opts;
    unsat_opts.solver_cmd = "echo unsat #";
    Oracle unsat_oracle(unsat_opts);
    q.rel = Rel::Ge;
    q.bound = Rational(1);
    OracleAnswer a = unsat_oracle.decide(q, p, Backend::External);
    CHECK(a.verdict == Verdict::True); // unsat => the >= holds

    SolverOptions sat_opts;
    sat_opts.solver_cmd = "echo sat #";
    Oracle sat_oracle(sat_opts);
    q.rel = Rel::Le;
    OracleAnswer b = sat_oracle.decide(q, p, Backend::External);
    CHECK(b.verdict == Verdict::True); // sat => the <= holds

    SolverOptions broken;
    broken.solver_cmd = "false";
    Oracle broken_oracle(broken);
    OracleAnswer c = broken_oracle.decide(q, p, Backend::External);
    CHECK(c.verdict == Verdict::Unknown);

    Oracle unconfigured;
    OracleAnswer d = unconfigured.decide(q, p, Backend::External);
    CHECK(d.verdict == Verdict::Unknown);
}

TEST_CASE("until_one: the spectral criterion matches the closed forms") {
    // [I,eps] = 1 iff x <= 1/2; [D,eps] = 1 iff x >= 1/2; exact, no SMT
    struct Case {
        PPDA p;
        bool i_one;
        bool d_one;
    };
    std::vector<Case> cases;
    cases.push_back({fixtures::walk_third(), true, false});
    cases.push_back({fixtures::walk_half(), true, true});
    cases.push_back({fixtures::walk_two_thirds(), false, true});
    cases.push_back({fixtures::walk_three_quarters(), false, true});
    Oracle oracle;
    for (auto& c : cases) {
        SimpleSet diff = SimpleSet::all(c.p); // C1 \ C2 with C2 empty
        SimpleSet eps = SimpleSet::eps_only(c.p);
        OracleAnswer ai = oracle.until_one(c.p, diff, eps, fixtures::head(c.p, "I"));
        OracleAnswer ad = oracle.until_one(c.p, diff, eps, fixtures::head(c.p, "D"));
        CHECK(ai.verdict == (c.i_one ? Verdict::True : Verdict::False));
        CHECK(ad.verdict == (c.d_one ? Verdict::True : Verdict::False));
        CHECK(ai.method != "intervals"); // exact layer, not bracket refutation
    }
}

TEST_CASE("until_one handles pins and escapes") {
    PPDA p = fixtures::walk_half();
    Oracle oracle;
    SimpleSet all = SimpleSet::all(p);
    SimpleSet z = fixtures::z_topped(p);
    // head in C2: probability 1 trivially
    OracleAnswer a = oracle.until_one(p, all, z, fixtures::head(p, "Z"));
    CHECK(a.verdict == Verdict::True);
    CHECK(a.method == "pinned");
    // C1 empty: nothing satisfiable
    OracleAnswer b = oracle.until_one(p, SimpleSet::none(), z, fixtures::head(p, "I"));
    CHECK(b.verdict == Verdict::False);
    // escape: C1 missing D means D-topped configurations break the until
    SimpleSet c1 = SimpleSet::all(p);
    c1.heads.erase(fixtures::head(p, "D"));
    SimpleSet c2_eps = SimpleSet::eps_only(p);
    OracleAnswer c = oracle.until_one(p, c1, c2_eps, fixtures::head(p, "Z"));
    CHECK(c.verdict == Verdict::False);
    CHECK(c.method == "reachability");
}

TEST_CASE("irun probabilities of the walk") {
    PPDA half = fixtures::walk_half();
    IntervalResult z = irun_probability(half, fixtures::head(half, "Z"), Rational(1, 1000));
    CHECK(z.value == Interval::point(Rational(1))); // Z never pops: exact

    IntervalResult i = irun_probability(half, fixtures::head(half, "I"), Rational(1, 100));
    CHECK(i.value.lo == Rational(0));
    CHECK(i.value.hi <= Rational(1, 100));

    PPDA stuck = parse_ppda("pbpa\nalphabet A;\n");
    IntervalResult s = irun_probability(stuck, fixtures::head(stuck, "A"), Rational(1, 10));
    CHECK(s.value == Interval::point(Rational(0)));
}

TEST_CASE("irun positivity is decided exactly on the walk") {
    Oracle oracle;
    PPDA half = fixtures::walk_half();
    CHECK(irun_positive(half, fixtures::head(half, "Z"), oracle).verdict == Verdict::True);
    CHECK(irun_positive(half, fixtures::head(half, "I"), oracle).verdict == Verdict::False);
    PPDA tq = fixtures::walk_three_quarters();
    CHECK(irun_positive(tq, fixtures::head(tq, "I"), oracle).verdict == Verdict::True);
    CHECK(irun_positive(tq, fixtures::head(tq, "D"), oracle).verdict == Verdict::False);
}

TEST_CASE("bisect_bounds issues exactly ceil(-log2 lambda) oracle rounds") {
    PPDA p = fixtures::walk_two_thirds();
    Oracle oracle;
    SimpleSet all = SimpleSet::all(p);
    SimpleSet z = fixtures::z_topped(p);
    for (int k = 1; k <= 6; ++k) {
        Rational lambda(1, BigInt(1) << k);
        BisectResult r = bisect_bounds(p, all, z, fixtures::head(p, "I"), lambda, oracle);
        CHECK(r.oracle_rounds == k);
        CHECK(r.value.width() <= lambda);
        // value is [I,.] + 0 = ... the head-until sum for I is [I,eps]*0 +
        // [I,.]; with C2 eps empty the sum is just [I,.] = 0 -- use a
        // target containing eps instead for a nontrivial value below.
    }
    // nontrivial: C2 = {Z-topped} + eps so the sum is [I,.] + [I,eps] = 1/2
    SimpleSet z_eps = z;
    z_eps.eps_states.insert(0);
    BisectResult r = bisect_bounds(p, all, z_eps, fixtures::head(p, "I"), Rational(1, 8), oracle);
    CHECK(r.oracle_rounds == 3);
    CHECK(r.value.width() <= Rational(1, 8));
    CHECK(r.value.contains(Rational(1, 2)));
}

TEST_CASE("compare_until on the walk") {
    Oracle oracle;
    PPDA p = fixtures::walk_third();
    // termination of I at x = 1/3 is 1: decided by the exact layer through
    // compare? compare goes through decide; >= 1 on the bracket cannot
    // close, so use the spectral path via until_one for =1 facts and
    // brackets for separations:
    OracleAnswer sep = compare_until(p, SimpleSet::all(p), fixtures::z_topped(p),
                                     fixtures::config(p, "IIZ"), Rel::Ge, Rational(1, 2), oracle);
    CHECK(sep.verdict == Verdict::True); // value 1 >= 1/2 separates

    PPDA tt = fixtures::walk_two_thirds();
    OracleAnswer no = compare_until(tt, SimpleSet::all(tt), fixtures::z_topped(tt),
                                    fixtures::config(tt, "IIZ"), Rel::Ge, Rational(1, 2), oracle);
    CHECK(no.verdict == Verdict::False); // value 1/4 < 1/2

    OracleAnswer triv = compare_until(tt, SimpleSet::all(tt), fixtures::z_topped(tt),
                                      fixtures::config(tt, "IIZ"), Rel::Ge, Rational(0), oracle);
    CHECK(triv.verdict == Verdict::True); // >= 0 always
}

TEST_CASE("quantitative termination equals min(1, (1-x)/x) via brackets") {
    PPDA p = fixtures::walk_three_quarters();
    IntervalResult r = until_probability(p, SimpleSet::all(p), dead_set(p),
                                         fixtures::config(p, "I"), Rational(1, 1000));
    CHECK(r.value.contains(Rational(1, 3)));
    CHECK(r.value.width() <= Rational(1, 1000));
}
