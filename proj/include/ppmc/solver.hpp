#pragma once

#include "ppmc/equations.hpp"
#include "ppmc/model.hpp"
#include "ppmc/rational.hpp"
#include "ppmc/regsets.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ppmc {

enum class Backend { Auto, Intervals, External };
enum class Rel { Lt, Le, Eq, Ge, Gt };

std::string rel_to_string(Rel r);
std::optional<Rel> rel_from_string(const std::string& s);

enum class Verdict { True, False, Unknown };

struct OracleAnswer {
    Verdict verdict = Verdict::Unknown;
    std::string method;                 // "pinned", "linear", "spectral",
                                        // "intervals", "external", ...
    std::optional<Interval> evidence;   // bracket that settled it, if any
    std::string note;                   // e.g. which predicate stayed open
};

/// Monotone polynomial over system variables, arbitrary degree (used for
/// decision queries; the until DP expansion produces degree-n terms).
struct QueryPoly {
    Rational constant{0};
    std::vector<std::pair<Rational, std::vector<int>>> terms; // coeff > 0, sorted var lists

    Rational eval(const Valuation& v) const;
    void add_term(const Rational& coeff, std::vector<int> vars);
    void canonicalize();
};

QueryPoly poly_product(const QueryPoly& a, const QueryPoly& b);
QueryPoly poly_sum(const QueryPoly& a, const QueryPoly& b);
QueryPoly poly_scale(const QueryPoly& a, const Rational& c);

struct DecisionQuery {
    MonotoneSystem system;
    QueryPoly expr;      // over system's live variable indices
    Rel rel = Rel::Ge;
    Rational bound{0};
    /// Human-readable label shown in diagnostics.
    std::string label;
};

struct SolverOptions {
    unsigned precision_bits = 64;
    long max_kleene_iterations = 1 << 20;
    long initial_kleene_iterations = 64;
    std::string solver_cmd; // external command; "{}" is the script path
    Backend backend = Backend::Auto;
};

struct KleeneStop {
    std::optional<long> iterations;      // run exactly/at most k steps
    std::optional<Rational> delta;       // stop when step improvement <= delta
};

struct KleeneResult {
    Valuation lower;      // certified lower bound on mu (dyadic rationals)
    long iterations = 0;
    bool fixpoint = false; // exact fixed point reached
};

/// F^k(0) with certified downward dyadic rounding; monotone nondecreasing,
/// every iterate componentwise <= mu.
KleeneResult kleene_lower(const MonotoneSystem& sys, const KleeneStop& stop,
                          unsigned precision_bits = 64);

/// True iff F(cand) <= cand componentwise in exact arithmetic; then
/// cand >= mu is guaranteed (Knaster-Tarski).
bool certify_upper(const MonotoneSystem& sys, const Valuation& cand);

struct UpperResult {
    Valuation upper;      // certificate vector (may exceed 1 componentwise)
    bool certified = false;
    bool width_met = false;
};

/// Certified post-fixed-point upper bound built SCC-topologically from a
/// Kleene lower bound; exact solving for linear components.
UpperResult find_upper(const MonotoneSystem& sys, const Rational& width,
                       const SolverOptions& opts = {});

/// Both-sided certified brackets for all live variables.
struct Brackets {
    Valuation lo;
    Valuation hi;          // capped at 1 per variable (mu <= 1 semantically)
    bool hi_certified = false;
    bool width_met = false;
    long kleene_iterations = 0;

    Interval var_interval(const MonotoneSystem& sys, const VarId& v) const;
    Interval poly_interval(const QueryPoly& p) const;
};

Brackets solve_brackets(const MonotoneSystem& sys, const Rational& width,
                        const SolverOptions& opts = {});

/// Exact least fixed point for linear systems (after zero elimination),
/// solved SCC by SCC. nullopt when the system has quadratic terms or a
/// degenerate component.
std::optional<Valuation> solve_linear_lfp(const MonotoneSystem& sys);

/// SMT-LIB2 QF_NRA script for the query: asserts 0 <= x <= 1, F(x) <= x,
/// and the query relation in witness form. For Ge/Gt the emitted assertion
/// is the negated form (see README: sat/unsat mapping), for Eq the Le side.
std::string export_smt(const DecisionQuery& q, const PPDA& ppda);

class Oracle {
public:
    SolverOptions opts;
    mutable long decide_calls = 0;
    mutable long external_calls = 0;

    explicit Oracle(SolverOptions o = {}) : opts(std::move(o)) {}

    /// Decides expr(mu) rel bound. Unknown only from the intervals path.
    OracleAnswer decide(const DecisionQuery& q, const PPDA& ppda) const;
    OracleAnswer decide(const DecisionQuery& q, const PPDA& ppda, Backend backend) const;

    /// Exact qualitative decision: P(pX, C1 U C2) = 1?
    /// Internal exact layer: pins, Boolean reachability refutations, exact
    /// linear solving, and the branching-criticality test for pBPA; falls
    /// back to the generic decide query otherwise.
    OracleAnswer until_one(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                           const Head& pX) const;

    /// P(pX, C1 U C2) > 0 (always exact: Boolean abstraction).
    bool until_positive(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                        const Head& pX) const;

private:
    OracleAnswer decide_intervals(const DecisionQuery& q) const;
    OracleAnswer decide_external(const DecisionQuery& q, const PPDA& ppda) const;
};

/// Builds the until-sum query polynomial for a single-symbol configuration:
/// <pX.> + sum_{q eps in C2} <pXq> (Lemma prob-def specialisation).
QueryPoly head_until_sum(const MonotoneSystem& sys, const PPDA& ppda, const SimpleSet& c2,
                         const Head& pX);

/// Symbolic DP expansion of the until probability of an arbitrary
/// configuration as a polynomial over system variables.
QueryPoly config_until_poly(const MonotoneSystem& sys, const PPDA& ppda, const SimpleSet& c2,
                            const Configuration& c);

struct IntervalResult {
    Interval value;
    bool width_met = false;
    long iterations = 0;
};

/// Certified bracket for P(c, C1 U C2) by the backward DP over variable
/// brackets, refined until the requested width or budget.
IntervalResult until_probability(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                                 const Configuration& c, const Rational& width,
                                 const SolverOptions& opts = {});

/// Threshold decision for P(c, C1 U C2) rel bound.
OracleAnswer compare_until(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                           const Configuration& c, Rel rel, const Rational& bound,
                           const Oracle& oracle);

struct BisectResult {
    Interval value;
    int oracle_rounds = 0;
};

/// Fig. 3 bisection: ceil(-log2 lambda) rounds, one oracle query per round
/// at the bracket midpoint; Unknown rounds fall back to interval
/// refinement for that round.
BisectResult bisect_bounds(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                           const Head& pX, const Rational& lambda, const Oracle& oracle);

/// P(IRun(pX)) = 1 - P(pX, all U Dead).
IntervalResult irun_probability(const PPDA& ppda, const Head& pX, const Rational& width,
                                const SolverOptions& opts = {});

/// Exact qualitative facts about IRun(pX), routed through the exact layer.
OracleAnswer irun_positive(const PPDA& ppda, const Head& pX, const Oracle& oracle);

} // namespace ppmc
