#pragma once

#include "ppmc/model.hpp"
#include "ppmc/regsets.hpp"
#include "ppmc/solver.hpp"

#include <map>
#include <memory>
#include <string>

namespace ppmc {

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// PCTL syntax tree. `Or` is the dual connective needed once negations are
/// pushed inward; `False` is the dual of tt.
struct Formula {
    enum class Kind { True, False, Atom, Not, And, Or, Next, Until };
    Kind kind = Kind::True;
    std::string atom;
    FormulaPtr lhs, rhs; // Not/Next use lhs only
    Rel rel = Rel::Ge;
    Rational rho{0};

    static FormulaPtr make_true();
    static FormulaPtr make_false();
    static FormulaPtr make_atom(std::string name);
    static FormulaPtr make_not(FormulaPtr f);
    static FormulaPtr make_and(FormulaPtr a, FormulaPtr b);
    static FormulaPtr make_or(FormulaPtr a, FormulaPtr b);
    static FormulaPtr make_next(Rel r, Rational rho, FormulaPtr f);
    static FormulaPtr make_until(Rel r, Rational rho, FormulaPtr a, FormulaPtr b);
};

std::string formula_to_string(const FormulaPtr& f);

/// Grammar: tt | ff | ident | !f | f & f | f "|" f | X[rel] f | (f U[rel] f)
/// with rel one of <=r, <r, >=r, >r, =0, =1 (rationals exact).
FormulaPtr parse_formula(const std::string& text);

/// Probability constraints restricted to the qualitative fragment
/// (<=0, >=1 and their negation duals >0, <1).
bool is_qualitative(const FormulaPtr& f);

struct RegularValuation {
    std::map<std::string, DeltaAutomaton> atoms;
};

/// Eliminates negations: dual rewriting at Boolean/temporal nodes, fresh
/// complemented atoms at the leaves. Denotation preserved.
std::pair<FormulaPtr, RegularValuation> negation_free(const FormulaPtr& f,
                                                      const RegularValuation& nu);

/// One-step qualitative sets (Lemma qualit-X): mode Eq1 accepts
/// configurations with at least one successor and all successors in c;
/// Eq0 accepts configurations with no successor in c.
enum class NextMode { Eq0, Eq1 };
DeltaAutomaton sat_next_qual(const PPDA& ppda, const SimpleSet& c, NextMode mode);

/// P(.., C1 U C2) = 1 via the subset construction of Lemma qualit-U1.
/// Throws UndecidedPredicate when a required =1 predicate cannot be decided.
DeltaAutomaton sat_until_eq1(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                             const Oracle& oracle);

/// P(.., C1 U C2) = 0 via Lemma qualit-U0 (Boolean predicates only).
DeltaAutomaton sat_until_eq0(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2);

struct UndecidedPredicate : std::runtime_error {
    explicit UndecidedPredicate(const std::string& what) : std::runtime_error(what) {}
};

/// Full qualitative model checker: returns the recognizer of the
/// satisfaction set over the given (normalized) system.
DeltaAutomaton check_qualitative(const PPDA& ppda, const FormulaPtr& f,
                                 const RegularValuation& nu, const Oracle& oracle);

/// Extends an automaton over a grown alphabet; new symbols lead to a
/// rejecting sink (normalization-fresh symbols carry no atoms by default).
DeltaAutomaton extend_alphabet(const DeltaAutomaton& a, int new_symbol_count);

} // namespace ppmc
