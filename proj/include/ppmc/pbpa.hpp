#pragma once

#include "ppmc/model.hpp"
#include "ppmc/pctl.hpp"
#include "ppmc/regsets.hpp"
#include "ppmc/solver.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace ppmc {

/// Output of the Fig. 4 refinement loop: symbols with [X,eps] != 1,
/// per-symbol certified brackets, the word-length bound n and the bracket
/// width nu with n(nu + nu(n+1)(1+nu)^n) <= lambda/3.
struct ApproxParams {
    std::set<SymbolId> s_symbols;
    unsigned n = 0;
    Rational kappa{1};
    Rational nu{1};
    Rational lambda{0};
    std::map<SymbolId, Interval> eps_brackets;    // [X,eps]
    std::map<SymbolId, Interval> bullet_brackets; // [X,.]
    bool eps_in_c2 = false;                       // p-eps member of C2

    // loop trace for the monotonicity assertions
    std::vector<Rational> kappa_trace;
    std::vector<unsigned> n_trace;
};

ApproxParams compute_params(const PPDA& pbpa, const SimpleSet& c1, const SimpleSet& c2,
                            const Rational& lambda, const Oracle& oracle);

/// Order-preserving deletion of symbols outside S.
std::vector<SymbolId> restrict_word(const std::vector<SymbolId>& word,
                                    const std::set<SymbolId>& s);

enum class ThresholdDir { Geq, Leq };

/// The word set G of Lemma BPA-U: short words judged by the upper (dir >=)
/// or lower (dir <=) DP approximation against rho, the length-n layer
/// against rho -+ lambda/3.
std::set<std::vector<SymbolId>> build_G(const ApproxParams& params, const Rational& rho,
                                        ThresholdDir dir, size_t word_cap = 2u << 20);

/// Recognizer of U_{beta in G} Gen_n(beta): tracks the window of the
/// topmost n S-symbols while reading bottom-up.
DeltaAutomaton build_threshold_automaton(const PPDA& pbpa,
                                         const std::set<std::vector<SymbolId>>& g,
                                         const ApproxParams& params);

/// Quantitative one-step sets for pBPA (Lemma BPA-X); comparisons are exact
/// rational sums, no tolerance consumed.
DeltaAutomaton sat_next_quant(const PPDA& pbpa, const SimpleSet& c, Rel rel,
                              const Rational& rho);

struct ToleranceVerdict {
    bool yes = false;
    Rational lambda;
};

/// Error-tolerant PCTL checking for pBPA: YES on every exact member, YES
/// only on lambda-relaxed members.
ToleranceVerdict check_error_tolerant(const PPDA& pbpa, const FormulaPtr& f,
                                      const RegularValuation& nu, const Configuration& c,
                                      const Rational& lambda, const Oracle& oracle);

/// The recognizer used by check_error_tolerant (exposed for the sandwich
/// property tests).
DeltaAutomaton error_tolerant_set(const PPDA& pbpa, const FormulaPtr& f,
                                  const RegularValuation& nu, const Rational& lambda,
                                  const Oracle& oracle);

} // namespace ppmc
