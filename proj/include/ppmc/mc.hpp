#pragma once

#include "ppmc/omega.hpp"

#include <set>
#include <vector>

namespace ppmc {

struct BsccClassification {
    std::vector<std::vector<int>> components; // bottom SCCs (chain state ids)
    std::vector<bool> accepting;              // parallel to components
    std::vector<int> scc_of;                  // chain state -> SCC id (all SCCs)
    std::vector<int> bscc_id;                 // chain state -> index into components or -1
};

/// Bottom SCCs of the positivity digraph; a component accepts iff it is not
/// {Bot} and its observation-state set is in the observer's acceptance.
BsccClassification bsccs(const MinChain& chain, const ObservingAutomaton& obs);

/// Certified bracket for the probability of hitting `targets` from
/// `source`, by monotone interval iteration from below and above on the
/// exactly-pruned digraph. Targets must be unions of whole BSCCs.
Interval hitting_probability(const MinChain& chain, const std::set<int>& targets, int source,
                             long max_sweeps = 20000, unsigned precision_bits = 64);

struct AcceptanceResult {
    Interval value;
    MinChain chain;
    BsccClassification classes;
    bool width_met = false;
};

/// P(Run(pX, Acc)) for the observing automaton: builds the minima chain,
/// classifies BSCCs and brackets the hitting probability of the accepting
/// ones, refining edge intervals until the requested width.
AcceptanceResult acceptance_probability(const PPDA& ppda, const ObservingAutomaton& obs,
                                        const Head& pX, const Rational& width,
                                        const Oracle& oracle,
                                        const IrunPositivityFn& irun_pos = nullptr);

/// P(Run(pX, B)) for a deterministic Muller automaton over heads: product
/// construction plus the powerset observing automaton of Thm Buchi-dec.
AcceptanceResult muller_probability(const PPDA& ppda, const MullerAutomaton& muller,
                                    const Head& pX, const Rational& width,
                                    const Oracle& oracle);

/// The observer product used by muller_probability (exposed for tests).
struct MullerReduction {
    PPDA product;               // Q x B control states
    ObservingAutomaton observer; // states 2^B
    int base_states = 0;
    int muller_states = 0;
    int muller_init = 0;
    StateId pack(StateId p, int b) const { return p * muller_states + b; }
    Head lift_head(const Head& h) const; // initial head (p,b_I)X
    Head project_head(const Head& h) const;
};

MullerReduction muller_reduction(const PPDA& ppda, const MullerAutomaton& muller);

/// Combined existential script: chain edge variables tied to the underlying
/// until systems plus the hitting equations; for external threshold checks.
std::string export_acceptance_smt(const PPDA& ppda, const ObservingAutomaton& obs,
                                  const Head& pX, Rel rel, const Rational& bound,
                                  const Oracle& oracle);

} // namespace ppmc
