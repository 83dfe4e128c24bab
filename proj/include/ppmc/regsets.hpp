#pragma once

#include "ppmc/model.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ppmc {

/// Head-defined configuration set: pXb in the set iff pX in `heads`;
/// p-eps in the set iff p in `eps_states`.
struct SimpleSet {
    std::set<Head> heads;
    std::set<StateId> eps_states;

    bool contains(const Configuration& c) const {
        if (c.empty_stack()) return eps_states.count(c.state) > 0;
        return heads.count(c.head()) > 0;
    }

    static SimpleSet all(const PPDA& ppda);
    static SimpleSet none() { return SimpleSet{}; }
    static SimpleSet eps_only(const PPDA& ppda);

    /// C-bullet: drops the eps part.
    SimpleSet bullet() const {
        SimpleSet s = *this;
        s.eps_states.clear();
        return s;
    }

    friend bool operator==(const SimpleSet& a, const SimpleSet& b) {
        return a.heads == b.heads && a.eps_states == b.eps_states;
    }
};

/// Deterministic total automaton reading the stack bottom-up from the
/// control state. Configuration p a1..an is accepted iff running `trans`
/// from state init_of(p) over an..a1 ends in an accepting state.
class DeltaAutomaton {
public:
    std::vector<std::string> state_names;       // automaton states
    std::vector<StateId> control_init;           // control state -> automaton state
    std::vector<std::vector<int>> trans;         // [aut_state][symbol] -> aut_state
    std::set<int> accepting;
    int symbol_count = 0;

    int state_count() const { return static_cast<int>(state_names.size()); }
    int step(int s, SymbolId a) const { return trans[s][a]; }

    bool accepts(const Configuration& c) const;

    /// Trims to states reachable from the control inits.
    DeltaAutomaton trimmed() const;
};

enum class BoolOp { Complement, Intersect, Union };

DeltaAutomaton complement(const DeltaAutomaton& a);
DeltaAutomaton intersect(const DeltaAutomaton& a, const DeltaAutomaton& b);
DeltaAutomaton unite(const DeltaAutomaton& a, const DeltaAutomaton& b);
DeltaAutomaton bool_ops(const DeltaAutomaton& a, const DeltaAutomaton& b, BoolOp op);

/// Accepts exactly the configurations of the simple set.
DeltaAutomaton simple_to_automaton(const PPDA& ppda, const SimpleSet& s);

/// Universal / empty recognizers over the system's alphabet.
DeltaAutomaton universal_automaton(const PPDA& ppda);
DeltaAutomaton empty_automaton(const PPDA& ppda);

/// True iff no configuration is accepted (reachable accepting state test,
/// taking every control init as a start).
bool is_empty(const DeltaAutomaton& a);

/// Nondeterministic automaton used internally for reverse+determinize.
struct Nfa {
    int state_count = 0;
    int symbol_count = 0;
    std::vector<std::map<SymbolId, std::set<int>>> trans;
    std::set<int> initial;
    std::set<int> accepting;
};

/// Subset construction; `state_filter` can restrict which subset states are
/// explored (unused slots collapse into a sink).
struct Dfa {
    int symbol_count = 0;
    std::vector<std::vector<int>> trans;
    std::set<int> accepting;
    int initial = 0;
};

Dfa determinize(const Nfa& nfa);
Dfa reverse_determinize(const Dfa& dfa);

/// Lemma reg-sim: product system with the automata states stored in the
/// stack symbols, plus the simple images and the configuration embedding.
struct RegSimReduction {
    PPDA product;
    std::vector<SimpleSet> simple_images;
    /// product symbol -> (original symbol, vector id)
    std::vector<std::pair<SymbolId, int>> symbol_origin;
    /// vector id -> per (automaton, control state) automaton state
    std::vector<std::vector<int>> vectors;
    int base_vector = 0; // annotation of the bottom symbol
    std::vector<DeltaAutomaton> automata; // the reduced automata (copies)

    Configuration embed(const Configuration& c) const;
    /// vector id reached from `v` after reading symbol `a` (gamma-hat).
    int advance_vector(int v, SymbolId original_symbol) const;
    /// product alphabet lookup
    SymbolId product_symbol(SymbolId original_symbol, int vector_id) const;
};

RegSimReduction reduce_to_simple(const PPDA& ppda, const std::vector<DeltaAutomaton>& regs);

/// Recognizer (over the original system) of G^-1(C(aut)) for an automaton
/// over the product alphabet.
DeltaAutomaton map_back(const PPDA& original, const RegSimReduction& red,
                        const DeltaAutomaton& aut_over_product);

/// Enumerates all configurations with stack length <= max_len (test helper
/// style scans live in tests; this one is needed by pctl internals too).
std::vector<Configuration> enumerate_configurations(const PPDA& ppda, int max_len);

} // namespace ppmc
