#pragma once

#include "ppmc/model.hpp"
#include "ppmc/regsets.hpp"
#include "ppmc/solver.hpp"

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ppmc {

/// Finite automaton reading heads between consecutive minima of a run,
/// reset to `init` at every minimum; acceptance by the set of observation
/// states recurring infinitely often.
struct ObservingAutomaton {
    std::vector<std::string> state_names;
    int init = 0;
    /// step[a][p * |Gamma| + X]
    std::vector<std::vector<int>> step;
    std::vector<std::set<int>> acceptance;

    int state_count() const { return static_cast<int>(state_names.size()); }
    int advance(int a, const Head& h, const PPDA& ppda) const {
        return step[a][h.state * ppda.symbol_count() + h.symbol];
    }
    bool accepts_infset(const std::set<int>& inf) const {
        for (const auto& s : acceptance) {
            if (s == inf) return true;
        }
        return false;
    }
};

struct MullerAutomaton {
    std::vector<std::string> state_names;
    int init = 0;
    std::vector<std::vector<int>> step; // [b][head index]
    std::vector<std::set<int>> acceptance;

    int state_count() const { return static_cast<int>(state_names.size()); }
};

/// Positions i with stack length <= every later length in the prefix.
/// With horizon_complete the prefix is a whole (finite) run, so these are
/// the true minima; otherwise they are provisional (the continuation may
/// still dip below -- see sim for the certified variant).
std::vector<size_t> minima(const std::vector<size_t>& stack_lengths, bool horizon_complete);

/// Fold of the observer over a head sequence, starting at init.
int observe(const ObservingAutomaton& obs, const PPDA& ppda, const std::vector<Head>& heads);

/// Synchronized product: control states Q x A; (p,a)X ->x (t,a')alpha iff
/// pX ->x t alpha and step(a, pX) = a'.
struct ObserverProduct {
    PPDA product;
    int base_states = 0;
    int obs_states = 0;
    StateId pack(StateId p, int a) const { return p * obs_states + a; }
    StateId base_state(StateId packed) const { return packed / obs_states; }
    int obs_state(StateId packed) const { return packed % obs_states; }
};

ObserverProduct product_observer(const PPDA& ppda, const ObservingAutomaton& obs);

/// P(Run(qY, r, Z, a)): pop qY into r-eps while the observer, having
/// started at init, ends in `a` after additionally reading the head rZ.
IntervalResult pop_path_prob(const PPDA& ppda, const ObservingAutomaton& obs, const Head& qY,
                             StateId r, SymbolId z, int a, const Rational& width,
                             const SolverOptions& opts = {});

bool pop_path_positive(const PPDA& ppda, const ObservingAutomaton& obs, const Head& qY,
                       StateId r, SymbolId z, int a, const Oracle& oracle);

struct ChainState {
    enum class Kind { Bot, Entry, Pair };
    Kind kind = Kind::Bot;
    Head head;     // Entry/Pair
    int obs = 0;   // Pair

    std::string name(const PPDA& ppda, const ObservingAutomaton& o) const;
};

struct ChainEdge {
    int from = 0;
    int to = 0;
    Interval prob;
    bool positive = false; // exact qualitative flag
};

/// The finite minima chain M_Delta: Bot, entry states per head, pair states
/// (head, observation) for heads with positive infinite-run probability.
struct MinChain {
    std::vector<ChainState> states;
    std::vector<std::vector<ChainEdge>> edges; // by source
    std::map<std::pair<int, int>, int> pair_index;
    std::map<int, int> entry_index; // head index -> state
    int bot = 0;

    int find_entry(const PPDA& ppda, const Head& h) const;
    int find_pair(const PPDA& ppda, const Head& h, int obs) const;
};

/// Answers "is P(IRun(head)) > 0?" for heads of the chain's system; lets
/// observer/Muller products delegate to their base system, where the exact
/// layer applies.
using IrunPositivityFn = std::function<OracleAnswer(const Head&)>;

struct UndecidedPositivity : std::runtime_error {
    explicit UndecidedPositivity(const std::string& w) : std::runtime_error(w) {}
};

MinChain build_min_chain(const PPDA& ppda, const ObservingAutomaton& obs, const Rational& width,
                         const Oracle& oracle, const IrunPositivityFn& irun_pos = nullptr);

/// Footprint of a run prefix under our pairing: entry head, then for each
/// certified minimum the pair (head, observer state over the jump into it).
/// Terminated runs pad with Bot. `min_positions` must be an initial segment
/// of the run's true minima.
std::vector<ChainState> footprint(const PPDA& ppda, const ObservingAutomaton& obs,
                                  const std::vector<Configuration>& prefix,
                                  const std::vector<size_t>& min_positions, bool terminated);

} // namespace ppmc
