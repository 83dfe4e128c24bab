#pragma once

#include "ppmc/rational.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ppmc {

/// Dense ids into PPDA::states / PPDA::alphabet.
using StateId = int;
using SymbolId = int;

/// Prefix reserved for symbols/states introduced by normalization. User
/// input may not declare names starting with it.
inline constexpr const char* kFreshPrefix = "__n";

struct Head {
    StateId state = 0;
    SymbolId symbol = 0;

    friend bool operator==(const Head& a, const Head& b) {
        return a.state == b.state && a.symbol == b.symbol;
    }
    friend bool operator<(const Head& a, const Head& b) {
        if (a.state != b.state) return a.state < b.state;
        return a.symbol < b.symbol;
    }
};

/// Control state plus stack word, topmost symbol first. Empty stack = p-eps.
struct Configuration {
    StateId state = 0;
    std::vector<SymbolId> stack;

    bool empty_stack() const { return stack.empty(); }
    Head head() const { return Head{state, stack.front()}; }

    friend bool operator==(const Configuration& a, const Configuration& b) {
        return a.state == b.state && a.stack == b.stack;
    }
    friend bool operator<(const Configuration& a, const Configuration& b) {
        if (a.state != b.state) return a.state < b.state;
        return a.stack < b.stack;
    }
};

struct Rule {
    Head lhs;
    StateId rhs_state = 0;
    std::vector<SymbolId> rhs_stack; // topmost first; <= 2 after normalization
    Rational prob;
};

class PPDA {
public:
    std::vector<std::string> states;   // index = StateId
    std::vector<std::string> alphabet; // index = SymbolId
    std::vector<Rule> rules;

    int state_count() const { return static_cast<int>(states.size()); }
    int symbol_count() const { return static_cast<int>(alphabet.size()); }
    bool pbpa_capable() const { return states.size() == 1; }

    /// Indices of rules with the given lhs head.
    const std::vector<int>& rules_for(const Head& h) const;

    /// Sum of probabilities of the head's rules (0 for stuck heads).
    Rational outgoing_mass(const Head& h) const;
    bool is_stuck(const Head& h) const { return rules_for(h).empty(); }

    std::string head_name(const Head& h) const;
    std::string config_name(const Configuration& c) const;

    /// Call after mutating `rules`.
    void reindex();

private:
    mutable std::map<std::pair<int, int>, std::vector<int>> by_head_;
    static const std::vector<int>& empty_index();
};

struct ValidationIssue {
    Head head;
    Rational sum;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    bool ok() const { return issues.empty(); }
};

/// Every head's outgoing probability mass must be exactly 0 or exactly 1.
ValidationReport validate(const PPDA& ppda);

struct NormalizeResult {
    PPDA ppda;
    /// fresh head name -> name of the originating rule's lhs head
    std::map<std::string, std::string> renaming;
    bool changed = false;
};

/// Splits rules with |rhs| > 2 into chains over fresh heads. pBPA inputs
/// keep their single control state (fresh stack symbols suffice there).
NormalizeResult normalize(const PPDA& ppda);

/// One entry per applicable rule; empty for p-eps and stuck heads.
std::vector<std::pair<Configuration, Rational>> successors(const PPDA& ppda,
                                                           const Configuration& c);

struct ParseError : std::runtime_error {
    int line;
    int column;
    ParseError(std::string msg, int l, int col)
        : std::runtime_error(std::move(msg)), line(l), column(col) {}
};

/// Text format (see README): `ppda`/`pbpa` header, `states ...;`,
/// `alphabet ...;`, one rule per statement `p X -> 1/2 q Y Z;`.
PPDA parse_ppda(const std::string& text);

std::optional<StateId> find_state(const PPDA& ppda, const std::string& name);
std::optional<SymbolId> find_symbol(const PPDA& ppda, const std::string& name);

/// Parses a configuration like "I I Z" (or "p: I I Z" for pPDA); "eps"
/// denotes the empty stack.
Configuration parse_configuration(const PPDA& ppda, const std::string& text);

} // namespace ppmc
