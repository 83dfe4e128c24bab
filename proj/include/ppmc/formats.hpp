#pragma once

#include "ppmc/model.hpp"
#include "ppmc/omega.hpp"
#include "ppmc/regsets.hpp"

#include <map>
#include <string>

namespace ppmc {

/// Parsed contents of an automata file: delta automata (with atom
/// bindings), observing automata and Muller automata, all over the given
/// system's states and alphabet. Totality is enforced at parse time.
struct AutomataFile {
    std::map<std::string, DeltaAutomaton> automata;
    std::map<std::string, std::string> bindings; // atom name -> automaton name
    std::map<std::string, ObservingAutomaton> observers;
    std::map<std::string, MullerAutomaton> mullers;
};

AutomataFile parse_automata_file(const PPDA& ppda, const std::string& text);

/// Simple-set expression: `all`, `empty`, `eps`, or a brace list of heads
/// (`{p.X, q.Y, eps}`; bare symbols for pBPA).
SimpleSet parse_simple_set(const PPDA& ppda, const std::string& text);

/// A head literal: `p.X`, or a bare symbol for pBPA.
Head parse_head(const PPDA& ppda, const std::string& text);

std::string simple_set_to_string(const PPDA& ppda, const SimpleSet& s);

} // namespace ppmc
