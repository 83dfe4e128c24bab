#pragma once

#include "ppmc/formats.hpp"
#include "ppmc/model.hpp"
#include "ppmc/omega.hpp"
#include "ppmc/regsets.hpp"

#include <string>

namespace ppmc::fixtures {

/// Bernoulli random walk pBPA: Z -> IZ | DZ, I -> II | eps, D -> DD | eps,
/// with up-probability x.
inline std::string walk_text(const std::string& x, const std::string& one_minus_x) {
    return "pbpa\n"
           "alphabet Z I D;\n"
           "Z -> " + x + " I Z;\n"
           "Z -> " + one_minus_x + " D Z;\n"
           "I -> " + x + " I I;\n"
           "I -> " + one_minus_x + " ;\n"
           "D -> " + one_minus_x + " D D;\n"
           "D -> " + x + " ;\n";
}

inline PPDA walk(const std::string& x, const std::string& one_minus_x) {
    return parse_ppda(walk_text(x, one_minus_x));
}

inline PPDA walk_half() { return walk("1/2", "1/2"); }
inline PPDA walk_third() { return walk("1/3", "2/3"); }
inline PPDA walk_two_thirds() { return walk("2/3", "1/3"); }
inline PPDA walk_three_quarters() { return walk("3/4", "1/4"); }

inline SymbolId sym(const PPDA& p, const std::string& name) { return *find_symbol(p, name); }
inline Head head(const PPDA& p, const std::string& name) {
    return Head{0, sym(p, name)};
}

/// C2 of the running example: configurations with Z on top.
inline SimpleSet z_topped(const PPDA& p) {
    SimpleSet s;
    s.heads.insert(head(p, "Z"));
    return s;
}

/// The two-state observer watching for head Z between minima.
inline ObservingAutomaton z_observer(const PPDA& p) {
    ObservingAutomaton o;
    o.state_names = {"a0", "a1"};
    o.init = 0;
    int heads = p.state_count() * p.symbol_count();
    o.step.assign(2, std::vector<int>(heads, 0));
    SymbolId z = sym(p, "Z");
    for (int h = 0; h < heads; ++h) {
        o.step[0][h] = (h % p.symbol_count()) == z ? 1 : 0;
        o.step[1][h] = 1;
    }
    o.acceptance = {{1}};
    return o;
}

inline Configuration config(const PPDA& p, const std::string& text) {
    return parse_configuration(p, text);
}

} // namespace ppmc::fixtures
