#pragma once

#include "ppmc/mc.hpp"
#include "ppmc/model.hpp"
#include "ppmc/omega.hpp"
#include "ppmc/regsets.hpp"

#include <cstdint>
#include <vector>

namespace ppmc {

/// splitmix64; the documented run-sampling generator.
struct SplitMix64 {
    uint64_t state;
    explicit SplitMix64(uint64_t seed) : state(seed) {}
    uint64_t next() {
        uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
};

struct RunSample {
    uint64_t seed = 0;
    std::vector<std::pair<Configuration, int>> steps; // (config before step, rule index)
    Configuration final_config;
    bool terminated = false; // dead configuration reached
    bool truncated = false;  // step bound hit
};

/// Deterministic given the seed: at each configuration a 64-bit uniform
/// draw is compared against the exact rational cumulative rule thresholds.
RunSample sample_run(const PPDA& ppda, const Configuration& c, long max_steps, uint64_t seed);

struct UntilEstimate {
    Rational estimate{0};
    Rational stderr_bound{0}; // conservative: 1/(2 sqrt(runs))
    long truncation_count = 0;
    long runs = 0;
};

UntilEstimate estimate_until(const PPDA& ppda, const SimpleSet& c1, const SimpleSet& c2,
                             const Configuration& c, long runs, long horizon, uint64_t seed);

struct AcceptanceEstimate {
    Rational estimate{0};      // frequency of runs settled in an accepting BSCC
    Rational stderr_bound{0};
    long undetermined_count = 0;
    long runs = 0;
};

/// Frequency of runs whose certified footprint reaches a BSCC of the minima
/// chain. Certification: a provisional minimum counts only when the Boolean
/// pop analysis proves the run can never dip below it (so the footprint
/// prefix is exact, not just likely).
AcceptanceEstimate estimate_acceptance(const PPDA& ppda, const ObservingAutomaton& obs,
                                       const Head& pX, long runs, long horizon, uint64_t seed,
                                       const MinChain& chain, const BsccClassification& classes);

/// Positions of provisional minima that are certified against any
/// continuation of the run: no later prefix position is shorter and the
/// Boolean termination analysis rules out popping below them.
std::vector<size_t> certified_minima(const PPDA& ppda, const std::vector<Configuration>& prefix);

} // namespace ppmc
