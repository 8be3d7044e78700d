#pragma once

#include <cstddef>

#include "svseg/energy.hpp"

namespace svseg {

struct SolveStats {
    std::size_t network_nodes = 0;
    std::size_t network_arcs = 0;
    std::size_t augmentations = 0;
};

struct SolveResult {
    Labeling labeling;
    double energy = 0.0;     // total_energy(labeling), evaluated independently of the cut
    double flow_value = 0.0; // max-flow value (0 for enumeration)
    double offset = 0.0;     // constant removed while building the network
    SolveStats stats;
};

/// Exact minimum of the binary energy via one s-t min-cut. Each clique adds
/// two auxiliary nodes; requires 2q <= |clique| so the truncated-linear term
/// splits into two submodular halves. Among optimal cuts the one with the
/// smallest source (human) side is returned.
SolveResult minimize(const PotentialSet& pots);

inline constexpr std::size_t kBruteForceMaxNodes = 22;

/// Exhaustive search; ties broken lexicographically (-1 < +1, node order).
SolveResult brute_force_min(const PotentialSet& pots);

} // namespace svseg
