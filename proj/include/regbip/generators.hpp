#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "regbip/graph.hpp"

namespace regbip {

Graph complete(int n);

// i ~ i +/- s (mod n) for each offset s in 1..floor(n/2).
Graph circulant(int n, const std::vector<int>& offsets);

// Simple d-regular graph via stub pairing. A stuck pairing (no valid
// partner left for a stub) restarts the attempt; 1e5 restarts is an error.
Graph random_regular(int n, int d, std::uint64_t seed);

// Parses "complete:n=64", "circulant:n=8,offsets=1+4",
// "random_regular:n=200,d=32,seed=7".
Graph generate_from_spec(const std::string& spec);

}  // namespace regbip
