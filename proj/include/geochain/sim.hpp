#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "geochain/scenario.hpp"

namespace geochain {

// ---------------------------------------------------------------------------
// Fluid media model: one second of traffic through capacity-limited hops.

struct FluidFlow {
    double rate = 0.0;     // pkt/s offered at the first hop
    std::vector<int> hops; // hop indices in chain order
};

struct FluidTick {
    std::vector<double> delivered;    // per flow, pkt/s leaving the last hop
    std::vector<int> saturated_hops;  // per flow, hops on its chain that dropped traffic
    std::vector<double> hop_arrivals; // per hop, pkt/s arriving
};

// Each hop is settled after every hop upstream of it, so a hop splits its
// capacity over traffic that already lost what upstream hops dropped. An
// overloaded hop passes capacity/offered of each flow's traffic. Throws
// ContractViolation when the flows' hop orders form a cycle.
FluidTick media_tick(std::span<const FluidFlow> flows, std::span<const double> hop_capacity);

// ---------------------------------------------------------------------------

struct MetricsReport {
    nlohmann::json summary;
    std::vector<nlohmann::json> flows;
    std::vector<nlohmann::json> intervals;
    std::vector<nlohmann::json> instances;
    std::vector<nlohmann::json> messages; // protocol trace when enabled

    // File name -> contents, in a fixed layout.
    std::vector<std::pair<std::string, std::string>> files() const;
    void write(const std::string& dir) const;
};

MetricsReport run_scenario(const ScenarioConfig& cfg);

} // namespace geochain
