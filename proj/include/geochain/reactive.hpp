#pragma once

#include <cstddef>
#include <vector>
#include <span>

#include "geochain/provisioning.hpp"

namespace geochain {

struct StatsSample {
    double cpu_pct = 0.0;
    double mem_pct = 0.0;
    double input_rate = 0.0; // pkt/s
    double timestamp_s = 0.0;
};

enum class Health { normal, overload };

// Runtime statistics of one instance and its normal/overload state.
class InstanceHealth {
public:
    explicit InstanceHealth(std::size_t window = 5) : window_(window == 0 ? 1 : window) {}

    // Appends a sample, trimming beyond the window. Samples whose timestamp is
    // not newer than the last one are dropped and counted.
    void record_stats(const StatsSample& s);

    std::span<const StatsSample> samples() const { return samples_; }
    std::size_t dropped() const { return dropped_; }
    Health state() const { return state_; }
    void set_state(Health h) { state_ = h; }

private:
    std::size_t window_;
    std::vector<StatsSample> samples_;
    std::size_t dropped_ = 0;
    Health state_ = Health::normal;
};

// Overload when at least two metrics exceeded their thresholds in every one of
// the last `persistence` samples. An overloaded instance recovers only after
// `persistence` samples with every metric at or below its threshold.
Health classify(InstanceHealth& health, const OverloadThresholds& thresholds, std::size_t persistence);

// Same decision without touching the instance's state.
Health evaluate(const InstanceHealth& health, const OverloadThresholds& thresholds, std::size_t persistence);

// One new instance when strictly more than half of the working instances of a
// type are overloaded; never while a proactive round has reactive scaling
// suspended.
int reactive_decision(std::span<const Health> states, bool suspended);

} // namespace geochain
