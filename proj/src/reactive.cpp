#include "geochain/reactive.hpp"

#include <algorithm>

namespace geochain {

void InstanceHealth::record_stats(const StatsSample& s)
{
    if (!samples_.empty() && s.timestamp_s <= samples_.back().timestamp_s) {
        ++dropped_;
        return;
    }
    samples_.push_back(s);
    if (samples_.size() > window_) {
        samples_.erase(samples_.begin(), samples_.end() - static_cast<std::ptrdiff_t>(window_));
    }
}

namespace {

struct Exceed {
    bool cpu, mem, input;
};

Exceed exceeds(const StatsSample& s, const OverloadThresholds& t)
{
    return {s.cpu_pct > t.cpu_pct, s.mem_pct > t.mem_pct, s.input_rate > t.input_rate};
}

} // namespace

Health evaluate(const InstanceHealth& health, const OverloadThresholds& thresholds, std::size_t persistence)
{
    const auto all = health.samples();
    if (persistence == 0 || all.size() < persistence) {
        return health.state();
    }
    const auto recent = all.subspan(all.size() - persistence);
    bool cpu = true, mem = true, input = true, quiet = true;
    for (const auto& s : recent) {
        const auto e = exceeds(s, thresholds);
        cpu = cpu && e.cpu;
        mem = mem && e.mem;
        input = input && e.input;
        quiet = quiet && !e.cpu && !e.mem && !e.input;
    }
    const int persistent = int(cpu) + int(mem) + int(input);
    if (persistent >= 2) {
        return Health::overload;
    }
    if (health.state() == Health::overload && !quiet) {
        return Health::overload;
    }
    return Health::normal;
}

Health classify(InstanceHealth& health, const OverloadThresholds& thresholds, std::size_t persistence)
{
    health.set_state(evaluate(health, thresholds, persistence));
    return health.state();
}

int reactive_decision(std::span<const Health> states, bool suspended)
{
    if (suspended || states.empty()) {
        return 0;
    }
    const auto overloaded = std::count(states.begin(), states.end(), Health::overload);
    return 2 * static_cast<std::size_t>(overloaded) > states.size() ? 1 : 0;
}

} // namespace geochain
