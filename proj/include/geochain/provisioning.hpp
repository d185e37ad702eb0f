#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geochain/topology.hpp"

namespace geochain {

enum class Plane { control, data };

struct OverloadThresholds {
    double cpu_pct = 90.0;
    double mem_pct = 50.0;
    double input_rate = 0.0; // pkt/s
};

struct VnfType {
    std::string name;
    Plane plane = Plane::data;
    // 1-based position in its chain. DP: firewall 1, IDS 2, ... CP: P-CSCF 1, S-CSCF 2.
    int stage = 1;
    double capacity = 1.0; // transactions/s (CP) or packets/s (DP)
    OverloadThresholds thresholds;
};

using VnfIndex = int;

// The VNF types known to a scenario plus the ordered DP chain.
class Catalog {
public:
    Catalog() = default;
    Catalog(std::vector<VnfType> types, std::vector<std::string> dp_chain);

    const std::vector<VnfType>& types() const { return types_; }
    const VnfType& type(VnfIndex v) const { return types_.at(static_cast<std::size_t>(v)); }
    std::size_t size() const { return types_.size(); }
    std::optional<VnfIndex> find(const std::string& name) const;

    // Catalog index of DP stage s (1-based).
    VnfIndex dp_stage(int s) const { return dp_chain_.at(static_cast<std::size_t>(s - 1)); }
    int dp_stage_count() const { return static_cast<int>(dp_chain_.size()); }
    // Per-stage capacity C_j, index j-1.
    std::vector<double> dp_capacities() const;

    VnfIndex pcscf() const { return pcscf_; }
    VnfIndex scscf() const { return scscf_; }

private:
    std::vector<VnfType> types_;
    std::vector<VnfIndex> dp_chain_;
    VnfIndex pcscf_ = -1;
    VnfIndex scscf_ = -1;
};

// Capacities and overload thresholds measured for the prototype's VNFs.
Catalog default_catalog();

enum class InstanceState { working, buffered, draining, destroyed };

const char* to_string(InstanceState s);

struct VnfInstance {
    int id = 0;
    VnfIndex vnf = 0;
    DcId dc = 0;
    InstanceState state = InstanceState::working;
    std::int64_t ready_at_ms = 0; // boot completes at this time
    double assigned_load = 0.0;   // units/s of pinned traffic
    int buffered_interval = -1;   // enqueue stamp while buffered

    bool ready(std::int64_t now_ms) const { return now_ms >= ready_at_ms; }
};

struct BufferEntry {
    int id = 0;
    int interval = 0;
};

struct CreationRecord {
    std::int64_t time_ms = 0;
    DcId dc = 0;
    VnfIndex vnf = 0;
    int id = 0;
    bool initial = false;
};

struct Census {
    int working = 0;
    int buffered = 0;
    int draining = 0;
    int destroyed = 0;
    int created = 0;
};

// Instances of every VNF type hosted by one datacenter, plus one buffer queue
// per type. Instance ids start at n (0..n-1 address datacenters in hop codes)
// and stay below 256 so they fit a hop-code lane; ids of destroyed instances
// are recycled.
class Inventory {
public:
    static constexpr int kMaxInstanceId = 255;

    Inventory(DcId dc, int datacenter_count, const Catalog& catalog, std::int64_t boot_delay_ms);

    DcId dc() const { return dc_; }
    const Catalog& catalog() const { return *catalog_; }

    // Pops up to `count` instances from the queue tail (instant reactivation),
    // then creates the rest with the boot delay. Returns activated ids.
    std::vector<int> scale_out(VnfIndex vnf, int count, std::int64_t now_ms);

    // Places already-running instances without logging them as created.
    std::vector<int> seed_initial(VnfIndex vnf, int count);

    // Moves working instances to the buffer queue tail stamped with the interval.
    void scale_in(std::span<const int> ids, int current_interval);

    // Dequeues from the head while new_interval - stamp >= tau. Dequeued
    // instances drain and are destroyed once idle. Returns the dequeued ids.
    std::vector<int> evict_expired(int new_interval, int tau);

    // Destroys draining instances that carry no traffic; returns their ids.
    std::vector<int> reap_drained();

    // Scales the working count of `vnf` to `target`. Scale-in picks the
    // least-loaded instances. Returns the number of instances added (may be
    // negative).
    int apply_target(VnfIndex vnf, int target, int current_interval, std::int64_t now_ms);

    // Working ids of `vnf` ordered by scale-in preference (least loaded first).
    std::vector<int> scale_in_candidates(VnfIndex vnf) const;

    double available_capacity(VnfIndex vnf) const;
    int working_count(VnfIndex vnf) const;
    int buffered_count(VnfIndex vnf) const;
    std::vector<int> working_ids(VnfIndex vnf) const;
    Census census(VnfIndex vnf) const;

    bool contains(int id) const { return instances_.count(id) != 0; }
    const VnfInstance& instance(int id) const;
    void add_load(int id, double delta);

    const std::deque<BufferEntry>& buffer(VnfIndex vnf) const;
    const std::map<int, VnfInstance>& instances() const { return instances_; }
    const std::vector<CreationRecord>& creation_log() const { return created_; }

private:
    int allocate_id() const;
    VnfInstance& mutable_instance(int id);

    DcId dc_;
    int n_;
    const Catalog* catalog_;
    std::int64_t boot_delay_ms_;
    std::map<int, VnfInstance> instances_;
    std::vector<std::deque<BufferEntry>> queues_;
    std::vector<int> destroyed_;
    std::vector<int> created_count_;
    std::vector<CreationRecord> created_;
};

} // namespace geochain
