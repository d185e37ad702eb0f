#include "geochain/provisioning.hpp"

#include <algorithm>
#include <string>

#include "geochain/error.hpp"

namespace geochain {

Catalog::Catalog(std::vector<VnfType> types, std::vector<std::string> dp_chain)
    : types_(std::move(types))
{
    for (const auto& name : dp_chain) {
        auto v = find(name);
        if (!v) {
            throw ContractViolation("chain references unknown VNF " + name);
        }
        dp_chain_.push_back(*v);
    }
    for (std::size_t i = 0; i < types_.size(); ++i) {
        if (types_[i].capacity <= 0.0) {
            throw ContractViolation("VNF " + types_[i].name + " needs capacity > 0");
        }
        if (types_[i].plane == Plane::control) {
            if (types_[i].stage == 1) {
                pcscf_ = static_cast<VnfIndex>(i);
            } else if (types_[i].stage == 2) {
                scscf_ = static_cast<VnfIndex>(i);
            }
        }
    }
}

std::optional<VnfIndex> Catalog::find(const std::string& name) const
{
    for (std::size_t i = 0; i < types_.size(); ++i) {
        if (types_[i].name == name) {
            return static_cast<VnfIndex>(i);
        }
    }
    return std::nullopt;
}

std::vector<double> Catalog::dp_capacities() const
{
    std::vector<double> out;
    for (VnfIndex v : dp_chain_) {
        out.push_back(type(v).capacity);
    }
    return out;
}

Catalog default_catalog()
{
    // CP input rates are SIP packets; one transaction is two packets at a proxy.
    std::vector<VnfType> types{
        {"pcscf", Plane::control, 1, 500.0, {70.0, 50.0, 1000.0}},
        {"scscf", Plane::control, 2, 200.0, {70.0, 50.0, 400.0}},
        {"firewall", Plane::data, 1, 35000.0, {90.0, 50.0, 35000.0}},
        // DP input thresholds equal capacity.
        {"ids", Plane::data, 2, 20000.0, {90.0, 50.0, 20000.0}},
        {"transcoder", Plane::data, 3, 15000.0, {90.0, 50.0, 15000.0}},
    };
    return Catalog(std::move(types), {"firewall", "ids", "transcoder"});
}

const char* to_string(InstanceState s)
{
    switch (s) {
    case InstanceState::working:
        return "working";
    case InstanceState::buffered:
        return "buffered";
    case InstanceState::draining:
        return "draining";
    case InstanceState::destroyed:
        return "destroyed";
    }
    return "?";
}

Inventory::Inventory(DcId dc, int datacenter_count, const Catalog& catalog, std::int64_t boot_delay_ms)
    : dc_(dc),
      n_(datacenter_count),
      catalog_(&catalog),
      boot_delay_ms_(boot_delay_ms),
      queues_(catalog.size()),
      destroyed_(catalog.size(), 0),
      created_count_(catalog.size(), 0)
{
    if (boot_delay_ms_ < 0) {
        throw ContractViolation("boot delay must be >= 0");
    }
}

int Inventory::allocate_id() const
{
    int id = n_;
    for (const auto& [used, _] : instances_) {
        if (used < id) {
            continue;
        }
        if (used != id) {
            break;
        }
        ++id;
    }
    if (id > kMaxInstanceId) {
        throw ContractViolation("instance id space exhausted in datacenter " + std::to_string(dc_));
    }
    return id;
}

VnfInstance& Inventory::mutable_instance(int id)
{
    auto it = instances_.find(id);
    if (it == instances_.end()) {
        throw ContractViolation("unknown instance " + std::to_string(id));
    }
    return it->second;
}

const VnfInstance& Inventory::instance(int id) const
{
    auto it = instances_.find(id);
    if (it == instances_.end()) {
        throw ContractViolation("unknown instance " + std::to_string(id));
    }
    return it->second;
}

std::vector<int> Inventory::scale_out(VnfIndex vnf, int count, std::int64_t now_ms)
{
    if (count < 1) {
        throw ContractViolation("scale_out count must be >= 1");
    }
    std::vector<int> out;
    auto& q = queues_.at(static_cast<std::size_t>(vnf));
    while (count > 0 && !q.empty()) {
        const int id = q.back().id;
        q.pop_back();
        auto& inst = mutable_instance(id);
        inst.state = InstanceState::working;
        inst.buffered_interval = -1;
        out.push_back(id);
        --count;
    }
    for (; count > 0; --count) {
        const int id = allocate_id();
        instances_[id] = VnfInstance{id, vnf, dc_, InstanceState::working, now_ms + boot_delay_ms_, 0.0, -1};
        ++created_count_[static_cast<std::size_t>(vnf)];
        created_.push_back({now_ms, dc_, vnf, id, false});
        out.push_back(id);
    }
    return out;
}

std::vector<int> Inventory::seed_initial(VnfIndex vnf, int count)
{
    std::vector<int> out;
    for (int i = 0; i < count; ++i) {
        const int id = allocate_id();
        instances_[id] = VnfInstance{id, vnf, dc_, InstanceState::working, 0, 0.0, -1};
        ++created_count_[static_cast<std::size_t>(vnf)];
        created_.push_back({0, dc_, vnf, id, true});
        out.push_back(id);
    }
    return out;
}

void Inventory::scale_in(std::span<const int> ids, int current_interval)
{
    for (int id : ids) {
        const auto& inst = instance(id);
        if (inst.state != InstanceState::working) {
            throw ContractViolation("scale_in on " + std::string(to_string(inst.state)) +
                                    " instance " + std::to_string(id));
        }
    }
    for (int id : ids) {
        auto& inst = mutable_instance(id);
        inst.state = InstanceState::buffered;
        inst.buffered_interval = current_interval;
        auto& q = queues_.at(static_cast<std::size_t>(inst.vnf));
        // Stamps are non-decreasing head to tail.
        if (!q.empty() && q.back().interval > current_interval) {
            throw ContractViolation("scale_in stamp older than queue tail");
        }
        q.push_back({id, current_interval});
    }
}

std::vector<int> Inventory::evict_expired(int new_interval, int tau)
{
    std::vector<int> evicted;
    for (auto& q : queues_) {
        while (!q.empty() && new_interval - q.front().interval >= tau) {
            auto& inst = mutable_instance(q.front().id);
            inst.state = InstanceState::draining;
            inst.buffered_interval = -1;
            evicted.push_back(q.front().id);
            q.pop_front();
        }
    }
    reap_drained();
    return evicted;
}

std::vector<int> Inventory::reap_drained()
{
    std::vector<int> gone;
    for (auto it = instances_.begin(); it != instances_.end();) {
        if (it->second.state == InstanceState::draining && it->second.assigned_load <= 0.0) {
            ++destroyed_[static_cast<std::size_t>(it->second.vnf)];
            gone.push_back(it->first);
            it = instances_.erase(it);
        } else {
            ++it;
        }
    }
    return gone;
}

std::vector<int> Inventory::scale_in_candidates(VnfIndex vnf) const
{
    std::vector<int> ids = working_ids(vnf);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        const auto& ia = instances_.at(a);
        const auto& ib = instances_.at(b);
        if (ia.assigned_load != ib.assigned_load) {
            return ia.assigned_load < ib.assigned_load;
        }
        return a > b;
    });
    return ids;
}

int Inventory::apply_target(VnfIndex vnf, int target, int current_interval, std::int64_t now_ms)
{
    if (target < 0) {
        throw ContractViolation("negative target instance count");
    }
    const int have = working_count(vnf);
    if (target > have) {
        scale_out(vnf, target - have, now_ms);
    } else if (target < have) {
        auto ids = scale_in_candidates(vnf);
        ids.resize(static_cast<std::size_t>(have - target));
        scale_in(ids, current_interval);
    }
    return target - have;
}

double Inventory::available_capacity(VnfIndex vnf) const
{
    double total = 0.0;
    const double cap = catalog_->type(vnf).capacity;
    for (const auto& [id, inst] : instances_) {
        if (inst.vnf == vnf && inst.state == InstanceState::working) {
            total += std::max(0.0, cap - inst.assigned_load);
        }
    }
    return total;
}

int Inventory::working_count(VnfIndex vnf) const
{
    return static_cast<int>(working_ids(vnf).size());
}

int Inventory::buffered_count(VnfIndex vnf) const
{
    return static_cast<int>(queues_.at(static_cast<std::size_t>(vnf)).size());
}

std::vector<int> Inventory::working_ids(VnfIndex vnf) const
{
    std::vector<int> out;
    for (const auto& [id, inst] : instances_) {
        if (inst.vnf == vnf && inst.state == InstanceState::working) {
            out.push_back(id);
        }
    }
    return out;
}

Census Inventory::census(VnfIndex vnf) const
{
    Census c;
    for (const auto& [id, inst] : instances_) {
        if (inst.vnf != vnf) {
            continue;
        }
        switch (inst.state) {
        case InstanceState::working:
            ++c.working;
            break;
        case InstanceState::buffered:
            ++c.buffered;
            break;
        case InstanceState::draining:
            ++c.draining;
            break;
        case InstanceState::destroyed:
            break;
        }
    }
    c.destroyed = destroyed_.at(static_cast<std::size_t>(vnf));
    c.created = created_count_.at(static_cast<std::size_t>(vnf));
    return c;
}

void Inventory::add_load(int id, double delta)
{
    auto& inst = mutable_instance(id);
    inst.assigned_load = std::max(0.0, inst.assigned_load + delta);
}

const std::deque<BufferEntry>& Inventory::buffer(VnfIndex vnf) const
{
    return queues_.at(static_cast<std::size_t>(vnf));
}

} // namespace geochain
