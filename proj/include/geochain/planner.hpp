#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "geochain/topology.hpp"

namespace geochain {

// Entry, one datacenter per DP stage, exit: m + 2 entries.
using ServiceChainPath = std::vector<DcId>;

struct EntryExitPair {
    DcId entry = 0;
    DcId exit = 0;
    auto operator<=>(const EntryExitPair&) const = default;
};

// One path per entry-exit pair per scaling interval.
using PathTable = std::map<EntryExitPair, ServiceChainPath>;

// All stages hosted at the entry datacenter.
ServiceChainPath entry_only_path(EntryExitPair pair, int stages);

// n x m grid indexed by (datacenter, 1-based stage).
template <typename T>
class StageGrid {
public:
    StageGrid() = default;
    StageGrid(std::size_t datacenters, int stages, T fill = T{})
        : n_(datacenters), m_(stages), cells_(datacenters * static_cast<std::size_t>(stages), fill)
    {
    }

    std::size_t datacenters() const { return n_; }
    int stages() const { return m_; }

    T& at(DcId dc, int stage) { return cells_.at(index(dc, stage)); }
    const T& at(DcId dc, int stage) const { return cells_.at(index(dc, stage)); }

    bool operator==(const StageGrid&) const = default;

private:
    std::size_t index(DcId dc, int stage) const
    {
        return static_cast<std::size_t>(dc) * static_cast<std::size_t>(m_) +
               static_cast<std::size_t>(stage - 1);
    }

    std::size_t n_ = 0;
    int m_ = 0;
    std::vector<T> cells_;
};

using StageCapacity = StageGrid<double>; // available units/s
using StageCounts = StageGrid<int>;      // instance counts

// New instances of one VNF needed to serve `demand` beyond `available`:
// ceil((demand - available) / per_instance), or 0 when capacity suffices.
int instances_needed(double demand, double available, double per_instance);

// New instances needed to carry `demand` along stages 1..last_stage of a path.
int path_new_instances(std::span<const DcId> path, const StageCapacity& avail,
                       std::span<const double> stage_capacity, double demand, int last_stage);

// ---------------------------------------------------------------------------
// Control plane sizing.

struct CpPlan {
    std::vector<int> pcscf; // per datacenter
    DcId scscf_dc = 0;
    int scscf = 1;
};

// S-CSCF count from the total predicted transaction rate; P-CSCF count per
// datacenter from the traffic that enters or exits there (diagonal once).
// Every datacenter keeps at least one P-CSCF and the home keeps one S-CSCF.
CpPlan size_cp(const WorkloadMatrix& predicted, double pcscf_capacity, double scscf_capacity,
               DcId scscf_dc);

// ---------------------------------------------------------------------------
// Data plane path computation.

struct PathChoice {
    ServiceChainPath path;
    int new_instances = 0;
    bool fallback = false;           // produced by shortest-path + stage placement
    bool violates_threshold = false; // only possible for the fallback
};

struct PathRequest {
    EntryExitPair pair;
    double demand = 0.0;
    double threshold_ms = 0.0;
};

PathChoice compute_path(const PathRequest& req, const DelayMatrix& delays, const StageCapacity& avail,
                        std::span<const double> stage_capacity, const ServiceChainPath& current);

// Loop repair options for extending `record` (positions 0..stage-1) with a
// datacenter for `stage`.
// Consolidate: move every stage inside the loop onto the revisited datacenter.
std::vector<DcId> consolidate_loop(std::span<const DcId> record, DcId candidate, int stage);
// Substitute: the highest-capacity datacenter (not exit, not candidate) that
// keeps the record loopless.
std::vector<DcId> substitute_loop(std::span<const DcId> record, DcId candidate, int stage, DcId exit,
                                  const StageCapacity& avail);

// Appends `candidate` for `stage`; if that revisits a datacenter, returns the
// cheaper of the two repairs (ties favour consolidation).
std::vector<DcId> eliminate_loop(std::span<const DcId> record, DcId candidate, int stage, DcId exit,
                                 const StageCapacity& avail, std::span<const double> stage_capacity,
                                 double demand);

struct Placement {
    ServiceChainPath path;
    int new_instances = 0;
};

// Minimum-new-instance monotone placement of m stages onto a fixed simple
// datacenter path (entry first, exit last) by dynamic programming. Throws
// InfeasiblePlacement when the path has more than m + 2 datacenters.
Placement place_stages(std::span<const DcId> dc_path, const StageCapacity& avail, double demand,
                       std::span<const double> stage_capacity);

// ---------------------------------------------------------------------------
// Data plane proactive scaling.

struct DpPlanInput {
    const WorkloadMatrix* load = nullptr; // predicted pkt/s per pair
    const DelayMatrix* delays = nullptr;  // predicted one-way ms
    StageCounts working;                  // current working instances
    StageCounts buffered;                 // idle instances that can be reactivated; empty = none
    const PathTable* current = nullptr;
    std::vector<double> stage_capacity; // C_j
    double threshold_ms = 0.0;
};

enum class PathSource { kept, recomputed, local };

struct DpPlan {
    StageCounts target;           // working instances after the plan
    StageCounts added;            // scale-out per (dc, stage)
    StageCounts removed;          // scale-in per (dc, stage)
    StageCounts reused;           // part of `added` served by reactivating buffered instances
    StageCapacity assigned;       // demand packed onto each (dc, stage)
    PathTable paths;
    std::map<EntryExitPair, PathSource> source;
    std::map<EntryExitPair, bool> fallback;
};

DpPlan plan_dp(const DpPlanInput& in);

} // namespace geochain
