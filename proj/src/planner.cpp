#include "geochain/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "geochain/error.hpp"

namespace geochain {

namespace {

constexpr double kEps = 1e-9;
constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

bool within(double delay, double threshold) { return delay <= threshold + kEps; }

ServiceChainPath exit_filled(std::span<const DcId> record, int m, DcId exit)
{
    ServiceChainPath p(record.begin(), record.end());
    p.resize(static_cast<std::size_t>(m) + 2, exit);
    return p;
}

// A stored path is reused only if it still has the right shape and no loop.
bool usable_current(const ServiceChainPath& path, EntryExitPair pair, int stages)
{
    return path.size() == static_cast<std::size_t>(stages) + 2 && path.front() == pair.entry &&
           path.back() == pair.exit && is_loopless(path);
}

} // namespace

ServiceChainPath entry_only_path(EntryExitPair pair, int stages)
{
    ServiceChainPath p(static_cast<std::size_t>(stages) + 2, pair.entry);
    p.back() = pair.exit;
    return p;
}

int instances_needed(double demand, double available, double per_instance)
{
    const double short_by = demand - available;
    if (short_by <= kEps) {
        return 0;
    }
    return static_cast<int>(std::ceil(short_by / per_instance - kEps));
}

int path_new_instances(std::span<const DcId> path, const StageCapacity& avail,
                       std::span<const double> stage_capacity, double demand, int last_stage)
{
    int total = 0;
    for (int j = 1; j <= last_stage; ++j) {
        total += instances_needed(demand, avail.at(path[static_cast<std::size_t>(j)], j),
                                  stage_capacity[static_cast<std::size_t>(j - 1)]);
    }
    return total;
}

CpPlan size_cp(const WorkloadMatrix& predicted, double pcscf_capacity, double scscf_capacity,
               DcId scscf_dc)
{
    const auto n = static_cast<DcId>(predicted.size());
    CpPlan plan;
    plan.scscf_dc = scscf_dc;
    plan.scscf = std::max(1, instances_needed(predicted.sum(), 0.0, scscf_capacity));
    plan.pcscf.assign(static_cast<std::size_t>(n), 1);
    for (DcId d = 0; d < n; ++d) {
        double load = 0.0;
        for (DcId o = 0; o < n; ++o) {
            load += predicted(d, o);
            if (o != d) {
                load += predicted(o, d);
            }
        }
        plan.pcscf[static_cast<std::size_t>(d)] = std::max(1, instances_needed(load, 0.0, pcscf_capacity));
    }
    return plan;
}

std::vector<DcId> consolidate_loop(std::span<const DcId> record, DcId candidate, int stage)
{
    std::vector<DcId> out(record.begin(), record.end());
    auto last = std::find(out.rbegin(), out.rend(), candidate);
    if (last == out.rend()) {
        out.push_back(candidate);
        return out;
    }
    const auto revisit = static_cast<std::size_t>(std::distance(last, out.rend()) - 1);
    out.resize(static_cast<std::size_t>(stage) + 1);
    for (std::size_t i = revisit + 1; i < out.size(); ++i) {
        out[i] = candidate;
    }
    return out;
}

std::vector<DcId> substitute_loop(std::span<const DcId> record, DcId candidate, int stage, DcId exit,
                                  const StageCapacity& avail)
{
    const auto n = static_cast<DcId>(avail.datacenters());
    const DcId tail = record.back();
    DcId best = -1;
    for (DcId d = 0; d < n; ++d) {
        if (d == exit || d == candidate) {
            continue;
        }
        const bool fresh = std::find(record.begin(), record.end(), d) == record.end();
        if (d != tail && !fresh) {
            continue;
        }
        if (best < 0 || avail.at(d, stage) > avail.at(best, stage)) {
            best = d;
        }
    }
    std::vector<DcId> out(record.begin(), record.end());
    out.push_back(best < 0 ? tail : best);
    return out;
}

std::vector<DcId> eliminate_loop(std::span<const DcId> record, DcId candidate, int stage, DcId exit,
                                 const StageCapacity& avail, std::span<const double> stage_capacity,
                                 double demand)
{
    std::vector<DcId> appended(record.begin(), record.end());
    appended.push_back(candidate);
    if (is_loopless(appended)) {
        return appended;
    }
    auto a = consolidate_loop(record, candidate, stage);
    auto b = substitute_loop(record, candidate, stage, exit, avail);
    const int cost_a = path_new_instances(a, avail, stage_capacity, demand, stage);
    const int cost_b = path_new_instances(b, avail, stage_capacity, demand, stage);
    return cost_b < cost_a ? b : a;
}

Placement place_stages(std::span<const DcId> dc_path, const StageCapacity& avail, double demand,
                       std::span<const double> stage_capacity)
{
    const int k = static_cast<int>(dc_path.size());
    const int m = static_cast<int>(stage_capacity.size());
    if (k < 2 || m < 1) {
        throw ContractViolation("place_stages needs k >= 2 datacenters and m >= 1 stages");
    }

    // num(i, j): new stage-j instances if stage j sits on the i-th datacenter.
    auto num = [&](int i, int j) -> std::int64_t {
        if (m - j + 1 < k - i) {
            return kInf;
        }
        return instances_needed(demand, avail.at(dc_path[static_cast<std::size_t>(i - 1)], j),
                                stage_capacity[static_cast<std::size_t>(j - 1)]);
    };
    auto add = [](std::int64_t a, std::int64_t b) { return (a >= kInf || b >= kInf) ? kInf : a + b; };

    // N[i][j], 1-based.
    std::vector<std::vector<std::int64_t>> N(static_cast<std::size_t>(k) + 1,
                                             std::vector<std::int64_t>(static_cast<std::size_t>(m) + 1, kInf));
    N[1][1] = num(1, 1);
    if (k >= 2) {
        N[2][1] = num(2, 1);
    }
    for (int j = 2; j <= m; ++j) {
        N[1][j] = add(N[1][j - 1], num(1, j));
    }
    for (int j = 2; j <= m; ++j) {
        for (int i = 2; i <= k; ++i) {
            N[i][j] = add(std::min(N[i - 1][j - 1], N[i][j - 1]), num(i, j));
        }
    }

    int at = k - 1; // ties go to the earlier datacenter
    if (N[k][m] < N[k - 1][m]) {
        at = k;
    }
    if (N[at][m] >= kInf) {
        throw InfeasiblePlacement("cannot place " + std::to_string(m) + " stages on a " +
                                  std::to_string(k) + "-datacenter path");
    }

    Placement out;
    out.new_instances = static_cast<int>(N[at][m]);
    out.path.assign(static_cast<std::size_t>(m) + 2, dc_path.front());
    out.path.back() = dc_path.back();
    int i = at;
    for (int j = m; j >= 1; --j) {
        out.path[static_cast<std::size_t>(j)] = dc_path[static_cast<std::size_t>(i - 1)];
        if (j == 1) {
            break;
        }
        // Predecessor of stage j: datacenter i-1 (preferred on ties) or i.
        if (i >= 2 && N[i - 1][j - 1] <= N[i][j - 1]) {
            --i;
        }
    }
    return out;
}

PathChoice compute_path(const PathRequest& req, const DelayMatrix& delays, const StageCapacity& avail,
                        std::span<const double> stage_capacity, const ServiceChainPath& current)
{
    const DcId entry = req.pair.entry;
    const DcId exit = req.pair.exit;
    const int m = static_cast<int>(stage_capacity.size());
    const auto n = static_cast<DcId>(delays.size());
    if (entry == exit) {
        throw ContractViolation("compute_path requires entry != exit");
    }
    if (m < 1) {
        throw ContractViolation("compute_path requires at least one stage");
    }

    ServiceChainPath best = usable_current(current, req.pair, m) ? current : entry_only_path(req.pair, m);
    int best_cost = path_new_instances(best, avail, stage_capacity, req.demand, m);

    auto consider = [&](const ServiceChainPath& p) {
        const int cost = path_new_instances(p, avail, stage_capacity, req.demand, m);
        if (cost < best_cost && within(path_delay(p, delays), req.threshold_ms)) {
            best = p;
            best_cost = cost;
        }
    };

    for (DcId v = 0; v < n; ++v) {
        if (v == exit) {
            continue;
        }
        std::vector<DcId> record{entry, v};
        for (int x = 2; x <= m; ++x) {
            DcId pick = -1;
            for (DcId d = 0; d < n; ++d) {
                if (d != exit && (pick < 0 || avail.at(d, x) > avail.at(pick, x))) {
                    pick = d;
                }
            }
            record = eliminate_loop(record, pick, x, exit, avail, stage_capacity, req.demand);
            consider(exit_filled(record, m, exit));
        }
        consider(exit_filled(std::vector<DcId>{entry, v}, m, exit));
    }
    consider(exit_filled(std::vector<DcId>{entry}, m, exit));
    consider(entry_only_path(req.pair, m));

    PathChoice out{best, best_cost, false, false};
    if (!within(path_delay(best, delays), req.threshold_ms)) {
        auto dc_path = shortest_delay_path(entry, exit, delays);
        if (dc_path.size() > static_cast<std::size_t>(m) + 2) {
            dc_path = shortest_delay_path_bounded(entry, exit, delays, static_cast<std::size_t>(m) + 2);
        }
        auto placed = place_stages(dc_path, avail, req.demand, stage_capacity);
        out.path = std::move(placed.path);
        out.new_instances = placed.new_instances;
        out.fallback = true;
        out.violates_threshold = !within(path_delay(out.path, delays), req.threshold_ms);
    }
    return out;
}

namespace {

// Scratch capacity bookkeeping for one planning round. `spare` counts
// buffered instances not yet reactivated by this plan.
struct Ledger {
    StageCapacity avail;
    StageCounts added;
    StageCapacity assigned;
    const std::vector<double>& cap;
    StageCounts spare;
    StageCounts reused;

    // Working capacity plus what reactivating buffered instances would add:
    // the capacity a new path can use without creating instances.
    StageCapacity reusable() const
    {
        StageCapacity out = avail;
        for (DcId d = 0; d < static_cast<DcId>(avail.datacenters()); ++d) {
            for (int j = 1; j <= avail.stages(); ++j) {
                out.at(d, j) += spare.at(d, j) * cap[static_cast<std::size_t>(j - 1)];
            }
        }
        return out;
    }

    bool fits(const ServiceChainPath& p, double demand) const
    {
        for (int j = 1; j < static_cast<int>(p.size()) - 1; ++j) {
            if (avail.at(p[static_cast<std::size_t>(j)], j) + kEps < demand) {
                return false;
            }
        }
        return true;
    }

    void scale_out_for(const ServiceChainPath& p, double demand)
    {
        for (int j = 1; j < static_cast<int>(p.size()) - 1; ++j) {
            const DcId d = p[static_cast<std::size_t>(j)];
            const double c = cap[static_cast<std::size_t>(j - 1)];
            const int extra = instances_needed(demand, avail.at(d, j), c);
            const int from_buffer = std::min(extra, spare.at(d, j));
            spare.at(d, j) -= from_buffer;
            reused.at(d, j) += from_buffer;
            added.at(d, j) += extra;
            avail.at(d, j) += extra * c;
        }
    }

    void deduct(const ServiceChainPath& p, double demand)
    {
        for (int j = 1; j < static_cast<int>(p.size()) - 1; ++j) {
            const DcId d = p[static_cast<std::size_t>(j)];
            avail.at(d, j) -= demand;
            assigned.at(d, j) += demand;
        }
    }
};

} // namespace

DpPlan plan_dp(const DpPlanInput& in)
{
    const auto& load = *in.load;
    const auto& delays = *in.delays;
    const auto n = static_cast<DcId>(load.size());
    const int m = static_cast<int>(in.stage_capacity.size());
    if (delays.size() != load.size() || in.working.datacenters() != load.size() || in.working.stages() != m) {
        throw ContractViolation("plan_dp: inconsistent dimensions");
    }

    const bool has_buffer = in.buffered.datacenters() == load.size() && in.buffered.stages() == m;
    Ledger led{StageCapacity(load.size(), m), StageCounts(load.size(), m), StageCapacity(load.size(), m),
               in.stage_capacity, has_buffer ? in.buffered : StageCounts(load.size(), m),
               StageCounts(load.size(), m)};
    for (DcId d = 0; d < n; ++d) {
        for (int j = 1; j <= m; ++j) {
            led.avail.at(d, j) = in.working.at(d, j) * in.stage_capacity[static_cast<std::size_t>(j - 1)];
        }
    }

    DpPlan plan;
    auto current_of = [&](EntryExitPair p) {
        auto it = in.current->find(p);
        if (it != in.current->end() && usable_current(it->second, p, m)) {
            return it->second;
        }
        return entry_only_path(p, m);
    };

    // Pass 1: keep feasible current paths.
    for (DcId e = 0; e < n; ++e) {
        for (DcId x = 0; x < n; ++x) {
            if (e == x) {
                continue;
            }
            const EntryExitPair p{e, x};
            const double q = load(e, x);
            auto path = current_of(p);
            if (led.fits(path, q) && within(path_delay(path, delays), in.threshold_ms)) {
                led.deduct(path, q);
                plan.paths[p] = std::move(path);
                plan.source[p] = PathSource::kept;
                plan.fallback[p] = false;
            }
        }
    }
    // Pass 2: recompute the rest.
    for (DcId e = 0; e < n; ++e) {
        for (DcId x = 0; x < n; ++x) {
            const EntryExitPair p{e, x};
            if (e == x || plan.paths.count(p)) {
                continue;
            }
            const double q = load(e, x);
            auto choice = compute_path({p, q, in.threshold_ms}, delays, led.reusable(), in.stage_capacity,
                                       current_of(p));
            led.scale_out_for(choice.path, q);
            led.deduct(choice.path, q);
            plan.paths[p] = std::move(choice.path);
            plan.source[p] = PathSource::recomputed;
            plan.fallback[p] = choice.fallback;
        }
    }
    // Pass 3: entry == exit pairs stay local and go last.
    for (DcId e = 0; e < n; ++e) {
        const EntryExitPair p{e, e};
        const double q = load(e, e);
        auto path = entry_only_path(p, m);
        led.scale_out_for(path, q);
        led.deduct(path, q);
        plan.paths[p] = std::move(path);
        plan.source[p] = PathSource::local;
        plan.fallback[p] = false;
    }

    // Scale in everything that carries no packed demand.
    plan.target = StageCounts(load.size(), m);
    plan.removed = StageCounts(load.size(), m);
    for (DcId d = 0; d < n; ++d) {
        for (int j = 1; j <= m; ++j) {
            const double c = in.stage_capacity[static_cast<std::size_t>(j - 1)];
            const int have = in.working.at(d, j) + led.added.at(d, j);
            const int need = std::min(have, instances_needed(led.assigned.at(d, j), 0.0, c));
            plan.target.at(d, j) = need;
            plan.removed.at(d, j) = have - need;
        }
    }
    plan.added = std::move(led.added);
    plan.reused = std::move(led.reused);
    plan.assigned = std::move(led.assigned);
    return plan;
}

} // namespace geochain
