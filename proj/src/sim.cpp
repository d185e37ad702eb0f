#include "geochain/sim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <tuple>

#include "geochain/error.hpp"
#include "geochain/orchestration.hpp"
#include "geochain/reactive.hpp"

namespace geochain {

using nlohmann::json;

FluidTick media_tick(std::span<const FluidFlow> flows, std::span<const double> hop_capacity)
{
    const std::size_t hops = hop_capacity.size();
    FluidTick out;
    out.saturated_hops.assign(flows.size(), 0);
    out.hop_arrivals.assign(hops, 0.0);
    std::vector<double> rate(flows.size());
    std::vector<std::vector<std::size_t>> users(hops);
    std::vector<std::vector<std::size_t>> next(hops);
    std::vector<int> indegree(hops, 0);
    for (std::size_t f = 0; f < flows.size(); ++f) {
        rate[f] = flows[f].rate;
        const auto& chain = flows[f].hops;
        for (std::size_t i = 0; i < chain.size(); ++i) {
            const auto h = static_cast<std::size_t>(chain[i]);
            if (h >= hops) {
                throw ContractViolation("flow references hop " + std::to_string(h) + " of " + std::to_string(hops));
            }
            users[h].push_back(f);
            if (i > 0) {
                next[static_cast<std::size_t>(chain[i - 1])].push_back(h);
                ++indegree[h];
            }
        }
    }
    // Each hop is settled once, after every hop upstream of it on any flow.
    std::set<std::size_t> ready;
    for (std::size_t h = 0; h < hops; ++h) {
        if (indegree[h] == 0) {
            ready.insert(h);
        }
    }
    std::size_t settled = 0;
    while (!ready.empty()) {
        const std::size_t h = *ready.begin();
        ready.erase(ready.begin());
        ++settled;
        double offered = 0.0;
        for (std::size_t f : users[h]) {
            offered += rate[f];
        }
        out.hop_arrivals[h] = offered;
        if (offered > hop_capacity[h]) {
            for (std::size_t f : users[h]) {
                rate[f] *= hop_capacity[h] / offered;
                ++out.saturated_hops[f];
            }
        }
        for (std::size_t d : next[h]) {
            if (--indegree[d] == 0) {
                ready.insert(d);
            }
        }
    }
    if (settled != hops) {
        throw ContractViolation("flow hops form a cycle");
    }
    out.delivered = std::move(rate);
    return out;
}

namespace {

enum class Ev {
    delay_change,
    msg_to_local,
    msg_to_global,
    timer,
    interval_end,
    tick,
    user_arrival,
    register_done,
    invite_done,
    flow_hop,
    call_end,
};

struct Event {
    std::int64_t t = 0;
    std::uint64_t seq = 0;
    Ev kind = Ev::tick;
    int a = 0;
    std::int64_t b = 0;
    std::shared_ptr<const ControllerMsg> msg;
};

struct Later {
    bool operator()(const Event& x, const Event& y) const
    {
        return x.t != y.t ? x.t > y.t : x.seq > y.seq;
    }
};

struct User {
    int id = 0;
    DcId dc = 0;
    std::string ip;
    std::int64_t arrived_ms = 0;
};

struct Call {
    int id = 0;
    int caller = 0;
    int callee = 0;
    std::int64_t started_ms = 0;
    std::int64_t established_ms = -1;
    std::int64_t ended_ms = -1;
    std::vector<int> flows;
};

enum class FlowState { routing, active, dropped, closed };

struct Hop {
    DcId dc = 0;
    int id = 0;
};

struct Flow {
    int id = 0;
    int call = 0;
    DcId entry = 0;
    DcId exit = 0;
    PacketHeader header;
    FlowState state = FlowState::routing;
    bool dropped = false;
    DropReason reason = DropReason::none;
    DcId dropped_at = -1;
    long long tag_interval = -1;
    ServiceChainPath path;
    std::vector<Hop> chain; // instances still carrying this flow's load
    std::vector<Hop> used;  // every instance the flow was assigned
    std::vector<DcId> visited;
    std::int64_t admitted_ms = 0;
    std::int64_t active_ms = -1;
    std::int64_t ended_ms = -1;
    double offered = 0.0;
    double delivered = 0.0;
    double rtt_sum = 0.0;
    int rtt_ticks = 0;
};

double percentile(std::vector<double> xs, double q)
{
    if (xs.empty()) {
        return 0.0;
    }
    std::sort(xs.begin(), xs.end());
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size())));
    return xs[std::min(xs.size() - 1, rank == 0 ? 0 : rank - 1)];
}

double mean(const std::vector<double>& xs)
{
    if (xs.empty()) {
        return 0.0;
    }
    double s = 0.0;
    for (double x : xs) {
        s += x;
    }
    return s / static_cast<double>(xs.size());
}

class Simulator {
public:
    explicit Simulator(const ScenarioConfig& cfg);
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    MetricsReport run();

private:
    // time and randomness
    void schedule(std::int64_t t, Ev kind, int a = 0, std::int64_t b = 0,
                  std::shared_ptr<const ControllerMsg> msg = nullptr);
    double uniform();
    double exponential(double rate);

    // setup
    void seed_instances(const PathTable& paths);
    PathTable initial_paths();
    PlanningOutput plan(const PlanningInput& in);

    // controller transport
    void send(const ControllerMsg& m, std::int64_t now);
    void dispatch(const Outbox& out, std::int64_t now);
    void check_skew();

    // traffic
    double rate_at(DcId dc, double t_s) const;
    void schedule_arrival(DcId dc, std::int64_t now);
    std::int64_t cp_transaction(DcId a, DcId b, bool two_proxies, std::int64_t now);
    void on_user(DcId dc, std::int64_t now);
    void on_registered(int user, std::int64_t now);
    void start_call(int caller, int callee, std::int64_t now);
    void on_established(int call, std::int64_t now);
    void on_flow_hop(int flow, DcId dc, std::int64_t now);
    void on_call_end(int call, std::int64_t now);
    void release(Flow& f);

    // per-second work
    void on_tick(std::int64_t now);
    void media(std::int64_t now);
    void stats_and_reactive(std::int64_t now);
    void reports(std::int64_t now);
    void on_interval_end(std::int64_t now);
    void start_round(std::int64_t now);
    void record_round(std::int64_t now);

    std::vector<InstanceCandidate> candidates(DcId dc, int stage, std::int64_t now);
    void handle(const Event& e);
    MetricsReport finish();

    const ScenarioConfig& cfg_;
    const std::size_t n_;
    const int m_;
    const std::int64_t horizon_ms_;
    const std::int64_t interval_ms_;
    Catalog catalog_;
    std::mt19937_64 rng_;
    DelayMatrix delays_;
    LocationService location_;

    std::priority_queue<Event, std::vector<Event>, Later> events_;
    std::uint64_t seq_ = 0;

    std::vector<std::unique_ptr<LocalController>> locals_;
    std::unique_ptr<GlobalController> global_;
    std::vector<std::map<int, InstanceHealth>> health_;
    std::vector<std::map<int, double>> arrivals_; // last tick's pkt/s per instance

    std::vector<User> users_;
    std::vector<Call> calls_;
    std::vector<Flow> flows_;
    std::deque<int> waiting_;
    std::vector<std::deque<int>> waiting_by_dc_;

    // control plane accounting
    std::vector<double> pcscf_tx_;      // this second
    double scscf_tx_ = 0.0;
    std::vector<double> pcscf_load_;    // last second, per ready instance capacity fraction
    double scscf_load_ = 0.0;
    std::vector<double> cp_pairs_;      // transactions per pair since the last batch
    std::vector<double> cp_completion_; // ms
    std::vector<double> register_completion_;

    // protocol bookkeeping
    bool round_pending_ = false;
    std::int64_t round_started_ms_ = 0;
    int rounds_ = 0;
    int overruns_ = 0;
    long long max_local_skew_ = 0;
    long long max_global_skew_ = 0;
    std::size_t transport_lost_ = 0;
    std::size_t transport_dup_ = 0;
    std::size_t on_demand_ = 0;
    std::map<long long, json> pending_plans_;

    MetricsReport report_;
};

Simulator::Simulator(const ScenarioConfig& cfg)
    : cfg_(cfg), n_(cfg.n()), m_(cfg.stages()), horizon_ms_(static_cast<std::int64_t>(std::llround(cfg.horizon_s * 1000))),
      interval_ms_(static_cast<std::int64_t>(std::llround(cfg.interval_s * 1000))), catalog_(cfg.catalog),
      rng_(cfg.seed), delays_(cfg.delays), location_(cfg.locations), health_(cfg.n()), arrivals_(cfg.n()),
      waiting_by_dc_(cfg.n()), pcscf_tx_(cfg.n(), 0.0), pcscf_load_(cfg.n(), 0.0), cp_pairs_(cfg.n() * cfg.n(), 0.0)
{
}

void Simulator::schedule(std::int64_t t, Ev kind, int a, std::int64_t b, std::shared_ptr<const ControllerMsg> msg)
{
    events_.push(Event{t, seq_++, kind, a, b, std::move(msg)});
}

double Simulator::uniform()
{
    return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
}

double Simulator::exponential(double rate)
{
    return -std::log(1.0 - uniform()) / rate;
}

void Simulator::seed_instances(const PathTable& paths)
{
    const auto boot = static_cast<std::int64_t>(std::llround(cfg_.boot_delay_s * 1000));
    for (std::size_t d = 0; d < n_; ++d) {
        Inventory inv(static_cast<DcId>(d), static_cast<int>(n_), catalog_, boot);
        inv.seed_initial(catalog_.pcscf(), 1);
        if (static_cast<DcId>(d) == cfg_.scscf_dc) {
            inv.seed_initial(catalog_.scscf(), 1);
        }
        for (int s = 1; s <= m_; ++s) {
            inv.seed_initial(catalog_.dp_stage(s), cfg_.initial_per_stage);
        }
        locals_.push_back(
            std::make_unique<LocalController>(LocalConfig{static_cast<DcId>(d), cfg_.tau}, std::move(inv), paths));
    }
}

PathTable Simulator::initial_paths()
{
    if (!cfg_.path_script.empty()) {
        return cfg_.path_script.front();
    }
    const WorkloadMatrix zero(n_);
    const PathTable none;
    DpPlanInput in{&zero, &delays_, StageCounts(n_, m_, cfg_.initial_per_stage), StageCounts(n_, m_), &none,
                   catalog_.dp_capacities(), cfg_.threshold_ms};
    return plan_dp(in).paths;
}

PlanningOutput Simulator::plan(const PlanningInput& in)
{
    PlanningOutput out;
    out.per_dc.resize(n_);
    const auto& snaps = *in.provision;
    json rec{{"interval", in.interval},
             {"predicted_dp_total", in.dp_load->sum()},
             {"predicted_cp_total", in.cp_load->sum()}};

    if (cfg_.static_provisioning) {
        for (std::size_t d = 0; d < n_; ++d) {
            out.per_dc[d].targets = snaps[d].working;
            out.per_dc[d].apply_provisioning = false;
        }
        out.paths = *in.current_paths;
    } else {
        const auto cp = size_cp(*in.cp_load, catalog_.type(catalog_.pcscf()).capacity,
                                catalog_.type(catalog_.scscf()).capacity, cfg_.scscf_dc);
        StageCounts working(n_, m_);
        StageCounts buffered(n_, m_);
        for (std::size_t d = 0; d < n_; ++d) {
            for (int s = 1; s <= m_; ++s) {
                const auto v = static_cast<std::size_t>(catalog_.dp_stage(s));
                working.at(static_cast<DcId>(d), s) = snaps[d].working.at(v);
                buffered.at(static_cast<DcId>(d), s) = snaps[d].buffered.at(v);
            }
        }
        DpPlanInput dp_in{in.dp_load, in.delays, working, buffered, in.current_paths, catalog_.dp_capacities(),
                          cfg_.threshold_ms};
        const auto dp = plan_dp(dp_in);
        int fallbacks = 0;
        for (const auto& [pair, fb] : dp.fallback) {
            fallbacks += fb ? 1 : 0;
        }
        rec["fallback_paths"] = fallbacks;
        for (std::size_t d = 0; d < n_; ++d) {
            const auto dc = static_cast<DcId>(d);
            auto& t = out.per_dc[d].targets;
            t.assign(catalog_.size(), 0);
            t.at(static_cast<std::size_t>(catalog_.pcscf())) = cp.pcscf.at(d);
            t.at(static_cast<std::size_t>(catalog_.scscf())) = dc == cp.scscf_dc ? cp.scscf : 0;
            for (int s = 1; s <= m_; ++s) {
                t.at(static_cast<std::size_t>(catalog_.dp_stage(s))) =
                    std::max(dp.target.at(dc, s), cfg_.min_per_stage);
            }
        }
        out.paths = dp.paths;
    }
    if (!cfg_.path_script.empty()) {
        out.paths = cfg_.path_script[static_cast<std::size_t>(in.interval + 1) % cfg_.path_script.size()];
    }
    json targets = json::array();
    for (const auto& d : out.per_dc) {
        targets.push_back(d.targets);
    }
    rec["targets"] = targets;
    pending_plans_[in.interval] = rec;
    return out;
}

// ---------------------------------------------------------------------------
// Transport

void Simulator::send(const ControllerMsg& m, std::int64_t now)
{
    const bool to_global = m.receiver == kGlobalEndpoint;
    const DcId from = to_global ? m.sender : cfg_.global_dc;
    const DcId to = to_global ? cfg_.global_dc : m.receiver;
    double delay = cfg_.control_delay_ms ? *cfg_.control_delay_ms : delays_(from, to);
    if (m.kind == MsgKind::enter_new_interval) {
        delay += cfg_.step5_skew_ms.at(static_cast<std::size_t>(to));
    }
    if (cfg_.trace_messages) {
        auto j = to_json(m);
        j["sent_ms"] = now;
        report_.messages.push_back(std::move(j));
    }
    if (cfg_.loss_rate > 0.0 && uniform() < cfg_.loss_rate) {
        ++transport_lost_;
        return;
    }
    auto shared = std::make_shared<const ControllerMsg>(m);
    const auto at = now + static_cast<std::int64_t>(std::llround(delay));
    const Ev kind = to_global ? Ev::msg_to_global : Ev::msg_to_local;
    schedule(at, kind, to, 0, shared);
    if (cfg_.dup_rate > 0.0 && uniform() < cfg_.dup_rate) {
        ++transport_dup_;
        schedule(at + 1 + static_cast<std::int64_t>(uniform() * 200.0), kind, to, 0, shared);
    }
}

void Simulator::dispatch(const Outbox& out, std::int64_t now)
{
    for (const auto& m : out.messages) {
        send(m, now);
    }
    for (const auto& t : out.timers) {
        schedule(t.at_ms, Ev::timer, 0, static_cast<std::int64_t>(t.msg_id));
    }
    if (out.round_completed) {
        record_round(now);
    }
}

void Simulator::check_skew()
{
    long long lo = locals_.front()->interval();
    long long hi = lo;
    for (const auto& l : locals_) {
        lo = std::min(lo, l->interval());
        hi = std::max(hi, l->interval());
    }
    max_local_skew_ = std::max(max_local_skew_, hi - lo);
    const long long g = global_->interval();
    max_global_skew_ = std::max({max_global_skew_, hi - g, g - lo});
}

// ---------------------------------------------------------------------------
// Traffic

double Simulator::rate_at(DcId dc, double t_s) const
{
    const double local = t_s - cfg_.traffic.start_s.at(static_cast<std::size_t>(dc));
    if (local < 0.0) {
        return 0.0;
    }
    const auto k = static_cast<std::size_t>(std::floor(local / cfg_.traffic.change_interval_s));
    return k < cfg_.traffic.rates.size() ? cfg_.traffic.rates[k] : 0.0;
}

// Poisson arrivals with a piecewise-constant rate: draw with the current rate
// and restart from the next rate change when the draw crosses it.
void Simulator::schedule_arrival(DcId dc, std::int64_t now)
{
    const auto& tr = cfg_.traffic;
    const double start = tr.start_s.at(static_cast<std::size_t>(dc));
    const double end = start + tr.change_interval_s * static_cast<double>(tr.rates.size());
    double t = static_cast<double>(now) / 1000.0;
    while (t < end && t * 1000.0 < static_cast<double>(horizon_ms_)) {
        if (t < start) {
            t = start;
        }
        const double boundary =
            start + tr.change_interval_s * (std::floor((t - start) / tr.change_interval_s + 1e-12) + 1.0);
        const double r = rate_at(dc, t + 1e-9);
        if (r > 0.0) {
            const double next = t + exponential(r);
            if (next < boundary) {
                const auto at = static_cast<std::int64_t>(std::llround(next * 1000.0));
                if (at < horizon_ms_) {
                    schedule(std::max(at, now), Ev::user_arrival, dc);
                }
                return;
            }
        }
        t = boundary;
    }
}

std::int64_t Simulator::cp_transaction(DcId a, DcId b, bool two_proxies, std::int64_t now)
{
    const DcId s = cfg_.scscf_dc;
    auto penalty = [](double load) { return 1000.0 * std::max(0.0, load - 1.0); };
    double ms = 2.0 * delays_(a, s);
    ms += cfg_.cp_processing_ms * 2.0 + penalty(pcscf_load_[static_cast<std::size_t>(a)]) + penalty(scscf_load_);
    pcscf_tx_[static_cast<std::size_t>(a)] += 1.0;
    scscf_tx_ += 1.0;
    if (two_proxies) {
        ms += 2.0 * delays_(s, b) + cfg_.cp_processing_ms + penalty(pcscf_load_[static_cast<std::size_t>(b)]);
        pcscf_tx_[static_cast<std::size_t>(b)] += 1.0;
    }
    cp_pairs_[static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b)] += 1.0;
    cp_completion_.push_back(ms);
    return now + static_cast<std::int64_t>(std::llround(ms));
}

void Simulator::on_user(DcId dc, std::int64_t now)
{
    User u;
    u.id = static_cast<int>(users_.size());
    u.dc = dc;
    u.ip = "10." + std::to_string(dc) + "." + std::to_string(u.id / 256) + "." + std::to_string(u.id % 256);
    u.arrived_ms = now;
    location_.bind(u.ip, cfg_.datacenters.at(static_cast<std::size_t>(dc)));
    users_.push_back(u);
    const auto done = cp_transaction(dc, dc, false, now);
    register_completion_.push_back(static_cast<double>(done - now));
    schedule(done, Ev::register_done, u.id);
    schedule_arrival(dc, now);
}

void Simulator::on_registered(int user, std::int64_t now)
{
    const DcId dc = users_[static_cast<std::size_t>(user)].dc;
    if (cfg_.traffic.pairing == Pairing::fifo) {
        if (waiting_.empty()) {
            waiting_.push_back(user);
            return;
        }
        const int peer = waiting_.front();
        waiting_.pop_front();
        start_call(peer, user, now);
        return;
    }
    int best = -1;
    for (std::size_t d = 0; d < n_; ++d) {
        if (static_cast<DcId>(d) == dc || waiting_by_dc_[d].empty()) {
            continue;
        }
        const int cand = waiting_by_dc_[d].front();
        if (best < 0 || cand < waiting_by_dc_[static_cast<std::size_t>(users_[static_cast<std::size_t>(best)].dc)].front()) {
            best = cand;
        }
    }
    if (best < 0) {
        waiting_by_dc_[static_cast<std::size_t>(dc)].push_back(user);
        return;
    }
    waiting_by_dc_[static_cast<std::size_t>(users_[static_cast<std::size_t>(best)].dc)].pop_front();
    start_call(best, user, now);
}

void Simulator::start_call(int caller, int callee, std::int64_t now)
{
    Call c;
    c.id = static_cast<int>(calls_.size());
    c.caller = caller;
    c.callee = callee;
    c.started_ms = now;
    calls_.push_back(c);
    const auto done = cp_transaction(users_[static_cast<std::size_t>(caller)].dc,
                                     users_[static_cast<std::size_t>(callee)].dc, true, now);
    schedule(done, Ev::invite_done, c.id);
}

void Simulator::on_established(int call, std::int64_t now)
{
    auto& c = calls_[static_cast<std::size_t>(call)];
    c.established_ms = now;
    const auto& a = users_[static_cast<std::size_t>(c.caller)];
    const auto& b = users_[static_cast<std::size_t>(c.callee)];
    CallSession s;
    s.caller_id = "user" + std::to_string(a.id);
    s.callee_id = "user" + std::to_string(b.id);
    s.caller_ip = a.ip;
    s.callee_ip = b.ip;
    s.caller_send_port = 5000;
    s.caller_recv_port = 5002;
    s.callee_send_port = 5000;
    s.callee_recv_port = 5002;
    s.caller_entry = a.dc;
    s.callee_entry = b.dc;
    s.caller_entry_ip = "100.64.0." + std::to_string(a.dc);
    s.callee_entry_ip = "100.64.0." + std::to_string(b.dc);
    register_call(s, locals_[static_cast<std::size_t>(a.dc)]->sessions(),
                  locals_[static_cast<std::size_t>(b.dc)]->sessions());

    const User* ends[2][2] = {{&a, &b}, {&b, &a}};
    for (auto& [src, dst] : ends) {
        Flow f;
        f.id = static_cast<int>(flows_.size());
        f.call = call;
        f.entry = src->dc;
        f.exit = dst->dc;
        f.header.src_ip = src->ip;
        f.header.src_port = 5000;
        f.header.dst_ip = "100.64.0." + std::to_string(src->dc);
        f.admitted_ms = now;
        c.flows.push_back(f.id);
        flows_.push_back(std::move(f));
        schedule(now, Ev::flow_hop, flows_.back().id, src->dc);
    }
    schedule(now + static_cast<std::int64_t>(std::llround(cfg_.traffic.call_duration_s * 1000)), Ev::call_end, call);
}

std::vector<InstanceCandidate> Simulator::candidates(DcId dc, int stage, std::int64_t now)
{
    auto& inv = locals_[static_cast<std::size_t>(dc)]->inventory();
    const VnfIndex vnf = catalog_.dp_stage(stage);
    auto ids = inv.working_ids(vnf);
    if (ids.empty()) {
        // A path names this datacenter for a stage it has no instance of.
        ids = inv.scale_out(vnf, 1, now);
        ++on_demand_;
    }
    std::vector<int> ready;
    for (int id : ids) {
        if (inv.instance(id).ready(now)) {
            ready.push_back(id);
        }
    }
    const auto& use = ready.empty() ? ids : ready;
    std::vector<InstanceCandidate> out;
    const auto& health = health_[static_cast<std::size_t>(dc)];
    for (int id : use) {
        auto h = health.find(id);
        out.push_back({id, inv.instance(id).assigned_load, h != health.end() && h->second.state() == Health::overload});
    }
    return out;
}

void Simulator::on_flow_hop(int flow, DcId dc, std::int64_t now)
{
    auto& f = flows_[static_cast<std::size_t>(flow)];
    if (f.state != FlowState::routing) {
        return;
    }
    auto& local = *locals_[static_cast<std::size_t>(dc)];
    RoutingContext ctx;
    ctx.self = dc;
    ctx.stages = m_;
    ctx.interval = local.interval();
    ctx.tagging = cfg_.tagging;
    ctx.paths = &local.paths();
    ctx.sessions = &local.sessions();
    ctx.location = &location_;
    ctx.candidates = [&](int stage) { return candidates(dc, stage, now); };

    const auto d = route_flow(ctx, f.header);
    f.visited.push_back(dc);
    if (dc == f.entry && f.chain.empty() && f.tag_interval < 0) {
        f.tag_interval = local.interval();
        f.path = d.path;
    }
    auto& inv = local.inventory();
    for (const auto& [stage, id] : d.instances) {
        f.chain.push_back({dc, id});
        f.used.push_back({dc, id});
        inv.add_load(id, cfg_.traffic.packet_rate);
    }
    f.header = d.header;
    switch (d.action) {
    case RouteAction::forward:
        schedule(now + static_cast<std::int64_t>(std::llround(delays_(dc, d.next_dc))), Ev::flow_hop, flow, d.next_dc);
        break;
    case RouteAction::deliver:
        f.state = FlowState::active;
        f.active_ms = now;
        break;
    case RouteAction::drop:
        release(f);
        f.state = FlowState::dropped;
        f.dropped = true;
        f.reason = d.reason;
        f.dropped_at = dc;
        break;
    }
}

void Simulator::release(Flow& f)
{
    for (const auto& h : f.chain) {
        auto& inv = locals_[static_cast<std::size_t>(h.dc)]->inventory();
        if (inv.contains(h.id)) {
            inv.add_load(h.id, -cfg_.traffic.packet_rate);
        }
    }
    f.chain.clear();
}

void Simulator::on_call_end(int call, std::int64_t now)
{
    auto& c = calls_[static_cast<std::size_t>(call)];
    c.ended_ms = now;
    cp_transaction(users_[static_cast<std::size_t>(c.caller)].dc, users_[static_cast<std::size_t>(c.callee)].dc, true,
                   now);
    for (int id : c.flows) {
        auto& f = flows_[static_cast<std::size_t>(id)];
        f.ended_ms = now;
        if (f.state != FlowState::dropped) {
            release(f);
            f.state = FlowState::closed;
        }
    }
}

// ---------------------------------------------------------------------------
// Per-second work

void Simulator::media(std::int64_t now)
{
    (void)now;
    std::map<std::pair<DcId, int>, int> hop_index;
    std::vector<double> capacity;
    std::vector<std::pair<DcId, int>> hop_key;
    std::vector<FluidFlow> in;
    std::vector<std::size_t> owner;
    const double rate = cfg_.traffic.packet_rate;
    for (auto& f : flows_) {
        if (f.state == FlowState::dropped && f.ended_ms < 0) {
            f.offered += rate;
            continue;
        }
        if (f.state != FlowState::active) {
            continue;
        }
        FluidFlow ff{rate, {}};
        for (const auto& h : f.chain) {
            auto [it, fresh] = hop_index.try_emplace({h.dc, h.id}, static_cast<int>(capacity.size()));
            if (fresh) {
                const auto& inst = locals_[static_cast<std::size_t>(h.dc)]->inventory().instance(h.id);
                capacity.push_back(inst.ready(now) ? catalog_.type(inst.vnf).capacity : 0.0);
                hop_key.emplace_back(h.dc, h.id);
            }
            ff.hops.push_back(it->second);
        }
        in.push_back(std::move(ff));
        owner.push_back(static_cast<std::size_t>(f.id));
    }
    const auto tick = media_tick(in, capacity);
    for (std::size_t i = 0; i < owner.size(); ++i) {
        auto& f = flows_[owner[i]];
        f.offered += rate;
        f.delivered += tick.delivered[i];
        f.rtt_sum += 2.0 * path_delay(f.visited, delays_) + cfg_.hop_processing_ms * static_cast<double>(f.chain.size()) +
                     cfg_.saturation_penalty_ms * tick.saturated_hops[i];
        ++f.rtt_ticks;
    }
    for (auto& a : arrivals_) {
        a.clear();
    }
    for (std::size_t h = 0; h < hop_key.size(); ++h) {
        arrivals_[static_cast<std::size_t>(hop_key[h].first)][hop_key[h].second] = tick.hop_arrivals[h];
    }
}

void Simulator::stats_and_reactive(std::int64_t now)
{
    const double t_s = static_cast<double>(now) / 1000.0;
    const auto persistence = static_cast<std::size_t>(cfg_.persistence_s);
    for (std::size_t d = 0; d < n_; ++d) {
        auto& local = *locals_[d];
        auto& inv = local.inventory();
        auto& health = health_[d];

        // CP pools spread their transactions evenly over ready instances.
        auto cp_share = [&](VnfIndex vnf, double tx) {
            int ready = 0;
            for (int id : inv.working_ids(vnf)) {
                ready += inv.instance(id).ready(now) ? 1 : 0;
            }
            return ready > 0 ? tx / ready : tx;
        };
        const double pcscf_rate = cp_share(catalog_.pcscf(), pcscf_tx_[d]);
        const double scscf_rate = static_cast<DcId>(d) == cfg_.scscf_dc ? cp_share(catalog_.scscf(), scscf_tx_) : 0.0;
        pcscf_load_[d] = pcscf_rate / catalog_.type(catalog_.pcscf()).capacity;
        if (static_cast<DcId>(d) == cfg_.scscf_dc) {
            scscf_load_ = scscf_rate / catalog_.type(catalog_.scscf()).capacity;
        }

        for (auto it = health.begin(); it != health.end();) {
            const bool keep = inv.contains(it->first) && inv.instance(it->first).state == InstanceState::working;
            it = keep ? std::next(it) : health.erase(it);
        }

        for (VnfIndex v = 0; v < static_cast<VnfIndex>(catalog_.size()); ++v) {
            const auto& type = catalog_.type(v);
            std::vector<Health> states;
            for (int id : inv.working_ids(v)) {
                const auto& inst = inv.instance(id);
                if (!inst.ready(now)) {
                    states.push_back(Health::normal);
                    continue;
                }
                double input = 0.0;
                if (v == catalog_.pcscf()) {
                    input = pcscf_rate;
                } else if (v == catalog_.scscf()) {
                    input = scscf_rate;
                } else {
                    auto a = arrivals_[d].find(id);
                    input = a == arrivals_[d].end() ? 0.0 : a->second;
                }
                const double rho = input / type.capacity;
                // CP proxies see two SIP packets per transaction.
                const double pkts = type.plane == Plane::control ? 2.0 * input : input;
                auto [h, fresh] = health.try_emplace(id, persistence);
                h->second.record_stats({std::min(100.0, 100.0 * rho), std::min(100.0, 20.0 + 30.0 * rho), pkts, t_s});
                states.push_back(classify(h->second, type.thresholds, persistence));
            }
            if (cfg_.strategy == Strategy::proactive || states.empty()) {
                continue;
            }
            if (reactive_decision(states, local.suspended()) > 0) {
                inv.scale_out(v, 1, now);
            }
        }
        inv.reap_drained();
    }
    std::fill(pcscf_tx_.begin(), pcscf_tx_.end(), 0.0);
    scscf_tx_ = 0.0;
}

void Simulator::reports(std::int64_t now)
{
    const auto secs = now / 1000;
    if (secs % cfg_.report_cadence_s != 0) {
        return;
    }
    std::vector<std::vector<double>> rows(n_, std::vector<double>(n_, 0.0));
    for (const auto& f : flows_) {
        const bool sending = f.state == FlowState::active || (f.state == FlowState::dropped && f.ended_ms < 0);
        if (sending) {
            rows[static_cast<std::size_t>(f.entry)][static_cast<std::size_t>(f.exit)] += cfg_.traffic.packet_rate;
        }
    }
    const bool batch = secs % cfg_.cp_batch_s == 0;
    for (std::size_t d = 0; d < n_; ++d) {
        WorkloadReport r;
        r.dp_load = rows[d];
        for (std::size_t x = 0; x < n_; ++x) {
            r.delays.push_back(delays_(static_cast<DcId>(d), static_cast<DcId>(x)));
        }
        if (batch && static_cast<DcId>(d) == cfg_.scscf_dc) {
            r.cp_load = cp_pairs_;
            for (auto& v : r.cp_load) {
                v /= cfg_.cp_batch_s;
            }
            std::fill(cp_pairs_.begin(), cp_pairs_.end(), 0.0);
        }
        send(locals_[d]->make_report(std::move(r)), now);
    }
}

void Simulator::on_tick(std::int64_t now)
{
    media(now);
    stats_and_reactive(now);
    reports(now);
    if (now + 1000 <= horizon_ms_) {
        schedule(now + 1000, Ev::tick);
    }
}

void Simulator::start_round(std::int64_t now)
{
    round_started_ms_ = now;
    dispatch(global_->start_round(now), now);
}

void Simulator::on_interval_end(std::int64_t now)
{
    if (cfg_.strategy != Strategy::reactive) {
        if (global_->phase() == RoundPhase::idle) {
            start_round(now);
        } else {
            round_pending_ = true;
            ++overruns_;
        }
    }
    if (now + interval_ms_ <= horizon_ms_) {
        schedule(now + interval_ms_, Ev::interval_end);
    }
}

void Simulator::record_round(std::int64_t now)
{
    ++rounds_;
    const long long ended = global_->interval() - 1;
    json rec = pending_plans_.count(ended) ? pending_plans_[ended] : json::object();
    pending_plans_.erase(ended);
    rec["interval"] = global_->interval();
    rec["started_ms"] = round_started_ms_;
    rec["completed_ms"] = now;
    rec["paths"] = path_table_to_json(global_->current_paths());
    report_.intervals.push_back(std::move(rec));
    if (round_pending_) {
        round_pending_ = false;
        start_round(now);
    }
}

void Simulator::handle(const Event& e)
{
    switch (e.kind) {
    case Ev::delay_change: {
        const auto& ch = cfg_.delay_changes.at(static_cast<std::size_t>(e.a));
        for (const auto& [x, y] : ch.links) {
            delays_.set_symmetric(x, y, ch.ms);
        }
        break;
    }
    case Ev::msg_to_local: {
        auto& local = *locals_.at(static_cast<std::size_t>(e.a));
        send(local.on_message(*e.msg, e.t), e.t);
        check_skew();
        break;
    }
    case Ev::msg_to_global:
        dispatch(global_->on_message(*e.msg, e.t), e.t);
        check_skew();
        break;
    case Ev::timer:
        dispatch(global_->on_timer(static_cast<std::uint64_t>(e.b), e.t), e.t);
        break;
    case Ev::interval_end:
        on_interval_end(e.t);
        break;
    case Ev::tick:
        on_tick(e.t);
        break;
    case Ev::user_arrival:
        on_user(e.a, e.t);
        break;
    case Ev::register_done:
        on_registered(e.a, e.t);
        break;
    case Ev::invite_done:
        on_established(e.a, e.t);
        break;
    case Ev::flow_hop:
        on_flow_hop(e.a, static_cast<DcId>(e.b), e.t);
        break;
    case Ev::call_end:
        on_call_end(e.a, e.t);
        break;
    }
}

MetricsReport Simulator::run()
{
    const auto paths = initial_paths();
    seed_instances(paths);
    GlobalConfig gc{static_cast<int>(n_), cfg_.workload_forecast, cfg_.delay_forecast, kRetransmitMs};
    global_ = std::make_unique<GlobalController>(
        gc, [this](const PlanningInput& in) { return plan(in); }, paths, delays_);
    report_.intervals.push_back(json{{"interval", 0},
                                     {"started_ms", 0},
                                     {"completed_ms", 0},
                                     {"paths", path_table_to_json(paths)}});

    for (std::size_t i = 0; i < cfg_.delay_changes.size(); ++i) {
        schedule(static_cast<std::int64_t>(std::llround(cfg_.delay_changes[i].at_s * 1000)), Ev::delay_change,
                 static_cast<int>(i));
    }
    for (int d : cfg_.traffic.sources) {
        schedule_arrival(d, 0);
    }
    schedule(1000, Ev::tick);
    schedule(interval_ms_, Ev::interval_end);

    while (!events_.empty()) {
        const Event e = events_.top();
        if (e.t > horizon_ms_) {
            break;
        }
        events_.pop();
        handle(e);
    }
    return finish();
}

MetricsReport Simulator::finish()
{
    const double horizon = static_cast<double>(horizon_ms_);
    std::vector<double> loss;
    std::vector<double> rtt;
    std::size_t full_loss = 0;
    std::size_t zero_loss = 0;
    std::size_t routing_drops = 0;
    double offered = 0.0;
    double delivered = 0.0;
    for (const auto& f : flows_) {
        const double l = f.offered > 0.0 ? 100.0 * (1.0 - f.delivered / f.offered) : (f.dropped ? 100.0 : 0.0);
        json rec{{"id", f.id},
                 {"call", f.call},
                 {"entry", f.entry},
                 {"exit", f.exit},
                 {"admitted_ms", f.admitted_ms},
                 {"active_ms", f.active_ms},
                 {"ended_ms", f.ended_ms},
                 {"tag_interval", f.tag_interval},
                 {"path", f.path},
                 {"visited", f.visited},
                 {"offered_pkts", f.offered},
                 {"delivered_pkts", f.delivered},
                 {"loss_pct", l},
                 {"dropped", f.dropped},
                 {"drop_reason", to_string(f.reason)},
                 {"dropped_at", f.dropped_at}};
        json chain = json::array();
        for (const auto& h : f.used) {
            chain.push_back({h.dc, h.id});
        }
        rec["instances"] = chain;
        if (f.rtt_ticks > 0) {
            const double r = f.rtt_sum / f.rtt_ticks;
            rec["rtt_ms"] = r;
            rtt.push_back(r);
        } else {
            rec["rtt_ms"] = nullptr;
        }
        report_.flows.push_back(std::move(rec));
        if (f.offered <= 0.0 && !f.dropped) {
            continue; // never carried traffic before the horizon
        }
        loss.push_back(l);
        offered += f.offered;
        delivered += f.delivered;
        full_loss += (f.dropped || l >= 100.0) ? 1 : 0;
        zero_loss += l <= 0.0 ? 1 : 0;
        routing_drops += f.dropped ? 1 : 0;
    }

    std::vector<CreationRecord> created;
    json by_dc = json::array();
    json by_vnf = json::object();
    json suspended = json::array();
    for (const auto& l : locals_) {
        int count = 0;
        for (const auto& c : l->inventory().creation_log()) {
            if (!c.initial) {
                created.push_back(c);
                ++count;
            }
        }
        by_dc.push_back(count);
        suspended.push_back(l->suspended_ms(horizon_ms_));
    }
    std::sort(created.begin(), created.end(), [](const CreationRecord& a, const CreationRecord& b) {
        return std::tie(a.time_ms, a.dc, a.id) < std::tie(b.time_ms, b.dc, b.id);
    });
    for (const auto& t : catalog_.types()) {
        by_vnf[t.name] = 0;
    }
    const std::int64_t bucket_ms = interval_ms_;
    const auto buckets = static_cast<std::size_t>((horizon_ms_ + bucket_ms - 1) / bucket_ms);
    std::vector<std::vector<int>> timeline(n_, std::vector<int>(std::max<std::size_t>(buckets, 1), 0));
    for (const auto& c : created) {
        const auto& name = catalog_.type(c.vnf).name;
        by_vnf[name] = by_vnf[name].get<int>() + 1;
        const auto b = std::min(timeline[0].size() - 1, static_cast<std::size_t>(c.time_ms / bucket_ms));
        timeline[static_cast<std::size_t>(c.dc)][b] += 1;
        report_.instances.push_back(
            {{"time_ms", c.time_ms}, {"dc", c.dc}, {"vnf", name}, {"id", c.id}});
    }

    json current = json::array();
    for (const auto& l : locals_) {
        json row = json::object();
        for (VnfIndex v = 0; v < static_cast<VnfIndex>(catalog_.size()); ++v) {
            const auto cen = l->inventory().census(v);
            row[catalog_.type(v).name] = {{"working", cen.working}, {"buffered", cen.buffered}};
        }
        current.push_back(row);
    }

    const std::size_t paired_users = 2 * calls_.size();
    std::vector<int> users_by_dc(n_, 0);
    for (const auto& u : users_) {
        ++users_by_dc[static_cast<std::size_t>(u.dc)];
    }

    auto& s = report_.summary;
    s = json{{"scenario", cfg_.name},
             {"seed", cfg_.seed},
             {"strategy", to_string(cfg_.strategy)},
             {"tagging", cfg_.tagging},
             {"horizon_s", horizon / 1000.0},
             {"users", {{"generated", users_.size()}, {"generated_by_dc", users_by_dc}, {"paired", paired_users}}},
             {"calls", calls_.size()},
             {"instances_created", created.size()},
             {"instances_created_by_dc", by_dc},
             {"instances_created_by_vnf", by_vnf},
             {"instances_created_timeline", {{"bucket_s", static_cast<double>(bucket_ms) / 1000.0}, {"by_dc", timeline}}},
             {"instances_at_end", current},
             {"on_demand_instances", on_demand_},
             {"flows",
              {{"admitted", flows_.size()},
               {"measured", loss.size()},
               {"routing_drops", routing_drops},
               {"full_loss", full_loss},
               {"zero_loss", zero_loss},
               {"mean_loss_pct", mean(loss)},
               {"p99_loss_pct", percentile(loss, 0.99)},
               {"packet_loss_pct", offered > 0.0 ? 100.0 * (1.0 - delivered / offered) : 0.0},
               {"mean_rtt_ms", mean(rtt)},
               {"p99_rtt_ms", percentile(rtt, 0.99)}}},
             {"cp",
              {{"transactions", cp_completion_.size()},
               {"mean_completion_ms", mean(cp_completion_)},
               {"p95_completion_ms", percentile(cp_completion_, 0.95)}}},
             {"protocol",
              {{"rounds_completed", rounds_},
               {"round_overruns", overruns_},
               {"global_interval", global_->interval()},
               {"transmissions", global_->transmissions()},
               {"retransmissions", global_->retransmissions()},
               {"stale_reports", global_->stale_reports()},
               {"messages_lost", transport_lost_},
               {"messages_duplicated", transport_dup_},
               {"max_local_interval_skew", max_local_skew_},
               {"max_global_interval_skew", max_global_skew_},
               {"suspended_ms_by_dc", suspended}}}};
    return std::move(report_);
}

} // namespace

std::vector<std::pair<std::string, std::string>> MetricsReport::files() const
{
    auto lines = [](const std::vector<json>& recs) {
        std::string out;
        for (const auto& r : recs) {
            out += r.dump();
            out += '\n';
        }
        return out;
    };
    std::vector<std::pair<std::string, std::string>> out{
        {"summary.json", summary.dump(2) + "\n"},
        {"flows.jsonl", lines(flows)},
        {"intervals.jsonl", lines(intervals)},
        {"instances.jsonl", lines(instances)},
    };
    if (!messages.empty()) {
        out.emplace_back("messages.jsonl", lines(messages));
    }
    return out;
}

void MetricsReport::write(const std::string& dir) const
{
    std::filesystem::create_directories(dir);
    for (const auto& [name, body] : files()) {
        std::ofstream out(std::filesystem::path(dir) / name, std::ios::binary);
        if (!out) {
            throw Error("cannot write " + (std::filesystem::path(dir) / name).string());
        }
        out << body;
    }
}

MetricsReport run_scenario(const ScenarioConfig& cfg)
{
    Simulator sim(cfg);
    return sim.run();
}

} // namespace geochain
