#include "geochain/orchestration.hpp"

#include <sstream>

#include "geochain/error.hpp"

namespace geochain {

const char* to_string(RoundPhase p)
{
    switch (p) {
    case RoundPhase::idle:
        return "idle";
    case RoundPhase::collecting:
        return "collecting";
    case RoundPhase::deciding:
        return "deciding";
    case RoundPhase::broadcasting:
        return "broadcasting";
    case RoundPhase::entering:
        return "entering";
    }
    return "?";
}

MatrixForecaster::MatrixForecaster(std::size_t n, ForecastParams params, SquareMatrix initial)
    : n_(n), params_(params), series_(n * n, SampleSeries(params.window)), sum_(n * n, 0.0), count_(n * n, 0),
      last_(std::move(initial))
{
    if (last_.size() != n) {
        throw ContractViolation("forecaster initial matrix has the wrong dimension");
    }
}

void MatrixForecaster::add(DcId row, DcId col, double value)
{
    const auto i = static_cast<std::size_t>(row) * n_ + static_cast<std::size_t>(col);
    sum_.at(i) += value;
    count_.at(i) += 1;
}

SquareMatrix MatrixForecaster::finalize()
{
    SquareMatrix current(n_);
    for (std::size_t r = 0; r < n_; ++r) {
        for (std::size_t c = 0; c < n_; ++c) {
            const auto i = r * n_ + c;
            const auto row = static_cast<DcId>(r);
            const auto col = static_cast<DcId>(c);
            current(row, col) = count_[i] > 0 ? sum_[i] / count_[i] : last_(row, col);
            series_[i].push(current(row, col));
            sum_[i] = 0.0;
            count_[i] = 0;
        }
    }
    last_ = current;
    return predict_matrix(series_, current, params_);
}

GlobalController::GlobalController(GlobalConfig cfg, PlanningHook hook, PathTable initial_paths,
                                   const DelayMatrix& initial_delays)
    : cfg_(cfg), hook_(std::move(hook)), paths_(std::move(initial_paths))
{
    const auto n = static_cast<std::size_t>(cfg_.datacenters);
    if (initial_delays.size() != n) {
        throw ContractViolation("initial delay matrix does not match the datacenter count");
    }
    dp_ = MatrixForecaster(n, cfg_.workload_forecast, SquareMatrix(n));
    cp_ = MatrixForecaster(n, cfg_.workload_forecast, SquareMatrix(n));
    delay_ = MatrixForecaster(n, cfg_.delay_forecast, initial_delays.matrix());
    predicted_dp_ = SquareMatrix(n);
    predicted_cp_ = SquareMatrix(n);
    predicted_delays_ = initial_delays;
    snapshots_.resize(n);
    answered_.assign(n, false);
}

void GlobalController::ingest_report(const ControllerMsg& report)
{
    if (report.kind != MsgKind::workload_report) {
        throw ContractViolation("not a workload report");
    }
    if (report.interval < interval_ - 1 || report.interval > interval_ + 1) {
        ++stale_reports_;
        return;
    }
    const auto* r = std::get_if<WorkloadReport>(&report.payload);
    if (r == nullptr) {
        return;
    }
    const int n = cfg_.datacenters;
    const DcId from = report.sender;
    if (r->dp_load.size() == static_cast<std::size_t>(n)) {
        for (DcId c = 0; c < n; ++c) {
            dp_.add(from, c, r->dp_load[static_cast<std::size_t>(c)]);
        }
    }
    if (r->delays.size() == static_cast<std::size_t>(n)) {
        for (DcId c = 0; c < n; ++c) {
            if (c != from) {
                delay_.add(from, c, r->delays[static_cast<std::size_t>(c)]);
            }
        }
    }
    if (r->cp_load.size() == static_cast<std::size_t>(n * n)) {
        for (DcId a = 0; a < n; ++a) {
            for (DcId b = 0; b < n; ++b) {
                cp_.add(a, b, r->cp_load[static_cast<std::size_t>(a * n + b)]);
            }
        }
    }
}

ControllerMsg GlobalController::request(MsgKind kind, int receiver, long long interval,
                                        decltype(ControllerMsg::payload) payload)
{
    ControllerMsg m;
    m.kind = kind;
    m.interval = interval;
    m.msg_id = next_id_++;
    m.sender = kGlobalEndpoint;
    m.receiver = receiver;
    m.payload = std::move(payload);
    return m;
}

void GlobalController::broadcast(MsgKind kind, long long interval,
                                 const std::vector<decltype(ControllerMsg::payload)>& payloads, std::int64_t now_ms,
                                 Outbox& out)
{
    answered_.assign(answered_.size(), false);
    for (int dc = 0; dc < cfg_.datacenters; ++dc) {
        auto m = request(kind, dc, interval, payloads.empty() ? std::monostate{} : payloads[static_cast<std::size_t>(dc)]);
        outstanding_[m.msg_id] = m;
        out.timers.push_back({m.msg_id, now_ms + cfg_.retransmit_ms});
        out.messages.push_back(std::move(m));
        ++transmissions_;
    }
}

Outbox GlobalController::start_round(std::int64_t now_ms)
{
    if (phase_ != RoundPhase::idle) {
        throw ContractViolation(std::string("round already in progress (phase ") + to_string(phase_) + ")");
    }
    predicted_dp_ = dp_.finalize();
    predicted_cp_ = cp_.finalize();
    const auto d = delay_.finalize();
    predicted_delays_ = DelayMatrix(d.size());
    for (DcId a = 0; a < static_cast<DcId>(d.size()); ++a) {
        for (DcId b = 0; b < static_cast<DcId>(d.size()); ++b) {
            if (a != b) {
                predicted_delays_.set(a, b, d(a, b));
            }
        }
    }

    Outbox out;
    phase_ = RoundPhase::collecting;
    for (auto& s : snapshots_) {
        s.reset();
    }
    broadcast(MsgKind::provision_request, interval_, {}, now_ms, out);
    return out;
}

void GlobalController::decide(std::int64_t now_ms, Outbox& out)
{
    phase_ = RoundPhase::deciding;
    std::vector<ProvisionSnapshot> provision;
    provision.reserve(snapshots_.size());
    for (const auto& s : snapshots_) {
        provision.push_back(*s);
    }
    PlanningInput in{interval_, &predicted_dp_, &predicted_cp_, &predicted_delays_, &provision, &paths_};
    auto plan = hook_(in);
    if (plan.per_dc.size() != static_cast<std::size_t>(cfg_.datacenters)) {
        throw ContractViolation("planning hook returned the wrong number of decisions");
    }
    for (auto& d : plan.per_dc) {
        d.paths = plan.paths;
    }
    paths_ = plan.paths;
    decisions_ = plan.per_dc;

    phase_ = RoundPhase::broadcasting;
    std::vector<decltype(ControllerMsg::payload)> payloads(decisions_.begin(), decisions_.end());
    broadcast(MsgKind::decision_broadcast, interval_, payloads, now_ms, out);
}

Outbox GlobalController::on_message(const ControllerMsg& m, std::int64_t now_ms)
{
    Outbox out;
    if (m.kind == MsgKind::workload_report) {
        ingest_report(m);
        return out;
    }
    auto it = outstanding_.find(m.reply_to);
    if (it == outstanding_.end() || m.kind != response_kind(it->second.kind)) {
        return out; // late duplicate of an answered request
    }
    outstanding_.erase(it);
    answered_.at(static_cast<std::size_t>(m.sender)) = true;
    if (m.kind == MsgKind::provision_response) {
        snapshots_.at(static_cast<std::size_t>(m.sender)) = std::get<ProvisionSnapshot>(m.payload);
    }
    for (bool a : answered_) {
        if (!a) {
            return out;
        }
    }
    switch (phase_) {
    case RoundPhase::collecting:
        decide(now_ms, out);
        break;
    case RoundPhase::broadcasting:
        phase_ = RoundPhase::entering;
        broadcast(MsgKind::enter_new_interval, interval_ + 1, {}, now_ms, out);
        break;
    case RoundPhase::entering:
        ++interval_;
        phase_ = RoundPhase::idle;
        out.round_completed = true;
        break;
    default:
        break;
    }
    return out;
}

Outbox GlobalController::on_timer(std::uint64_t msg_id, std::int64_t now_ms)
{
    Outbox out;
    auto it = outstanding_.find(msg_id);
    if (it == outstanding_.end()) {
        return out;
    }
    out.messages.push_back(it->second);
    out.timers.push_back({msg_id, now_ms + cfg_.retransmit_ms});
    ++transmissions_;
    ++retransmissions_;
    return out;
}

LocalController::LocalController(LocalConfig cfg, Inventory inventory, PathTable initial_paths)
    : cfg_(cfg), inventory_(std::move(inventory)), paths_(std::move(initial_paths))
{
}

std::int64_t LocalController::suspended_ms(std::int64_t now_ms) const
{
    return suspended_total_ + (suspended_ ? now_ms - suspended_since_ : 0);
}

ControllerMsg LocalController::respond(const ControllerMsg& req, decltype(ControllerMsg::payload) payload)
{
    ControllerMsg r;
    r.kind = response_kind(req.kind);
    r.interval = interval_;
    r.msg_id = next_id_++;
    r.reply_to = req.msg_id;
    r.sender = cfg_.dc;
    r.receiver = req.sender;
    r.payload = std::move(payload);
    responses_[req.msg_id] = r;
    return r;
}

ControllerMsg LocalController::make_report(WorkloadReport report)
{
    ControllerMsg m;
    m.kind = MsgKind::workload_report;
    m.interval = interval_;
    m.msg_id = next_id_++;
    m.sender = cfg_.dc;
    m.receiver = kGlobalEndpoint;
    m.payload = std::move(report);
    return m;
}

void LocalController::apply_decision(const Decision& d, std::int64_t now_ms)
{
    if (d.apply_provisioning) {
        for (std::size_t v = 0; v < d.targets.size() && v < inventory_.catalog().size(); ++v) {
            inventory_.apply_target(static_cast<VnfIndex>(v), d.targets[v], static_cast<int>(interval_), now_ms);
        }
    }
    paths_.stash_next(d.paths);
}

void LocalController::enter_interval(long long target, std::int64_t now_ms)
{
    if (target == interval_ + 1) {
        interval_ = target;
        paths_.promote();
        inventory_.evict_expired(static_cast<int>(interval_), cfg_.tau);
    } else if (target > interval_ + 1) {
        throw ContractViolation("enter-new-interval skips an interval");
    }
    if (suspended_) {
        suspended_total_ += now_ms - suspended_since_;
        suspended_ = false;
    }
}

ControllerMsg LocalController::on_message(const ControllerMsg& m, std::int64_t now_ms)
{
    if (auto it = responses_.find(m.msg_id); it != responses_.end()) {
        ++duplicates_;
        return it->second;
    }
    switch (m.kind) {
    case MsgKind::provision_request: {
        if (!suspended_) {
            suspended_ = true;
            suspended_since_ = now_ms;
        }
        ProvisionSnapshot snap;
        for (std::size_t v = 0; v < inventory_.catalog().size(); ++v) {
            snap.working.push_back(inventory_.working_count(static_cast<VnfIndex>(v)));
            snap.buffered.push_back(inventory_.buffered_count(static_cast<VnfIndex>(v)));
        }
        return respond(m, snap);
    }
    case MsgKind::decision_broadcast:
        apply_decision(std::get<Decision>(m.payload), now_ms);
        return respond(m, std::monostate{});
    case MsgKind::enter_new_interval:
        enter_interval(m.interval, now_ms);
        return respond(m, std::monostate{});
    default:
        throw ContractViolation(std::string("local controller cannot handle ") + to_string(m.kind));
    }
}

std::string LocalController::state_dump() const
{
    std::ostringstream os;
    os << "dc " << cfg_.dc << " interval " << interval_ << " suspended " << suspended_ << '\n';
    for (auto slot : {PathSlot::previous, PathSlot::current, PathSlot::next}) {
        os << to_string(slot) << ':';
        for (const auto& [pair, path] : paths_.slot(slot)) {
            os << ' ' << pair.entry << '>' << pair.exit << '=';
            for (DcId d : path) {
                os << d << ',';
            }
        }
        os << '\n';
    }
    for (const auto& [id, inst] : inventory_.instances()) {
        os << "inst " << id << ' ' << inst.vnf << ' ' << to_string(inst.state) << ' ' << inst.ready_at_ms << ' '
           << inst.buffered_interval << '\n';
    }
    for (std::size_t v = 0; v < inventory_.catalog().size(); ++v) {
        os << "queue " << v << ':';
        for (const auto& e : inventory_.buffer(static_cast<VnfIndex>(v))) {
            os << ' ' << e.id << '@' << e.interval;
        }
        os << '\n';
    }
    os << "created " << inventory_.creation_log().size() << '\n';
    return os.str();
}

std::uint64_t LocalController::state_hash() const
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : state_dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace geochain
