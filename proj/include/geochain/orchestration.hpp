#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geochain/forecast.hpp"
#include "geochain/messages.hpp"
#include "geochain/provisioning.hpp"
#include "geochain/routing.hpp"

namespace geochain {

inline constexpr std::int64_t kRetransmitMs = 500;

struct TimerRequest {
    std::uint64_t msg_id = 0;
    std::int64_t at_ms = 0;
};

struct Outbox {
    std::vector<ControllerMsg> messages;
    std::vector<TimerRequest> timers;
    bool round_completed = false;
};

enum class RoundPhase { idle, collecting, deciding, broadcasting, entering };

const char* to_string(RoundPhase p);

// Per-pair series for one n x n measured quantity, fed by per-second reports
// and closed once per interval.
class MatrixForecaster {
public:
    MatrixForecaster() = default;
    MatrixForecaster(std::size_t n, ForecastParams params, SquareMatrix initial);

    void add(DcId row, DcId col, double value);
    // Closes the interval: each cell's mean (or its previous value when no
    // sample arrived) enters the series; returns the one-step forecast.
    SquareMatrix finalize();

    const SquareMatrix& last_measured() const { return last_; }

private:
    std::size_t n_ = 0;
    ForecastParams params_;
    std::vector<SampleSeries> series_;
    std::vector<double> sum_;
    std::vector<int> count_;
    SquareMatrix last_;
};

struct PlanningInput {
    long long interval = 0; // interval that is ending
    const WorkloadMatrix* dp_load = nullptr;
    const WorkloadMatrix* cp_load = nullptr;
    const DelayMatrix* delays = nullptr;
    const std::vector<ProvisionSnapshot>* provision = nullptr; // per datacenter
    const PathTable* current_paths = nullptr;
};

struct PlanningOutput {
    std::vector<Decision> per_dc;
    PathTable paths;
};

using PlanningHook = std::function<PlanningOutput(const PlanningInput&)>;

struct GlobalConfig {
    int datacenters = 0;
    ForecastParams workload_forecast;
    ForecastParams delay_forecast;
    std::int64_t retransmit_ms = kRetransmitMs;
};

// Drives the five-step proactive round against all local controllers.
class GlobalController {
public:
    GlobalController(GlobalConfig cfg, PlanningHook hook, PathTable initial_paths, const DelayMatrix& initial_delays);

    // Per-second DP rows, ping rows and 5 s CP batches.
    void ingest_report(const ControllerMsg& report);

    // Step 1 (forecasts) and step 2 (provision-request broadcast).
    Outbox start_round(std::int64_t now_ms);
    Outbox on_message(const ControllerMsg& m, std::int64_t now_ms);
    // Re-sends the request if it is still unanswered.
    Outbox on_timer(std::uint64_t msg_id, std::int64_t now_ms);

    long long interval() const { return interval_; }
    RoundPhase phase() const { return phase_; }
    const PathTable& current_paths() const { return paths_; }
    const WorkloadMatrix& predicted_dp() const { return predicted_dp_; }
    const WorkloadMatrix& predicted_cp() const { return predicted_cp_; }
    const DelayMatrix& predicted_delays() const { return predicted_delays_; }
    const std::vector<Decision>& last_decisions() const { return decisions_; }

    std::size_t transmissions() const { return transmissions_; }
    std::size_t retransmissions() const { return retransmissions_; }
    std::size_t stale_reports() const { return stale_reports_; }

private:
    ControllerMsg request(MsgKind kind, int receiver, long long interval, decltype(ControllerMsg::payload) payload);
    void broadcast(MsgKind kind, long long interval, const std::vector<decltype(ControllerMsg::payload)>& payloads,
                   std::int64_t now_ms, Outbox& out);
    void decide(std::int64_t now_ms, Outbox& out);

    GlobalConfig cfg_;
    PlanningHook hook_;
    long long interval_ = 0;
    RoundPhase phase_ = RoundPhase::idle;
    std::uint64_t next_id_ = 1;

    MatrixForecaster dp_;
    MatrixForecaster cp_;
    MatrixForecaster delay_;
    WorkloadMatrix predicted_dp_;
    WorkloadMatrix predicted_cp_;
    DelayMatrix predicted_delays_;

    PathTable paths_;
    std::vector<Decision> decisions_;
    std::vector<std::optional<ProvisionSnapshot>> snapshots_;
    std::map<std::uint64_t, ControllerMsg> outstanding_;
    std::vector<bool> answered_;

    std::size_t transmissions_ = 0;
    std::size_t retransmissions_ = 0;
    std::size_t stale_reports_ = 0;
};

struct LocalConfig {
    DcId dc = 0;
    int tau = 10;
};

// Datacenter-side protocol endpoint. Owns the inventory and path sets of one
// datacenter; duplicate requests are answered from a response cache.
class LocalController {
public:
    LocalController(LocalConfig cfg, Inventory inventory, PathTable initial_paths);

    // Handles a request from the global controller; returns the response.
    ControllerMsg on_message(const ControllerMsg& m, std::int64_t now_ms);

    ControllerMsg make_report(WorkloadReport report);

    DcId dc() const { return cfg_.dc; }
    long long interval() const { return interval_; }
    bool suspended() const { return suspended_; }
    // Total time spent with reactive scaling suspended, up to now.
    std::int64_t suspended_ms(std::int64_t now_ms) const;

    Inventory& inventory() { return inventory_; }
    const Inventory& inventory() const { return inventory_; }
    const PathTriple& paths() const { return paths_; }
    SessionTable& sessions() { return sessions_; }
    const SessionTable& sessions() const { return sessions_; }

    // Overrides the routing table outside the protocol (scripted scenarios).
    void replace_next_paths(PathTable t) { paths_.stash_next(std::move(t)); }

    std::size_t duplicate_requests() const { return duplicates_; }
    // FNV-1a digest of the protocol-visible state.
    std::uint64_t state_hash() const;
    std::string state_dump() const;

private:
    ControllerMsg respond(const ControllerMsg& req, decltype(ControllerMsg::payload) payload);
    void apply_decision(const Decision& d, std::int64_t now_ms);
    void enter_interval(long long target, std::int64_t now_ms);

    LocalConfig cfg_;
    Inventory inventory_;
    PathTriple paths_;
    SessionTable sessions_;
    long long interval_ = 0;
    bool suspended_ = false;
    std::int64_t suspended_since_ = 0;
    std::int64_t suspended_total_ = 0;
    std::uint64_t next_id_ = 1;
    std::map<std::uint64_t, ControllerMsg> responses_;
    std::size_t duplicates_ = 0;
};

} // namespace geochain
