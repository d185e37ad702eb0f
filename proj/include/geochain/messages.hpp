#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "geochain/planner.hpp"

namespace geochain {

inline constexpr int kGlobalEndpoint = -1;
inline constexpr int kMessageFormatVersion = 1;

enum class MsgKind {
    workload_report,
    provision_request,
    provision_response,
    decision_broadcast,
    decision_complete,
    enter_new_interval,
    interval_ack,
};

const char* to_string(MsgKind k);
MsgKind msg_kind_from_string(const std::string& s);

// Response kind for a request kind; throws for kinds that are not requests.
MsgKind response_kind(MsgKind request);

// Per-second measurements from one local controller. `dp_load` is the row of
// the DP workload matrix whose entry is the sender; `delays` the sender's ping
// row. `cp_load` (row-major n*n, transactions/s) is present on 5 s batches from
// the controller co-located with the S-CSCFs.
struct WorkloadReport {
    std::vector<double> dp_load;
    std::vector<double> delays;
    std::vector<double> cp_load;
};

// Instance counts per catalog entry.
struct ProvisionSnapshot {
    std::vector<int> working;
    std::vector<int> buffered;
};

struct Decision {
    std::vector<int> targets; // working instances per catalog entry at the receiver
    bool apply_provisioning = true;
    PathTable paths;
};

struct ControllerMsg {
    MsgKind kind = MsgKind::workload_report;
    long long interval = 0;
    std::uint64_t msg_id = 0;
    std::uint64_t reply_to = 0;
    int sender = kGlobalEndpoint;
    int receiver = kGlobalEndpoint;
    std::variant<std::monostate, WorkloadReport, ProvisionSnapshot, Decision> payload;
};

// Self-describing key-value form, tagged with kMessageFormatVersion.
nlohmann::json to_json(const ControllerMsg& m);
ControllerMsg message_from_json(const nlohmann::json& j);

nlohmann::json path_table_to_json(const PathTable& t);
PathTable path_table_from_json(const nlohmann::json& j);

} // namespace geochain
