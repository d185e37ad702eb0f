#include "geochain/messages.hpp"

#include <array>

#include "geochain/error.hpp"

namespace geochain {

namespace {

constexpr std::array<std::pair<MsgKind, const char*>, 7> kNames{{
    {MsgKind::workload_report, "workload-report"},
    {MsgKind::provision_request, "provision-request"},
    {MsgKind::provision_response, "provision-response"},
    {MsgKind::decision_broadcast, "decision-broadcast"},
    {MsgKind::decision_complete, "decision-complete"},
    {MsgKind::enter_new_interval, "enter-new-interval"},
    {MsgKind::interval_ack, "interval-ack"},
}};

} // namespace

const char* to_string(MsgKind k)
{
    for (const auto& [kind, name] : kNames) {
        if (kind == k) {
            return name;
        }
    }
    return "?";
}

MsgKind msg_kind_from_string(const std::string& s)
{
    for (const auto& [kind, name] : kNames) {
        if (s == name) {
            return kind;
        }
    }
    throw Error("unknown message kind: " + s);
}

MsgKind response_kind(MsgKind request)
{
    switch (request) {
    case MsgKind::provision_request:
        return MsgKind::provision_response;
    case MsgKind::decision_broadcast:
        return MsgKind::decision_complete;
    case MsgKind::enter_new_interval:
        return MsgKind::interval_ack;
    default:
        throw ContractViolation(std::string(to_string(request)) + " is not a request");
    }
}

nlohmann::json path_table_to_json(const PathTable& t)
{
    auto arr = nlohmann::json::array();
    for (const auto& [pair, path] : t) {
        arr.push_back({{"entry", pair.entry}, {"exit", pair.exit}, {"path", path}});
    }
    return arr;
}

PathTable path_table_from_json(const nlohmann::json& j)
{
    PathTable t;
    for (const auto& row : j) {
        t[{row.at("entry").get<DcId>(), row.at("exit").get<DcId>()}] = row.at("path").get<ServiceChainPath>();
    }
    return t;
}

nlohmann::json to_json(const ControllerMsg& m)
{
    nlohmann::json j{
        {"v", kMessageFormatVersion},
        {"kind", to_string(m.kind)},
        {"interval", m.interval},
        {"msg_id", m.msg_id},
        {"reply_to", m.reply_to},
        {"sender", m.sender},
        {"receiver", m.receiver},
    };
    if (const auto* r = std::get_if<WorkloadReport>(&m.payload)) {
        j["report"] = {{"dp_load", r->dp_load}, {"delays", r->delays}, {"cp_load", r->cp_load}};
    } else if (const auto* p = std::get_if<ProvisionSnapshot>(&m.payload)) {
        j["provision"] = {{"working", p->working}, {"buffered", p->buffered}};
    } else if (const auto* d = std::get_if<Decision>(&m.payload)) {
        j["decision"] = {{"targets", d->targets},
                         {"apply_provisioning", d->apply_provisioning},
                         {"paths", path_table_to_json(d->paths)}};
    }
    return j;
}

ControllerMsg message_from_json(const nlohmann::json& j)
{
    const int v = j.at("v").get<int>();
    if (v != kMessageFormatVersion) {
        throw Error("unsupported message format version " + std::to_string(v));
    }
    ControllerMsg m;
    m.kind = msg_kind_from_string(j.at("kind").get<std::string>());
    m.interval = j.at("interval").get<long long>();
    m.msg_id = j.at("msg_id").get<std::uint64_t>();
    m.reply_to = j.at("reply_to").get<std::uint64_t>();
    m.sender = j.at("sender").get<int>();
    m.receiver = j.at("receiver").get<int>();
    if (j.contains("report")) {
        const auto& r = j["report"];
        m.payload = WorkloadReport{r.at("dp_load").get<std::vector<double>>(), r.at("delays").get<std::vector<double>>(),
                                   r.at("cp_load").get<std::vector<double>>()};
    } else if (j.contains("provision")) {
        const auto& p = j["provision"];
        m.payload = ProvisionSnapshot{p.at("working").get<std::vector<int>>(), p.at("buffered").get<std::vector<int>>()};
    } else if (j.contains("decision")) {
        const auto& d = j["decision"];
        m.payload = Decision{d.at("targets").get<std::vector<int>>(), d.at("apply_provisioning").get<bool>(),
                             path_table_from_json(d.at("paths"))};
    }
    return m;
}

} // namespace geochain
