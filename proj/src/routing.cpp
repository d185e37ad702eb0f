#include "geochain/routing.hpp"

#include <algorithm>
#include <string>

#include "geochain/error.hpp"

namespace geochain {

FlowTag encode_tag(DcId entry, DcId exit, long long interval)
{
    if (entry < 0 || exit < 0 || entry >= kMaxTaggedDatacenters || exit >= kMaxTaggedDatacenters) {
        throw EncodingError("datacenter index out of tag range: " + std::to_string(entry) + "->" +
                            std::to_string(exit));
    }
    if (interval < 0) {
        throw EncodingError("negative scaling interval");
    }
    const int mod4 = static_cast<int>(interval % 4);
    const auto packed = static_cast<std::uint16_t>((entry << 8) | (exit << 2) | mod4);
    return {entry, exit, mod4, packed};
}

FlowTag decode_tag(std::uint16_t packed)
{
    if (packed >> 14) {
        throw EncodingError("tag uses more than 14 bits");
    }
    return {static_cast<DcId>((packed >> 8) & 0x3f), static_cast<DcId>((packed >> 2) & 0x3f), packed & 0x3,
            packed};
}

std::uint32_t encode_hop(std::uint32_t code, int stage, int index)
{
    if (stage < 1 || stage > kHopLanes) {
        throw EncodingError("hop lane must be in [1,4], got " + std::to_string(stage));
    }
    if (index < 0 || index > 255) {
        throw EncodingError("hop index must fit a byte, got " + std::to_string(index));
    }
    const int shift = 8 * (kHopLanes - stage);
    return (code & ~lane_mask(stage)) | (static_cast<std::uint32_t>(index) << shift);
}

int extract_hop(std::uint32_t code, int stage)
{
    if (stage < 1 || stage > kHopLanes) {
        throw EncodingError("hop lane must be in [1,4], got " + std::to_string(stage));
    }
    return static_cast<int>((code & lane_mask(stage)) >> (8 * (kHopLanes - stage)));
}

void register_call(const CallSession& s, SessionTable& caller_entry, SessionTable& callee_entry)
{
    caller_entry.peer[{s.caller_ip, s.caller_send_port}] = s.callee_ip;
    caller_entry.exit[{s.callee_ip, s.callee_send_port}] = {s.caller_entry_ip, s.caller_ip, s.caller_recv_port};
    callee_entry.peer[{s.callee_ip, s.callee_send_port}] = s.caller_ip;
    callee_entry.exit[{s.caller_ip, s.caller_send_port}] = {s.callee_entry_ip, s.callee_ip, s.callee_recv_port};
}

DcId LocationService::locate(const std::string& ip) const
{
    auto it = ip_location_.find(ip);
    if (it == ip_location_.end()) {
        throw UnboundLocation("address " + ip);
    }
    return entry_datacenter(it->second, table_);
}

const char* to_string(PathSlot s)
{
    switch (s) {
    case PathSlot::previous:
        return "previous";
    case PathSlot::current:
        return "current";
    case PathSlot::next:
        return "next";
    }
    return "?";
}

void PathTriple::promote()
{
    previous_ = std::move(current_);
    current_ = next_;
}

const PathTable& PathTriple::slot(PathSlot s) const
{
    switch (s) {
    case PathSlot::previous:
        return previous_;
    case PathSlot::next:
        return next_;
    case PathSlot::current:
        break;
    }
    return current_;
}

PathSlot select_path_set(long long local_interval, int tag_interval_mod4)
{
    const int local = static_cast<int>(((local_interval % 4) + 4) % 4);
    if (tag_interval_mod4 == local) {
        return PathSlot::current;
    }
    if (tag_interval_mod4 == (local + 1) % 4) {
        return PathSlot::next;
    }
    if (tag_interval_mod4 == (local + 3) % 4) {
        return PathSlot::previous;
    }
    throw SkewError("skew > 1: local interval " + std::to_string(local_interval) + ", tag " +
                    std::to_string(tag_interval_mod4));
}

int select_instance(std::span<const InstanceCandidate> candidates)
{
    if (candidates.empty()) {
        throw NoWorkingInstance("no working instance");
    }
    const bool any_normal = std::any_of(candidates.begin(), candidates.end(),
                                        [](const InstanceCandidate& c) { return !c.overloaded; });
    const InstanceCandidate* best = nullptr;
    for (const auto& c : candidates) {
        if (any_normal && c.overloaded) {
            continue;
        }
        if (!best || c.load < best->load || (c.load == best->load && c.id < best->id)) {
            best = &c;
        }
    }
    return best->id;
}

const char* to_string(DropReason r)
{
    switch (r) {
    case DropReason::none:
        return "none";
    case DropReason::no_session:
        return "no_session";
    case DropReason::no_path:
        return "no_path";
    case DropReason::skew:
        return "skew";
    case DropReason::not_on_path:
        return "not_on_path";
    }
    return "?";
}

RouteDecision route_flow(const RoutingContext& ctx, const PacketHeader& in)
{
    RouteDecision out;
    out.header = in;
    auto& h = out.header;
    const int m = ctx.stages;

    auto drop = [&](DropReason why) {
        out.action = RouteAction::drop;
        out.reason = why;
        return out;
    };

    const bool entry_role = !h.tag.has_value();
    if (entry_role) {
        auto peer = ctx.sessions->peer.find({h.src_ip, h.src_port});
        if (peer == ctx.sessions->peer.end()) {
            return drop(DropReason::no_session);
        }
        const DcId exit = ctx.location->locate(peer->second);
        const auto tag = encode_tag(ctx.self, exit, ctx.interval);
        out.pair = {ctx.self, exit};
        out.slot = PathSlot::current;
        h.tag = tag.packed;
        h.hop_code = 0;
        h.next_stage = 1;
    } else {
        const auto tag = decode_tag(*h.tag);
        out.pair = {tag.entry, tag.exit};
        if (ctx.tagging) {
            try {
                out.slot = select_path_set(ctx.interval, tag.interval_mod4);
            } catch (const SkewError&) {
                return drop(DropReason::skew);
            }
        } else {
            out.slot = PathSlot::current;
        }
    }

    const auto& table = ctx.paths->slot(out.slot);
    auto found = table.find(out.pair);
    if (found == table.end() || found->second.size() != static_cast<std::size_t>(m) + 2) {
        return drop(DropReason::no_path);
    }
    out.path = found->second;
    int s = h.next_stage;
    if (!entry_role && out.path[static_cast<std::size_t>(s)] != ctx.self) {
        return drop(DropReason::not_on_path);
    }

    while (s <= m && out.path[static_cast<std::size_t>(s)] == ctx.self) {
        const auto cands = ctx.candidates(s);
        const int id = select_instance(cands);
        h.hop_code = encode_hop(h.hop_code, s, id);
        out.instances.emplace_back(s, id);
        ++s;
    }
    h.next_stage = s;

    const DcId next = out.path[static_cast<std::size_t>(s)];
    if (s == m + 1 && next == ctx.self) {
        auto rw = ctx.sessions->exit.find({h.src_ip, h.src_port});
        if (rw == ctx.sessions->exit.end()) {
            return drop(DropReason::no_session);
        }
        h.src_ip = rw->second.entry_ip;
        h.dst_ip = rw->second.dst_ip;
        h.dst_port = rw->second.dst_port;
        out.action = RouteAction::deliver;
        return out;
    }
    h.hop_code = encode_hop(h.hop_code, s, next);
    out.action = RouteAction::forward;
    out.next_dc = next;
    return out;
}

} // namespace geochain
