#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "geochain/planner.hpp"
#include "geochain/topology.hpp"

namespace geochain {

// ---------------------------------------------------------------------------
// Flow tag: entry(6 bits) << 8 | exit(6 bits) << 2 | interval mod 4 (2 bits),
// carried in the destination port.

struct FlowTag {
    DcId entry = 0;
    DcId exit = 0;
    int interval_mod4 = 0;
    std::uint16_t packed = 0;
};

inline constexpr int kMaxTaggedDatacenters = 64;

FlowTag encode_tag(DcId entry, DcId exit, long long interval);
FlowTag decode_tag(std::uint16_t packed);

// ---------------------------------------------------------------------------
// Hop code: four byte lanes of the destination address, lane 1 most
// significant. Lane i routes stage i; values < n name the next datacenter,
// values >= n name an instance. Lane m+1 is the virtual exit stage.

inline constexpr int kHopLanes = 4;
inline constexpr int kMaxDpStages = kHopLanes - 1;

constexpr std::uint32_t lane_mask(int stage)
{
    return 255u << (8 * (kHopLanes - stage));
}

std::uint32_t encode_hop(std::uint32_t code, int stage, int index);
int extract_hop(std::uint32_t code, int stage);

// ---------------------------------------------------------------------------
// Call-session mappings kept by entry-datacenter controllers.

struct CallSession {
    std::string caller_id;
    std::string callee_id;
    std::string caller_ip;
    std::string callee_ip;
    std::uint16_t caller_send_port = 0;
    std::uint16_t caller_recv_port = 0;
    std::uint16_t callee_send_port = 0;
    std::uint16_t callee_recv_port = 0;
    DcId caller_entry = 0;
    DcId callee_entry = 0;
    std::string caller_entry_ip; // address on the caller's entry datacenter
    std::string callee_entry_ip;
};

using FlowKey = std::pair<std::string, std::uint16_t>; // (source ip, source port)

struct ExitRewrite {
    std::string entry_ip;
    std::string dst_ip;
    std::uint16_t dst_port = 0;
    bool operator==(const ExitRewrite&) const = default;
};

// Rows 1/3 map a sender to its peer's address (used where the flow enters);
// rows 2/4 map a sender to the rewrite applied where the flow leaves.
struct SessionTable {
    std::map<FlowKey, std::string> peer;
    std::map<FlowKey, ExitRewrite> exit;
    bool operator==(const SessionTable&) const = default;
};

// Installs rows 1-2 at the caller's entry controller and rows 3-4 at the
// callee's. Re-registering overwrites with identical values.
void register_call(const CallSession& s, SessionTable& caller_entry, SessionTable& callee_entry);

// Resolves an address to its entry datacenter through the binding table.
class LocationService {
public:
    LocationService() = default;
    explicit LocationService(LocationTable table) : table_(std::move(table)) {}

    void bind(const std::string& ip, const std::string& location_key) { ip_location_[ip] = location_key; }
    DcId locate(const std::string& ip) const;
    const LocationTable& table() const { return table_; }

private:
    LocationTable table_;
    std::map<std::string, std::string> ip_location_;
};

// ---------------------------------------------------------------------------
// Path sets for the previous, current and next scaling interval.

enum class PathSlot { previous, current, next };

const char* to_string(PathSlot s);

class PathTriple {
public:
    PathTriple() = default;
    explicit PathTriple(PathTable initial) : previous_(initial), current_(initial), next_(std::move(initial)) {}

    // Decision received: the table is used only once the interval advances.
    void stash_next(PathTable t) { next_ = std::move(t); }
    // Interval advanced: next -> current -> previous.
    void promote();

    const PathTable& slot(PathSlot s) const;
    bool operator==(const PathTriple&) const = default;

private:
    PathTable previous_;
    PathTable current_;
    PathTable next_;
};

// Slot whose interval matches the tag's interval mod 4. Throws SkewError when
// the tag is not within one interval of the local one.
PathSlot select_path_set(long long local_interval, int tag_interval_mod4);

struct InstanceCandidate {
    int id = 0;
    double load = 0.0;
    bool overloaded = false;
};

// Smallest load first among normal instances (all instances if none is
// normal); ties go to the lowest id. Throws NoWorkingInstance when empty.
int select_instance(std::span<const InstanceCandidate> candidates);

// ---------------------------------------------------------------------------
// Per-datacenter flow routing.

struct PacketHeader {
    std::string src_ip;
    std::uint16_t src_port = 0;
    std::string dst_ip;
    std::uint16_t dst_port = 0;
    std::optional<std::uint16_t> tag; // set by the entry controller
    std::uint32_t hop_code = 0;
    int next_stage = 1; // first stage not yet processed (m + 1 = exit)
};

struct RoutingContext {
    DcId self = 0;
    int stages = 3;
    long long interval = 0;
    bool tagging = true;
    const PathTriple* paths = nullptr;
    const SessionTable* sessions = nullptr;
    const LocationService* location = nullptr;
    std::function<std::vector<InstanceCandidate>(int stage)> candidates;
};

enum class RouteAction { forward, deliver, drop };

enum class DropReason { none, no_session, no_path, skew, not_on_path };

const char* to_string(DropReason r);

struct RouteDecision {
    RouteAction action = RouteAction::drop;
    DropReason reason = DropReason::none;
    DcId next_dc = -1;
    EntryExitPair pair;
    PathSlot slot = PathSlot::current;
    ServiceChainPath path;
    std::vector<std::pair<int, int>> instances; // (stage, instance id) chosen here
    PacketHeader header;                        // header as it leaves this datacenter
};

RouteDecision route_flow(const RoutingContext& ctx, const PacketHeader& in);

} // namespace geochain
