#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "geochain/forecast.hpp"
#include "geochain/planner.hpp"
#include "geochain/provisioning.hpp"
#include "geochain/topology.hpp"

namespace geochain {

enum class Strategy { proactive, reactive, hybrid };
enum class Pairing { fifo, cross_dc };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);
const char* to_string(Pairing p);

struct DelayChange {
    double at_s = 0.0;
    std::vector<std::pair<DcId, DcId>> links; // applied in both directions
    double ms = 0.0;
};

struct TrafficConfig {
    std::vector<double> rates; // users/s per change interval, played once from each source's start
    double change_interval_s = 30.0;
    std::vector<double> start_s; // per datacenter
    std::vector<int> sources;    // datacenters generating users
    Pairing pairing = Pairing::fifo;
    double call_duration_s = 60.0;
    double packet_rate = 50.0; // pkt/s per media direction
};

struct ScenarioConfig {
    std::string name;
    std::uint64_t seed = 1;
    double horizon_s = 600.0;
    Strategy strategy = Strategy::hybrid;
    bool tagging = true;

    std::vector<std::string> datacenters;
    DelayMatrix delays;
    LocationTable locations;
    DcId scscf_dc = 0;
    DcId global_dc = 0;
    std::vector<DelayChange> delay_changes;

    Catalog catalog;

    double interval_s = 50.0;
    int tau = 10;
    double threshold_ms = 250.0;
    ForecastParams workload_forecast{10, 0.0, 1.0};
    ForecastParams delay_forecast{10, 1.0, 1.0};
    int persistence_s = 5;
    double boot_delay_s = 20.0;
    int initial_per_stage = 1;
    int min_per_stage = 1;
    bool static_provisioning = false;
    std::vector<PathTable> path_script; // cycled per interval when non-empty

    TrafficConfig traffic;

    double loss_rate = 0.0;
    double dup_rate = 0.0;
    std::optional<double> control_delay_ms; // defaults to the inter-datacenter delay
    std::vector<double> step5_skew_ms;      // extra delay of enter-new-interval per datacenter

    double hop_processing_ms = 1.0;
    double saturation_penalty_ms = 10.0;
    double cp_processing_ms = 1.0;

    int report_cadence_s = 1;
    int cp_batch_s = 5;
    bool trace_messages = false;

    std::size_t n() const { return datacenters.size(); }
    int stages() const { return catalog.dp_stage_count(); }
};

// Field-path problems; empty when the document describes a runnable scenario.
std::vector<std::string> validate_scenario(const nlohmann::json& doc);

// Throws ConfigError carrying every problem found.
ScenarioConfig parse_scenario(const nlohmann::json& doc);

nlohmann::json load_json_file(const std::string& path);

// Sets a dotted path such as "traffic.start_s.1"; numeric components index
// arrays. Throws ConfigError when an intermediate component does not exist.
void set_dotted(nlohmann::json& doc, const std::string& dotted, const nlohmann::json& value);
bool has_dotted(const nlohmann::json& doc, const std::string& dotted);

} // namespace geochain
