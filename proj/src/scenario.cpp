#include "geochain/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "geochain/error.hpp"
#include "geochain/routing.hpp"

namespace geochain {

using nlohmann::json;

const char* to_string(Strategy s)
{
    switch (s) {
    case Strategy::proactive:
        return "proactive";
    case Strategy::reactive:
        return "reactive";
    case Strategy::hybrid:
        return "hybrid";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& s)
{
    if (s == "proactive") {
        return Strategy::proactive;
    }
    if (s == "reactive") {
        return Strategy::reactive;
    }
    if (s == "hybrid") {
        return Strategy::hybrid;
    }
    throw ConfigError({"strategy: expected proactive, reactive or hybrid, got '" + s + "'"});
}

const char* to_string(Pairing p)
{
    return p == Pairing::fifo ? "fifo" : "cross_dc";
}

namespace {

// Reads typed fields and records problems under their dotted paths.
class Reader {
public:
    explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

    void fail(const std::string& path, const std::string& what) { problems_.push_back(path + ": " + what); }

    const json* child(const json& obj, const std::string& key, const std::string& path, bool required)
    {
        if (!obj.is_object()) {
            return nullptr;
        }
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) {
            if (required) {
                fail(path, "missing");
            }
            return nullptr;
        }
        return &*it;
    }

    template <typename T>
    void read(const json& obj, const std::string& key, const std::string& path, T& out, bool required = false)
    {
        const json* v = child(obj, key, path, required);
        if (!v) {
            return;
        }
        try {
            out = v->get<T>();
        } catch (const json::exception&) {
            fail(path, "wrong type (" + std::string(v->type_name()) + ")");
        }
    }

    void number(const json& obj, const std::string& key, const std::string& path, double& out, double lo,
                bool required = false)
    {
        double v = out;
        read(obj, key, path, v, required);
        if (!std::isfinite(v) || v < lo) {
            std::ostringstream os;
            os << "must be >= " << lo;
            fail(path, os.str());
            return;
        }
        out = v;
    }

    void integer(const json& obj, const std::string& key, const std::string& path, int& out, int lo)
    {
        int v = out;
        read(obj, key, path, v);
        if (v < lo) {
            fail(path, "must be >= " + std::to_string(lo));
            return;
        }
        out = v;
    }

    void dc(const json& obj, const std::string& key, const std::string& path, DcId& out, std::size_t n)
    {
        DcId v = out;
        read(obj, key, path, v);
        if (n > 0 && (v < 0 || static_cast<std::size_t>(v) >= n)) {
            fail(path, "datacenter " + std::to_string(v) + " out of range [0," + std::to_string(n) + ")");
            return;
        }
        out = v;
    }

private:
    std::vector<std::string>& problems_;
};

bool in_range(DcId d, std::size_t n)
{
    return d >= 0 && static_cast<std::size_t>(d) < n;
}

Catalog read_catalog(const json& doc, Reader& r, std::vector<std::string>& problems)
{
    Catalog base = default_catalog();
    const json* cat = r.child(doc, "catalog", "catalog", false);
    if (!cat) {
        return base;
    }
    std::vector<VnfType> types = base.types();
    if (const json* vnfs = r.child(*cat, "vnfs", "catalog.vnfs", false)) {
        types.clear();
        if (!vnfs->is_array()) {
            r.fail("catalog.vnfs", "expected an array");
        } else {
            for (std::size_t i = 0; i < vnfs->size(); ++i) {
                const auto& v = (*vnfs)[i];
                const std::string p = "catalog.vnfs[" + std::to_string(i) + "]";
                VnfType t;
                std::string plane = "data";
                r.read(v, "name", p + ".name", t.name, true);
                r.read(v, "plane", p + ".plane", plane);
                if (plane != "data" && plane != "control") {
                    r.fail(p + ".plane", "expected data or control");
                }
                t.plane = plane == "control" ? Plane::control : Plane::data;
                r.integer(v, "stage", p + ".stage", t.stage, 1);
                r.number(v, "capacity", p + ".capacity", t.capacity, 1e-9, true);
                r.number(v, "cpu_pct", p + ".cpu_pct", t.thresholds.cpu_pct, 0.0);
                r.number(v, "mem_pct", p + ".mem_pct", t.thresholds.mem_pct, 0.0);
                t.thresholds.input_rate = t.capacity;
                r.number(v, "input_rate", p + ".input_rate", t.thresholds.input_rate, 0.0);
                types.push_back(t);
            }
        }
    }
    std::vector<std::string> chain;
    for (int s = 1; s <= base.dp_stage_count(); ++s) {
        chain.push_back(base.type(base.dp_stage(s)).name);
    }
    r.read(*cat, "chain", "catalog.chain", chain);
    const auto before = problems.size();
    if (chain.empty()) {
        r.fail("catalog.chain", "needs at least one DP stage");
    }
    if (chain.size() > static_cast<std::size_t>(kMaxDpStages)) {
        r.fail("catalog.chain", std::to_string(chain.size()) + " DP stages exceed the hop-code cap of " +
                                    std::to_string(kMaxDpStages));
    }
    Catalog probe(types, {});
    for (std::size_t i = 0; i < chain.size(); ++i) {
        auto v = probe.find(chain[i]);
        if (!v) {
            r.fail("catalog.chain[" + std::to_string(i) + "]", "unknown VNF '" + chain[i] + "'");
        } else if (probe.type(*v).plane != Plane::data) {
            r.fail("catalog.chain[" + std::to_string(i) + "]", "'" + chain[i] + "' is not a DP VNF");
        }
    }
    if (probe.pcscf() < 0 || probe.scscf() < 0) {
        r.fail("catalog.vnfs", "needs control VNFs at stage 1 and stage 2");
    }
    if (problems.size() != before) {
        return base;
    }
    return Catalog(types, chain);
}

PathTable read_path_table(const json& j, const std::string& path, std::size_t n, int m, Reader& r)
{
    PathTable t;
    if (!j.is_array()) {
        r.fail(path, "expected an array of {entry, exit, path}");
        return t;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        DcId e = 0;
        DcId x = 0;
        ServiceChainPath sc;
        r.dc(j[i], "entry", p + ".entry", e, n);
        r.dc(j[i], "exit", p + ".exit", x, n);
        r.read(j[i], "path", p + ".path", sc, true);
        if (sc.size() != static_cast<std::size_t>(m) + 2) {
            r.fail(p + ".path", "expected " + std::to_string(m + 2) + " datacenters, got " + std::to_string(sc.size()));
            continue;
        }
        bool ok = true;
        for (DcId d : sc) {
            ok = ok && in_range(d, n);
        }
        if (!ok) {
            r.fail(p + ".path", "datacenter out of range");
            continue;
        }
        if (sc.front() != e || sc.back() != x) {
            r.fail(p + ".path", "must start at entry and end at exit");
            continue;
        }
        t[{e, x}] = sc;
    }
    // Pairs not listed stay inside their entry datacenter.
    for (DcId e = 0; e < static_cast<DcId>(n); ++e) {
        for (DcId x = 0; x < static_cast<DcId>(n); ++x) {
            t.try_emplace({e, x}, entry_only_path({e, x}, m));
        }
    }
    return t;
}

ScenarioConfig read(const json& doc, std::vector<std::string>& problems)
{
    Reader r(problems);
    ScenarioConfig c;
    if (!doc.is_object()) {
        r.fail("(root)", "expected an object");
        return c;
    }
    r.read(doc, "name", "name", c.name);
    r.read(doc, "seed", "seed", c.seed);
    r.number(doc, "horizon_s", "horizon_s", c.horizon_s, 1.0, true);
    std::string strategy = to_string(c.strategy);
    r.read(doc, "strategy", "strategy", strategy);
    if (strategy == "proactive" || strategy == "reactive" || strategy == "hybrid") {
        c.strategy = strategy_from_string(strategy);
    } else {
        r.fail("strategy", "expected proactive, reactive or hybrid, got '" + strategy + "'");
    }
    r.read(doc, "tagging", "tagging", c.tagging);

    // topology
    const json* topo = r.child(doc, "topology", "topology", true);
    std::size_t n = 0;
    if (topo) {
        r.read(*topo, "datacenters", "topology.datacenters", c.datacenters, true);
        n = c.datacenters.size();
        if (n == 0) {
            r.fail("topology.datacenters", "needs at least one datacenter");
        }
        if (n > static_cast<std::size_t>(kMaxTaggedDatacenters)) {
            r.fail("topology.datacenters", "at most " + std::to_string(kMaxTaggedDatacenters) +
                                               " datacenters fit the flow tag");
        }
        std::vector<std::vector<double>> rows;
        r.read(*topo, "delays_ms", "topology.delays_ms", rows, true);
        if (!rows.empty() || n > 0) {
            if (rows.size() != n) {
                r.fail("topology.delays_ms", "expected " + std::to_string(n) + " rows, got " + std::to_string(rows.size()));
            } else {
                bool shaped = true;
                for (std::size_t i = 0; i < rows.size(); ++i) {
                    if (rows[i].size() != n) {
                        r.fail("topology.delays_ms[" + std::to_string(i) + "]",
                               "expected " + std::to_string(n) + " columns, got " + std::to_string(rows[i].size()));
                        shaped = false;
                    }
                }
                if (shaped) {
                    try {
                        c.delays = DelayMatrix::from_rows(rows);
                    } catch (const ConfigError& e) {
                        // "delays[i][j]: ..." -> "topology.delays_ms[i][j]: ..."
                        for (const auto& p : e.problems()) {
                            problems.push_back("topology.delays_ms" + p.substr(std::string("delays").size()));
                        }
                    }
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            c.locations[c.datacenters[i]] = static_cast<DcId>(i);
        }
        if (const json* loc = r.child(*topo, "locations", "topology.locations", false)) {
            if (!loc->is_object()) {
                r.fail("topology.locations", "expected an object");
            } else {
                for (auto it = loc->begin(); it != loc->end(); ++it) {
                    DcId d = 0;
                    r.dc(*loc, it.key(), "topology.locations." + it.key(), d, n);
                    c.locations[it.key()] = d;
                }
            }
        }
        r.dc(*topo, "scscf_dc", "topology.scscf_dc", c.scscf_dc, n);
        r.dc(*topo, "global_dc", "topology.global_dc", c.global_dc, n);
    }

    if (const json* changes = r.child(doc, "delay_changes", "delay_changes", false)) {
        for (std::size_t i = 0; i < changes->size(); ++i) {
            const auto& ch = (*changes)[i];
            const std::string p = "delay_changes[" + std::to_string(i) + "]";
            DelayChange dc;
            r.number(ch, "at_s", p + ".at_s", dc.at_s, 0.0, true);
            r.number(ch, "ms", p + ".ms", dc.ms, 0.0, true);
            std::vector<std::pair<DcId, DcId>> links;
            r.read(ch, "links", p + ".links", links, true);
            for (std::size_t k = 0; k < links.size(); ++k) {
                if (!in_range(links[k].first, n) || !in_range(links[k].second, n) ||
                    links[k].first == links[k].second) {
                    r.fail(p + ".links[" + std::to_string(k) + "]", "needs two distinct datacenters in range");
                }
            }
            dc.links = links;
            c.delay_changes.push_back(dc);
        }
    }

    c.catalog = read_catalog(doc, r, problems);
    const int m = c.stages();

    if (const json* s = r.child(doc, "scaling", "scaling", false)) {
        r.number(*s, "interval_s", "scaling.interval_s", c.interval_s, 1.0);
        r.integer(*s, "tau", "scaling.tau", c.tau, 0);
        r.number(*s, "threshold_ms", "scaling.threshold_ms", c.threshold_ms, 0.0);
        int window = static_cast<int>(c.workload_forecast.window);
        r.integer(*s, "window", "scaling.window", window, 1);
        c.workload_forecast.window = static_cast<std::size_t>(window);
        c.delay_forecast.window = static_cast<std::size_t>(window);
        r.read(*s, "phi_min", "scaling.phi_min", c.workload_forecast.phi_min);
        r.read(*s, "phi_max", "scaling.phi_max", c.workload_forecast.phi_max);
        r.read(*s, "delay_phi_min", "scaling.delay_phi_min", c.delay_forecast.phi_min);
        r.read(*s, "delay_phi_max", "scaling.delay_phi_max", c.delay_forecast.phi_max);
        for (const auto& [p, f] : {std::pair{"scaling.phi", c.workload_forecast},
                                   std::pair{"scaling.delay_phi", c.delay_forecast}}) {
            if (f.phi_min < -1.0 || f.phi_max > 1.0 || f.phi_min > f.phi_max) {
                r.fail(std::string(p) + "_min", "phi bounds must satisfy -1 <= min <= max <= 1");
            }
        }
        r.integer(*s, "persistence_s", "scaling.persistence_s", c.persistence_s, 1);
        r.number(*s, "boot_delay_s", "scaling.boot_delay_s", c.boot_delay_s, 0.0);
        r.integer(*s, "initial_per_stage", "scaling.initial_per_stage", c.initial_per_stage, 0);
        r.integer(*s, "min_per_stage", "scaling.min_per_stage", c.min_per_stage, 0);
        r.read(*s, "static_provisioning", "scaling.static_provisioning", c.static_provisioning);
        if (const json* script = r.child(*s, "path_script", "scaling.path_script", false)) {
            for (std::size_t i = 0; i < script->size(); ++i) {
                c.path_script.push_back(
                    read_path_table((*script)[i], "scaling.path_script[" + std::to_string(i) + "]", n, m, r));
            }
        }
    }

    const json* t = r.child(doc, "traffic", "traffic", true);
    if (t) {
        auto& tr = c.traffic;
        r.read(*t, "rates", "traffic.rates", tr.rates, true);
        for (std::size_t i = 0; i < tr.rates.size(); ++i) {
            if (!std::isfinite(tr.rates[i]) || tr.rates[i] < 0.0) {
                r.fail("traffic.rates[" + std::to_string(i) + "]", "must be >= 0");
            }
        }
        r.number(*t, "change_interval_s", "traffic.change_interval_s", tr.change_interval_s, 1e-3);
        for (std::size_t i = 0; i < n; ++i) {
            tr.sources.push_back(static_cast<int>(i));
        }
        r.read(*t, "sources", "traffic.sources", tr.sources);
        for (std::size_t i = 0; i < tr.sources.size(); ++i) {
            if (!in_range(tr.sources[i], n)) {
                r.fail("traffic.sources[" + std::to_string(i) + "]", "datacenter out of range");
            }
        }
        tr.start_s.assign(n, 0.0);
        if (t->contains("start_s")) {
            r.read(*t, "start_s", "traffic.start_s", tr.start_s);
            if (tr.start_s.size() != n) {
                r.fail("traffic.start_s", "expected one start time per datacenter (" + std::to_string(n) + ")");
                tr.start_s.assign(n, 0.0);
            }
        } else if (t->contains("start_gaps_s")) {
            std::vector<double> gaps;
            std::vector<int> order = tr.sources;
            r.read(*t, "start_gaps_s", "traffic.start_gaps_s", gaps);
            r.read(*t, "start_order", "traffic.start_order", order);
            bool ok = true;
            for (std::size_t i = 0; i < order.size(); ++i) {
                if (!in_range(order[i], n)) {
                    r.fail("traffic.start_order[" + std::to_string(i) + "]", "datacenter out of range");
                    ok = false;
                }
            }
            if (!order.empty() && gaps.size() + 1 != order.size()) {
                r.fail("traffic.start_gaps_s", "expected " + std::to_string(order.size() - 1) + " gaps");
                ok = false;
            }
            for (std::size_t i = 0; i < gaps.size(); ++i) {
                if (gaps[i] < 0.0) {
                    r.fail("traffic.start_gaps_s[" + std::to_string(i) + "]", "must be >= 0");
                    ok = false;
                }
            }
            if (ok) {
                double at = 0.0;
                for (std::size_t i = 0; i < order.size(); ++i) {
                    if (i > 0) {
                        at += gaps[i - 1];
                    }
                    tr.start_s[static_cast<std::size_t>(order[i])] = at;
                }
            }
        }
        std::string pairing = "fifo";
        r.read(*t, "pairing", "traffic.pairing", pairing);
        if (pairing == "fifo" || pairing == "cross_dc") {
            tr.pairing = pairing == "fifo" ? Pairing::fifo : Pairing::cross_dc;
        } else {
            r.fail("traffic.pairing", "expected fifo or cross_dc");
        }
        r.number(*t, "call_duration_s", "traffic.call_duration_s", tr.call_duration_s, 1e-3);
        r.number(*t, "packet_rate", "traffic.packet_rate", tr.packet_rate, 0.0);
    }

    if (const json* tp = r.child(doc, "transport", "transport", false)) {
        r.number(*tp, "loss_rate", "transport.loss_rate", c.loss_rate, 0.0);
        r.number(*tp, "dup_rate", "transport.dup_rate", c.dup_rate, 0.0);
        if (c.loss_rate >= 1.0) {
            r.fail("transport.loss_rate", "must be < 1");
        }
        if (c.dup_rate >= 1.0) {
            r.fail("transport.dup_rate", "must be < 1");
        }
        if (tp->contains("delay_ms") && !(*tp)["delay_ms"].is_null()) {
            double d = 0.0;
            r.number(*tp, "delay_ms", "transport.delay_ms", d, 0.0);
            c.control_delay_ms = d;
        }
        r.read(*tp, "step5_skew_ms", "transport.step5_skew_ms", c.step5_skew_ms);
        if (!c.step5_skew_ms.empty() && c.step5_skew_ms.size() != n) {
            r.fail("transport.step5_skew_ms", "expected one value per datacenter (" + std::to_string(n) + ")");
        }
        r.read(*tp, "trace_messages", "transport.trace_messages", c.trace_messages);
    }
    c.step5_skew_ms.resize(n, 0.0);

    if (const json* md = r.child(doc, "media", "media", false)) {
        r.number(*md, "hop_processing_ms", "media.hop_processing_ms", c.hop_processing_ms, 0.0);
        r.number(*md, "saturation_penalty_ms", "media.saturation_penalty_ms", c.saturation_penalty_ms, 0.0);
        r.number(*md, "cp_processing_ms", "media.cp_processing_ms", c.cp_processing_ms, 0.0);
    }

    if (const json* rp = r.child(doc, "reports", "reports", false)) {
        r.integer(*rp, "cadence_s", "reports.cadence_s", c.report_cadence_s, 1);
        r.integer(*rp, "cp_batch_s", "reports.cp_batch_s", c.cp_batch_s, 1);
    }
    const double ratio = c.interval_s / c.report_cadence_s;
    if (std::abs(ratio - std::round(ratio)) > 1e-9) {
        r.fail("scaling.interval_s", "must be a multiple of reports.cadence_s");
    }
    return c;
}

} // namespace

std::vector<std::string> validate_scenario(const json& doc)
{
    std::vector<std::string> problems;
    read(doc, problems);
    return problems;
}

ScenarioConfig parse_scenario(const json& doc)
{
    std::vector<std::string> problems;
    auto c = read(doc, problems);
    if (!problems.empty()) {
        throw ConfigError(problems);
    }
    return c;
}

json load_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({path + ": cannot open file"});
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError({path + ": " + e.what()});
    }
}

namespace {

std::vector<std::string> split_dotted(const std::string& dotted)
{
    std::vector<std::string> parts;
    std::stringstream ss(dotted);
    std::string part;
    while (std::getline(ss, part, '.')) {
        parts.push_back(part);
    }
    return parts;
}

bool is_index(const std::string& s)
{
    return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

json* walk(json& doc, const std::vector<std::string>& parts, std::size_t count)
{
    json* cur = &doc;
    for (std::size_t i = 0; i < count; ++i) {
        const auto& p = parts[i];
        if (cur->is_array() && is_index(p)) {
            const auto k = std::stoul(p);
            if (k >= cur->size()) {
                return nullptr;
            }
            cur = &(*cur)[k];
        } else if (cur->is_object() && cur->contains(p)) {
            cur = &(*cur)[p];
        } else {
            return nullptr;
        }
    }
    return cur;
}

} // namespace

bool has_dotted(const json& doc, const std::string& dotted)
{
    auto parts = split_dotted(dotted);
    json copy = doc;
    return !parts.empty() && walk(copy, parts, parts.size()) != nullptr;
}

void set_dotted(json& doc, const std::string& dotted, const json& value)
{
    auto parts = split_dotted(dotted);
    if (parts.empty()) {
        throw ConfigError({"axis: empty parameter path"});
    }
    json* parent = walk(doc, parts, parts.size() - 1);
    if (!parent) {
        throw ConfigError({dotted + ": no such parameter"});
    }
    const auto& last = parts.back();
    if (parent->is_array() && is_index(last)) {
        const auto k = std::stoul(last);
        if (k >= parent->size()) {
            throw ConfigError({dotted + ": index out of range"});
        }
        (*parent)[k] = value;
    } else if (parent->is_object()) {
        (*parent)[last] = value;
    } else {
        throw ConfigError({dotted + ": no such parameter"});
    }
}

} // namespace geochain
