#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "geochain/error.hpp"
#include "geochain/scenario.hpp"
#include "geochain/sim.hpp"

namespace {

using nlohmann::json;
using namespace geochain;

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string strategy;
    std::string tagging;
    std::string out;
};

json load_with_overrides(const Overrides& o)
{
    json doc = load_json_file(o.config);
    if (o.seed) {
        doc["seed"] = *o.seed;
    }
    if (!o.strategy.empty()) {
        doc["strategy"] = o.strategy;
    }
    if (!o.tagging.empty()) {
        doc["tagging"] = o.tagging == "on";
    }
    return doc;
}

std::string output_dir(const Overrides& o)
{
    if (!o.out.empty()) {
        return o.out;
    }
    if (const char* env = std::getenv("GEOCHAIN_OUT")) {
        return env;
    }
    return "out";
}

int report_problems(const std::vector<std::string>& problems)
{
    for (const auto& p : problems) {
        std::cerr << "error: " << p << '\n';
    }
    return 2;
}

int cmd_validate(const Overrides& o)
{
    const auto problems = validate_scenario(load_with_overrides(o));
    if (!problems.empty()) {
        return report_problems(problems);
    }
    std::cout << o.config << ": ok\n";
    return 0;
}

int cmd_run(const Overrides& o)
{
    const auto cfg = parse_scenario(load_with_overrides(o));
    const auto report = run_scenario(cfg);
    const auto dir = output_dir(o);
    report.write(dir);
    const auto& s = report.summary;
    std::cout << cfg.name << " strategy=" << s["strategy"].get<std::string>() << " seed=" << cfg.seed
              << " instances=" << s["instances_created"] << " flows=" << s["flows"]["admitted"]
              << " mean_loss_pct=" << s["flows"]["mean_loss_pct"] << " -> " << dir << '\n';
    return 0;
}

json parse_value(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return text;
    }
}

int cmd_sweep(const Overrides& o, const std::string& axis, std::vector<std::string> values,
              const std::vector<std::string>& strategies, int jobs)
{
    std::erase_if(values, [](const std::string& v) { return v.find_first_not_of(" \t") == std::string::npos; });
    if (values.empty()) {
        return report_problems({"--values: empty value list"});
    }
    const json base = load_with_overrides(o);
    if (!has_dotted(base, axis)) {
        return report_problems({axis + ": no such parameter in " + o.config});
    }
    std::vector<std::string> strats = strategies;
    if (strats.empty()) {
        strats.push_back(base.value("strategy", std::string("hybrid")));
    }

    struct Job {
        std::string value;
        std::string strategy;
        ScenarioConfig cfg;
    };
    std::vector<Job> work;
    std::vector<std::string> problems;
    for (const auto& v : values) {
        for (const auto& st : strats) {
            json doc = base;
            set_dotted(doc, axis, parse_value(v));
            doc["strategy"] = st;
            auto p = validate_scenario(doc);
            for (auto& msg : p) {
                problems.push_back(axis + "=" + v + ": " + msg);
            }
            if (p.empty()) {
                work.push_back({v, st, parse_scenario(doc)});
            }
        }
    }
    if (!problems.empty()) {
        return report_problems(problems);
    }

    std::vector<json> rows(work.size());
    const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
    for (std::size_t begin = 0; begin < work.size(); begin += width) {
        std::vector<std::future<json>> running;
        for (std::size_t i = begin; i < std::min(work.size(), begin + width); ++i) {
            running.push_back(std::async(std::launch::async, [&work, i] { return run_scenario(work[i].cfg).summary; }));
        }
        for (std::size_t k = 0; k < running.size(); ++k) {
            rows[begin + k] = running[k].get();
        }
    }

    std::ostringstream csv;
    csv << axis << ",strategy,instances_created,mean_rtt_ms,mean_loss_pct,p99_loss_pct,cp_p95_completion_ms\n";
    std::cout << std::left << std::setw(14) << axis.substr(axis.rfind('.') + 1) << std::setw(11) << "strategy"
              << std::right << std::setw(10) << "instances" << std::setw(12) << "rtt_ms" << std::setw(12)
              << "loss_pct" << std::setw(12) << "p99_loss" << std::setw(12) << "cp_p95_ms" << '\n';
    for (std::size_t i = 0; i < work.size(); ++i) {
        const auto& s = rows[i];
        const auto& f = s["flows"];
        csv << work[i].value << ',' << work[i].strategy << ',' << s["instances_created"] << ',' << f["mean_rtt_ms"]
            << ',' << f["mean_loss_pct"] << ',' << f["p99_loss_pct"] << ',' << s["cp"]["p95_completion_ms"] << '\n';
        std::cout << std::left << std::setw(14) << work[i].value << std::setw(11) << work[i].strategy << std::right
                  << std::fixed << std::setprecision(2) << std::setw(10) << s["instances_created"].get<int>()
                  << std::setw(12) << f["mean_rtt_ms"].get<double>() << std::setw(12)
                  << f["mean_loss_pct"].get<double>() << std::setw(12) << f["p99_loss_pct"].get<double>()
                  << std::setw(12) << s["cp"]["p95_completion_ms"].get<double>() << '\n';
    }
    const auto dir = output_dir(o);
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / "sweep.csv") << csv.str();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Geo-distributed service chain scaling simulator"};
    app.require_subcommand(1);

    Overrides o;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "scenario file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", o.seed, "random seed override");
        sub->add_option("--strategy", o.strategy, "scaling strategy")
            ->check(CLI::IsMember({"proactive", "reactive", "hybrid"}));
        sub->add_option("--tagging", o.tagging, "scaling-interval tagging")->check(CLI::IsMember({"on", "off"}));
        sub->add_option("--out", o.out, "output directory (default $GEOCHAIN_OUT or ./out)");
    };

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    add_common(validate);
    auto* run = app.add_subcommand("run", "run one scenario and write reports");
    add_common(run);
    auto* sweep = app.add_subcommand("sweep", "run a scenario once per axis value");
    add_common(sweep);
    std::string axis;
    std::vector<std::string> values;
    std::vector<std::string> strategies;
    int jobs = 1;
    sweep->add_option("--axis", axis, "dotted parameter path, e.g. traffic.change_interval_s")->required();
    sweep->add_option("--values", values, "values for the axis")->delimiter(',')->required();
    sweep->add_option("--strategies", strategies, "strategies to compare")->delimiter(',');
    sweep->add_option("--jobs", jobs, "scenarios run concurrently");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            return cmd_validate(o);
        }
        if (*run) {
            return cmd_run(o);
        }
        return cmd_sweep(o, axis, values, strategies, jobs);
    } catch (const ConfigError& e) {
        return report_problems(e.problems());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
