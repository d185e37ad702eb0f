#include <doctest.h>

#include <random>

#include "geochain/error.hpp"
#include "geochain/planner.hpp"
#include "oracles.hpp"

using namespace geochain;

namespace {

const std::vector<double> kChain{35000.0, 20000.0, 15000.0};

DelayMatrix uniform(std::size_t n, double ms)
{
    DelayMatrix d(n);
    for (DcId a = 0; a < static_cast<DcId>(n); ++a) {
        for (DcId b = 0; b < static_cast<DcId>(n); ++b) {
            if (a != b) {
                d.set(a, b, ms);
            }
        }
    }
    return d;
}

int total(const StageCounts& c)
{
    int t = 0;
    for (DcId d = 0; d < static_cast<DcId>(c.datacenters()); ++d) {
        for (int j = 1; j <= c.stages(); ++j) {
            t += c.at(d, j);
        }
    }
    return t;
}

} // namespace

TEST_CASE("instances needed")
{
    CHECK(instances_needed(25, 0, 10) == 3);
    CHECK(instances_needed(20, 0, 10) == 2);
    CHECK(instances_needed(5, 10, 10) == 0);
}

TEST_CASE("control plane sizing")
{
    WorkloadMatrix big(2);
    big(0, 1) = 900;
    CHECK(size_cp(big, 500, 200, 0).scscf == 5);

    WorkloadMatrix w(2);
    w(0, 1) = 300;
    w(1, 0) = 100;
    w(0, 0) = 50;
    const auto plan = size_cp(w, 500, 200, 1);
    CHECK(plan.pcscf[0] == 1); // 450 tran/s
    CHECK(plan.pcscf[1] == 1);
    CHECK(plan.scscf_dc == 1);

    w(0, 1) = 600;
    CHECK(size_cp(w, 500, 200, 0).pcscf[0] == 2);

    const auto idle = size_cp(WorkloadMatrix(3), 500, 200, 2);
    CHECK(idle.scscf == 1);
    CHECK(idle.pcscf == std::vector<int>{1, 1, 1});
}

TEST_CASE("stage placement on a two-datacenter path")
{
    StageCapacity avail(2, 2);
    avail.at(0, 1) = 25;
    const std::vector<double> cap{10, 10};
    const auto got = place_stages(std::vector<DcId>{0, 1}, avail, 25, cap);
    CHECK(got.new_instances == 3);
    CHECK(got.path == ServiceChainPath{0, 0, 0, 1});
    CHECK(oracle::min_placement({0, 1}, avail, cap, 25) == 3);
}

TEST_CASE("stage placement with capacity everywhere is free")
{
    StageCapacity avail(4, 3, 1e9);
    CHECK(place_stages(std::vector<DcId>{2, 0, 3}, avail, 500, kChain).new_instances == 0);
}

TEST_CASE("stage placement covers interior datacenters only when it must")
{
    // Four datacenters with two stages: each interior one hosts a stage.
    StageCapacity avail(4, 2);
    const std::vector<double> cap{10, 10};
    const auto got = place_stages(std::vector<DcId>{0, 1, 2, 3}, avail, 15, cap);
    CHECK(got.path == ServiceChainPath{0, 1, 2, 3});
    CHECK(got.new_instances == 4);
    CHECK(oracle::min_placement({0, 1, 2, 3}, avail, cap, 15) == 4);
    CHECK_THROWS_AS(place_stages(std::vector<DcId>{0, 1, 2, 3, 4}, StageCapacity(5, 2), 15, cap),
                    InfeasiblePlacement);
    CHECK_FALSE(oracle::min_placement({0, 1, 2, 3, 4}, StageCapacity(5, 2), cap, 15).has_value());
}

TEST_CASE("stage placement property: path is a monotone cover")
{
    std::mt19937_64 rng(21);
    for (int t = 0; t < 300; ++t) {
        const int k = 2 + static_cast<int>(rng() % 3);
        const int m = 1 + static_cast<int>(rng() % 3);
        if (k > m + 2) {
            continue;
        }
        std::vector<DcId> dc_path;
        for (int i = 0; i < k; ++i) {
            dc_path.push_back(i);
        }
        StageCapacity avail(static_cast<std::size_t>(k), m);
        std::vector<double> cap;
        for (int j = 1; j <= m; ++j) {
            cap.push_back(10.0 + static_cast<double>(rng() % 40));
            for (int d = 0; d < k; ++d) {
                avail.at(d, j) = static_cast<double>(rng() % 100);
            }
        }
        const double q = static_cast<double>(1 + rng() % 120);
        const auto got = place_stages(dc_path, avail, q, cap);
        CHECK(oracle::dedupe(got.path) == dc_path);
        CHECK(got.new_instances == oracle::new_instances(got.path, avail, cap, q));
    }
}

TEST_CASE("loop repair")
{
    StageCapacity avail(5, 3);
    avail.at(2, 3) = 900;
    avail.at(3, 3) = 500;
    avail.at(1, 3) = 100;
    const std::vector<DcId> record{1, 2, 4};
    CHECK(consolidate_loop(record, 2, 3) == std::vector<DcId>{1, 2, 2, 2});
    CHECK(substitute_loop(record, 2, 3, 0, avail) == std::vector<DcId>{1, 2, 4, 3});
    CHECK(eliminate_loop(record, 3, 3, 0, avail, kChain, 100) == std::vector<DcId>{1, 2, 4, 3});

    // Consolidation wins when it needs no new instances.
    StageCapacity rich(5, 3, 0.0);
    rich.at(2, 2) = 1e6;
    rich.at(2, 3) = 1e6;
    CHECK(eliminate_loop(record, 2, 3, 0, rich, kChain, 100) == std::vector<DcId>{1, 2, 2, 2});
    // Substitution wins when the substitute already has capacity.
    StageCapacity sub(5, 3, 0.0);
    sub.at(3, 3) = 1e6;
    CHECK(eliminate_loop(record, 2, 3, 0, sub, kChain, 100) == std::vector<DcId>{1, 2, 4, 3});
}

TEST_CASE("compute path keeps a current path that needs nothing")
{
    StageCapacity avail(3, 3, 1e6);
    const ServiceChainPath current{0, 0, 1, 1, 2};
    const auto got = compute_path({{0, 2}, 1000, 250}, uniform(3, 10), avail, kChain, current);
    CHECK(got.path == current);
    CHECK(got.new_instances == 0);
    CHECK_FALSE(got.fallback);
}

TEST_CASE("compute path moves stages to the datacenter with capacity")
{
    StageCapacity avail(3, 3, 0.0);
    for (int j = 1; j <= 3; ++j) {
        avail.at(1, j) = 1e6;
    }
    const auto delays = uniform(3, 10);
    const auto got = compute_path({{0, 2}, 5000, 250}, delays, avail, kChain, entry_only_path({0, 2}, 3));
    CHECK(got.path == ServiceChainPath{0, 1, 1, 1, 2});
    CHECK(got.new_instances == 0);
    CHECK(oracle::min_path(0, 2, delays, avail, kChain, 5000, 250) == 0);
}

TEST_CASE("compute path falls back to shortest path placement")
{
    DelayMatrix d(3);
    d.set_symmetric(0, 2, 100);
    d.set_symmetric(0, 1, 10);
    d.set_symmetric(1, 2, 10);
    StageCapacity avail(3, 3, 0.0);
    avail.at(1, 2) = 1e6;
    const auto got = compute_path({{0, 2}, 5000, 5}, d, avail, kChain, entry_only_path({0, 2}, 3));
    const auto expect = place_stages(shortest_delay_path(0, 2, d), avail, 5000, kChain);
    CHECK(got.fallback);
    CHECK(got.violates_threshold);
    CHECK(got.path == expect.path);
    CHECK(got.new_instances == expect.new_instances);
}

TEST_CASE("plan keeps a feasible path and scales in surplus")
{
    WorkloadMatrix load(2);
    load(0, 1) = 1000;
    const auto delays = uniform(2, 20);
    PathTable current{{{0, 1}, {0, 0, 0, 0, 1}}, {{1, 0}, {1, 1, 1, 1, 0}}};
    DpPlanInput in{&load, &delays, StageCounts(2, 3, 3), {}, &current, kChain, 250};
    const auto plan = plan_dp(in);
    CHECK(plan.paths.at({0, 1}) == current.at({0, 1}));
    CHECK(plan.paths.at({1, 0}) == current.at({1, 0}));
    CHECK(plan.source.at({0, 1}) == PathSource::kept);
    CHECK(total(plan.added) == 0);
    for (int j = 1; j <= 3; ++j) {
        CHECK(plan.target.at(0, j) == 1);
        CHECK(plan.removed.at(0, j) == 2);
        CHECK(plan.target.at(1, j) == 0);
    }
}

TEST_CASE("plan replaces a current path that loops")
{
    WorkloadMatrix load(3);
    load(0, 2) = 1000;
    const auto delays = uniform(3, 10);
    PathTable current{{{0, 2}, {0, 1, 0, 1, 2}}};
    DpPlanInput in{&load, &delays, StageCounts(3, 3, 1), {}, &current, kChain, 250};
    const auto plan = plan_dp(in);
    const auto& path = plan.paths.at({0, 2});
    CHECK(path != current.at({0, 2}));
    CHECK(is_loopless(path));
    CHECK(path.front() == 0);
    CHECK(path.back() == 2);
    const auto got = compute_path({{0, 2}, 1000, 250}, delays, StageCapacity(3, 3, 1e6), kChain, current.at({0, 2}));
    CHECK(is_loopless(got.path));
}

TEST_CASE("plan with no demand scales everything in")
{
    WorkloadMatrix load(3);
    const auto delays = uniform(3, 20);
    PathTable current;
    for (DcId e = 0; e < 3; ++e) {
        for (DcId x = 0; x < 3; ++x) {
            current[{e, x}] = entry_only_path({e, x}, 3);
        }
    }
    DpPlanInput in{&load, &delays, StageCounts(3, 3, 2), {}, &current, kChain, 250};
    const auto plan = plan_dp(in);
    CHECK(plan.paths == current);
    CHECK(total(plan.target) == 0);
    CHECK(total(plan.removed) == 18);
}

TEST_CASE("plan reuses idle capacity in the exit datacenter")
{
    WorkloadMatrix load(2);
    load(0, 1) = 50000;
    const auto delays = uniform(2, 20);
    StageCounts working(2, 3, 1);
    working.at(1, 2) = 3;
    working.at(1, 3) = 4;
    PathTable current{{{0, 1}, {0, 0, 0, 0, 1}}};
    DpPlanInput in{&load, &delays, working, {}, &current, kChain, 250};
    const auto plan = plan_dp(in);

    StageCapacity avail(2, 3);
    for (DcId d = 0; d < 2; ++d) {
        for (int j = 1; j <= 3; ++j) {
            avail.at(d, j) = working.at(d, j) * kChain[static_cast<std::size_t>(j - 1)];
        }
    }
    const int baseline = oracle::new_instances({0, 0, 0, 0, 1}, avail, kChain, 50000);
    const auto best = oracle::min_path(0, 1, delays, avail, kChain, 50000, 250);
    REQUIRE(best.has_value());
    CHECK(plan.paths.at({0, 1})[2] == 1);
    CHECK(total(plan.added) == *best);
    CHECK(total(plan.added) < baseline);
}

TEST_CASE("plan counts buffered instances as reusable")
{
    WorkloadMatrix load(2);
    load(0, 1) = 50000;
    const auto delays = uniform(2, 20);
    StageCounts buffered(2, 3, 0);
    buffered.at(1, 1) = 2;
    buffered.at(1, 2) = 3;
    buffered.at(1, 3) = 4;
    PathTable current{{{0, 1}, {0, 0, 0, 0, 1}}};
    DpPlanInput in{&load, &delays, StageCounts(2, 3, 1), buffered, &current, kChain, 250};
    const auto plan = plan_dp(in);
    CHECK(plan.paths.at({0, 1}) == ServiceChainPath{0, 1, 1, 1, 1});
    CHECK(total(plan.reused) == total(plan.added));
    CHECK(plan.target.at(1, 3) == 4);
}

TEST_CASE("plan targets cover assigned demand")
{
    std::mt19937_64 rng(8);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 2 + rng() % 4;
        WorkloadMatrix load(n);
        DelayMatrix delays(n);
        StageCounts working(n, 3);
        PathTable current;
        for (DcId a = 0; a < static_cast<DcId>(n); ++a) {
            for (DcId b = 0; b < static_cast<DcId>(n); ++b) {
                load(a, b) = static_cast<double>(rng() % 30000);
                if (a != b) {
                    delays.set(a, b, static_cast<double>(5 + rng() % 150));
                }
                current[{a, b}] = entry_only_path({a, b}, 3);
            }
            for (int j = 1; j <= 3; ++j) {
                working.at(a, j) = static_cast<int>(rng() % 4);
            }
        }
        DpPlanInput in{&load, &delays, working, {}, &current, kChain, 200};
        const auto plan = plan_dp(in);
        CHECK(plan.paths.size() == n * n);
        for (DcId d = 0; d < static_cast<DcId>(n); ++d) {
            for (int j = 1; j <= 3; ++j) {
                const double c = kChain[static_cast<std::size_t>(j - 1)];
                CHECK(plan.target.at(d, j) * c + 1e-6 >= plan.assigned.at(d, j));
                CHECK(plan.target.at(d, j) ==
                      working.at(d, j) + plan.added.at(d, j) - plan.removed.at(d, j));
            }
        }
    }
}
