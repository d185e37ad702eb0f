#include <doctest.h>

#include <random>

#include "geochain/error.hpp"
#include "geochain/provisioning.hpp"

using namespace geochain;

namespace {

const Catalog& catalog()
{
    static const Catalog c = default_catalog();
    return c;
}

VnfIndex fw() { return *catalog().find("firewall"); }

std::vector<int> queue_ids(const Inventory& inv, VnfIndex v)
{
    std::vector<int> out;
    for (const auto& e : inv.buffer(v)) {
        out.push_back(e.id);
    }
    return out;
}

} // namespace

TEST_CASE("default catalog capacities and thresholds")
{
    const auto& c = catalog();
    CHECK(c.type(c.pcscf()).capacity == 500.0);
    CHECK(c.type(c.scscf()).capacity == 200.0);
    CHECK(c.dp_capacities() == std::vector<double>{35000.0, 20000.0, 15000.0});
    CHECK(c.type(c.pcscf()).thresholds.cpu_pct == 70.0);
    CHECK(c.type(c.scscf()).thresholds.input_rate == 400.0);
    CHECK(c.type(fw()).thresholds.cpu_pct == 90.0);
    CHECK(c.type(fw()).thresholds.mem_pct == 50.0);
}

TEST_CASE("scale out reuses the buffer before creating")
{
    Inventory inv(0, 4, catalog(), 20000);
    const auto seeded = inv.seed_initial(fw(), 2);
    inv.scale_in(seeded, 3);
    const auto got = inv.scale_out(fw(), 3, 1000);
    REQUIRE(got.size() == 3);
    CHECK(inv.instance(got[0]).ready(1000));
    CHECK(inv.instance(got[1]).ready(1000));
    CHECK_FALSE(inv.instance(got[2]).ready(1000));
    CHECK(inv.instance(got[2]).ready_at_ms == 21000);
    CHECK(inv.buffered_count(fw()) == 0);
    CHECK(inv.census(fw()).created == 3);
}

TEST_CASE("scale out on an empty queue creates")
{
    Inventory inv(0, 4, catalog(), 20000);
    const auto got = inv.scale_out(fw(), 1, 0);
    REQUIRE(got.size() == 1);
    CHECK(got[0] >= 4);
    CHECK(inv.creation_log().size() == 1);
    CHECK_FALSE(inv.creation_log()[0].initial);
}

TEST_CASE("scale out takes from the queue tail")
{
    Inventory inv(0, 4, catalog(), 20000);
    const auto ids = inv.seed_initial(fw(), 5);
    inv.scale_in(ids, 1);
    const auto got = inv.scale_out(fw(), 2, 0);
    CHECK(got == std::vector<int>{ids[4], ids[3]});
    CHECK(queue_ids(inv, fw()) == std::vector<int>{ids[0], ids[1], ids[2]});
}

TEST_CASE("scale in stamps and rejects non-working instances")
{
    Inventory inv(0, 4, catalog(), 20000);
    const auto ids = inv.seed_initial(fw(), 1);
    inv.scale_in(ids, 7);
    CHECK(inv.instance(ids[0]).state == InstanceState::buffered);
    CHECK(inv.buffer(fw()).front().interval == 7);
    CHECK_THROWS_AS(inv.scale_in(ids, 7), ContractViolation);

    const auto back = inv.scale_out(fw(), 1, 5000);
    CHECK(back == ids);
    CHECK(inv.instance(ids[0]).ready(5000));
}

TEST_CASE("eviction after tau intervals")
{
    SUBCASE("boundary")
    {
        Inventory inv(0, 4, catalog(), 0);
        const auto a = inv.seed_initial(fw(), 1);
        inv.scale_in(a, 5);
        CHECK(inv.evict_expired(15, 10) == a);
        CHECK_FALSE(inv.contains(a[0]));

        Inventory keep(0, 4, catalog(), 0);
        const auto b = keep.seed_initial(fw(), 1);
        keep.scale_in(b, 6);
        CHECK(keep.evict_expired(15, 10).empty());
        CHECK(keep.buffered_count(fw()) == 1);
    }
    SUBCASE("head scan")
    {
        Inventory inv(0, 4, catalog(), 0);
        const auto ids = inv.seed_initial(fw(), 3);
        inv.scale_in(std::vector<int>{ids[0]}, 3);
        inv.scale_in(std::vector<int>{ids[1]}, 5);
        inv.scale_in(std::vector<int>{ids[2]}, 9);
        CHECK(inv.evict_expired(15, 10) == std::vector<int>{ids[0], ids[1]});
        CHECK(queue_ids(inv, fw()) == std::vector<int>{ids[2]});
    }
}

TEST_CASE("draining instances are destroyed once idle")
{
    Inventory inv(0, 4, catalog(), 0);
    const auto ids = inv.seed_initial(fw(), 1);
    inv.add_load(ids[0], 100);
    inv.scale_in(ids, 0);
    CHECK(inv.evict_expired(10, 10) == ids);
    CHECK(inv.instance(ids[0]).state == InstanceState::draining);
    inv.add_load(ids[0], -100);
    CHECK(inv.reap_drained() == ids);
    CHECK(inv.census(fw()).destroyed == 1);
}

TEST_CASE("available capacity")
{
    Inventory inv(0, 4, catalog(), 0);
    const auto ids = inv.seed_initial(fw(), 2);
    inv.add_load(ids[0], 10000);
    CHECK(inv.available_capacity(fw()) == 60000.0);

    Inventory empty(0, 4, catalog(), 0);
    CHECK(empty.available_capacity(fw()) == 0.0);

    Inventory buffered(0, 4, catalog(), 0);
    buffered.scale_in(buffered.seed_initial(fw(), 1), 0);
    CHECK(buffered.available_capacity(fw()) == 0.0);
}

TEST_CASE("apply target scales in least loaded")
{
    Inventory inv(0, 4, catalog(), 0);
    const auto ids = inv.seed_initial(fw(), 3);
    inv.add_load(ids[0], 300);
    inv.add_load(ids[2], 100);
    CHECK(inv.apply_target(fw(), 1, 2, 0) == -2);
    CHECK(inv.working_ids(fw()) == std::vector<int>{ids[0]});
    CHECK(inv.apply_target(fw(), 3, 2, 0) == 2);
    CHECK(inv.census(fw()).created == 3);
}

TEST_CASE("instance ids stay inside a hop lane and are recycled")
{
    Inventory inv(0, 8, catalog(), 0);
    const auto ids = inv.seed_initial(fw(), Inventory::kMaxInstanceId - 7);
    CHECK(ids.front() == 8);
    CHECK(ids.back() == Inventory::kMaxInstanceId);
    CHECK_THROWS_AS(inv.scale_out(fw(), 1, 0), ContractViolation);
    inv.scale_in(std::vector<int>{ids[3]}, 0);
    inv.evict_expired(10, 10);
    CHECK(inv.scale_out(fw(), 1, 0) == std::vector<int>{ids[3]});
}

TEST_CASE("lifecycle property: census is conserved")
{
    std::mt19937_64 rng(5);
    Inventory inv(1, 4, catalog(), 1000);
    inv.seed_initial(fw(), 2);
    int interval = 0;
    for (int step = 0; step < 2000; ++step) {
        const auto op = rng() % 4;
        if (op == 0) {
            inv.scale_out(fw(), 1 + static_cast<int>(rng() % 3), step * 1000);
        } else if (op == 1) {
            auto ids = inv.working_ids(fw());
            if (!ids.empty()) {
                inv.scale_in(std::vector<int>{ids[rng() % ids.size()]}, interval);
            }
        } else if (op == 2) {
            ++interval;
            inv.evict_expired(interval, 10);
        } else {
            inv.apply_target(fw(), static_cast<int>(rng() % 6), interval, step * 1000);
        }
        const auto c = inv.census(fw());
        CHECK(c.working + c.buffered + c.draining + c.destroyed == c.created);
        CHECK(c.buffered == inv.buffered_count(fw()));
        int last = -1;
        for (const auto& e : inv.buffer(fw())) {
            CHECK(e.interval >= last);
            CHECK(interval - e.interval < 10);
            last = e.interval;
        }
    }
}
