#include <doctest.h>

#include <algorithm>
#include <limits>
#include <random>

#include "geochain/error.hpp"
#include "geochain/topology.hpp"

using namespace geochain;

namespace {

DelayMatrix full(std::size_t n, double ms)
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

// Every simple path from entry to exit, by depth-first enumeration.
void simple_paths(DcId at, DcId exit, std::size_t n, std::vector<DcId>& cur, std::vector<std::vector<DcId>>& out)
{
    if (at == exit) {
        out.push_back(cur);
        return;
    }
    for (DcId next = 0; next < static_cast<DcId>(n); ++next) {
        if (std::find(cur.begin(), cur.end(), next) != cur.end()) {
            continue;
        }
        cur.push_back(next);
        simple_paths(next, exit, n, cur, out);
        cur.pop_back();
    }
}

} // namespace

TEST_CASE("entry datacenter lookup")
{
    CHECK(entry_datacenter("hk", {{"tokyo", 0}, {"hk", 1}}) == 1);
    CHECK(entry_datacenter("tokyo", {{"tokyo", 0}}) == 0);
    CHECK_THROWS_AS(entry_datacenter("paris", {{"tokyo", 0}}), UnboundLocation);
}

TEST_CASE("path delay sums distinct hops")
{
    DelayMatrix d(3);
    d.set_symmetric(0, 1, 10);
    d.set_symmetric(1, 2, 20);
    CHECK(path_delay(std::vector<DcId>{0, 0, 1, 1, 2}, d) == 30.0);
    CHECK(path_delay(std::vector<DcId>{0, 0, 0, 0, 0}, full(3, 77)) == 0.0);

    DelayMatrix far(3);
    far.set_symmetric(1, 2, 400);
    far.set_symmetric(2, 0, 400);
    CHECK(path_delay(std::vector<DcId>{1, 2, 2, 2, 0}, far) == 800.0);
}

TEST_CASE("shortest delay path")
{
    DelayMatrix two(2);
    two.set_symmetric(0, 1, 10);
    CHECK(shortest_delay_path(0, 1, two) == std::vector<DcId>{0, 1});

    DelayMatrix tri(3);
    tri.set_symmetric(0, 1, 100);
    tri.set_symmetric(0, 2, 10);
    tri.set_symmetric(2, 1, 10);
    const auto p = shortest_delay_path(0, 1, tri);
    CHECK(p == std::vector<DcId>{0, 2, 1});
    CHECK(path_delay(p, tri) == 20.0);

    auto direct = full(3, 100);
    direct.set_symmetric(0, 1, 5);
    CHECK(shortest_delay_path(0, 1, direct) == std::vector<DcId>{0, 1});
}

TEST_CASE("shortest delay path matches brute force on random meshes")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + rng() % 5;
        DelayMatrix d(n);
        for (DcId a = 0; a < static_cast<DcId>(n); ++a) {
            for (DcId b = 0; b < static_cast<DcId>(n); ++b) {
                if (a != b) {
                    d.set(a, b, static_cast<double>(1 + rng() % 100));
                }
            }
        }
        const DcId e = static_cast<DcId>(rng() % n);
        DcId x = static_cast<DcId>(rng() % n);
        if (x == e) {
            x = (x + 1) % static_cast<DcId>(n);
        }
        std::vector<std::vector<DcId>> all;
        std::vector<DcId> cur{e};
        simple_paths(e, x, n, cur, all);
        double best = std::numeric_limits<double>::infinity();
        double best_bounded = best;
        for (const auto& p : all) {
            best = std::min(best, path_delay(p, d));
            if (p.size() <= 3) {
                best_bounded = std::min(best_bounded, path_delay(p, d));
            }
        }
        const auto got = shortest_delay_path(e, x, d);
        CHECK(got.front() == e);
        CHECK(got.back() == x);
        CHECK(is_loopless(got));
        CHECK(path_delay(got, d) == best);
        const auto bounded = shortest_delay_path_bounded(e, x, d, 3);
        CHECK(bounded.size() <= 3);
        CHECK(path_delay(bounded, d) == best_bounded);
    }
}

TEST_CASE("delay matrix validation")
{
    CHECK_NOTHROW(DelayMatrix::from_rows({{0, 5}, {5, 0}}));
    CHECK_THROWS_AS(DelayMatrix::from_rows({{0, 1, 2}, {1, 0, 2}, {1, 2, 0, 4}}), ConfigError);
    CHECK_THROWS_AS(DelayMatrix::from_rows({{0, -1}, {1, 0}}), ConfigError);
    CHECK_THROWS_AS(DelayMatrix::from_rows({{3, 1}, {1, 0}}), ConfigError);
}

TEST_CASE("collapse and looplessness")
{
    CHECK(collapse_path(std::vector<DcId>{0, 0, 1, 1, 2}) == std::vector<DcId>{0, 1, 2});
    CHECK(is_loopless(std::vector<DcId>{0, 0, 1, 1, 2}));
    CHECK_FALSE(is_loopless(std::vector<DcId>{0, 1, 0, 2}));
    CHECK(is_loopless(std::vector<DcId>{3, 3, 3}));
}
