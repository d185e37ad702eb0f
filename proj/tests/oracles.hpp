#pragma once

// Brute-force references used by the unit and acceptance tests. They share no
// code with the planner beyond the plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "geochain/planner.hpp"
#include "geochain/topology.hpp"

namespace oracle {

using geochain::DcId;

inline int shortfall(double demand, double avail, double per_instance)
{
    if (demand <= avail + 1e-9) {
        return 0;
    }
    return static_cast<int>(std::ceil((demand - avail) / per_instance - 1e-9));
}

inline std::vector<DcId> dedupe(const std::vector<DcId>& p)
{
    std::vector<DcId> out;
    for (DcId d : p) {
        if (out.empty() || out.back() != d) {
            out.push_back(d);
        }
    }
    return out;
}

inline int new_instances(const std::vector<DcId>& path, const geochain::StageCapacity& avail,
                         const std::vector<double>& cap, double demand)
{
    int total = 0;
    for (std::size_t j = 1; j + 1 < path.size(); ++j) {
        total += shortfall(demand, avail.at(path[j], static_cast<int>(j)), cap[j - 1]);
    }
    return total;
}

// Minimum new instances over every assignment of m stages to positions of
// dc_path that keeps chain order and whose collapsed path is dc_path itself.
inline std::optional<int> min_placement(const std::vector<DcId>& dc_path, const geochain::StageCapacity& avail,
                                        const std::vector<double>& cap, double demand)
{
    const std::size_t k = dc_path.size();
    const std::size_t m = cap.size();
    std::optional<int> best;
    std::vector<std::size_t> pos(m, 0);
    while (true) {
        if (std::is_sorted(pos.begin(), pos.end())) {
            std::vector<DcId> full{dc_path.front()};
            for (std::size_t p : pos) {
                full.push_back(dc_path[p]);
            }
            full.push_back(dc_path.back());
            if (dedupe(full) == dedupe(dc_path)) {
                const int c = new_instances(full, avail, cap, demand);
                if (!best || c < *best) {
                    best = c;
                }
            }
        }
        std::size_t i = 0;
        while (i < m && ++pos[i] == k) {
            pos[i++] = 0;
        }
        if (i == m) {
            break;
        }
    }
    return best;
}

// Minimum new instances over every loopless (m+2)-datacenter path from entry to
// exit whose delay is within the threshold.
inline std::optional<int> min_path(DcId entry, DcId exit, const geochain::DelayMatrix& delays,
                                   const geochain::StageCapacity& avail, const std::vector<double>& cap,
                                   double demand, double threshold)
{
    const std::size_t n = delays.size();
    const std::size_t m = cap.size();
    std::optional<int> best;
    std::vector<DcId> mid(m, 0);
    while (true) {
        std::vector<DcId> p{entry};
        p.insert(p.end(), mid.begin(), mid.end());
        p.push_back(exit);
        const auto c = dedupe(p);
        std::vector<DcId> sorted = c;
        std::sort(sorted.begin(), sorted.end());
        const bool loopless = std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
        double delay = 0.0;
        for (std::size_t i = 1; i < c.size(); ++i) {
            delay += delays(c[i - 1], c[i]);
        }
        if (loopless && delay <= threshold + 1e-9) {
            const int cost = new_instances(p, avail, cap, demand);
            if (!best || cost < *best) {
                best = cost;
            }
        }
        std::size_t i = 0;
        while (i < m && ++mid[i] == static_cast<DcId>(n)) {
            mid[i++] = 0;
        }
        if (i == m) {
            break;
        }
    }
    return best;
}

} // namespace oracle
