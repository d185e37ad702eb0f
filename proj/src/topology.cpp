#include "geochain/topology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "geochain/error.hpp"

namespace geochain {

std::size_t SquareMatrix::index(DcId row, DcId col) const
{
    if (row < 0 || col < 0 || static_cast<std::size_t>(row) >= n_ ||
        static_cast<std::size_t>(col) >= n_) {
        throw std::out_of_range("datacenter index out of range");
    }
    return static_cast<std::size_t>(row) * n_ + static_cast<std::size_t>(col);
}

double SquareMatrix::sum() const
{
    return std::accumulate(cells_.begin(), cells_.end(), 0.0);
}

DelayMatrix DelayMatrix::from_rows(const std::vector<std::vector<double>>& rows)
{
    std::vector<std::string> problems;
    const std::size_t n = rows.size();
    if (n == 0) {
        problems.push_back("delays: need at least one datacenter");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) {
            problems.push_back("delays[" + std::to_string(i) + "]: expected " + std::to_string(n) +
                               " columns, got " + std::to_string(rows[i].size()));
            continue;
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double v = rows[i][j];
            const std::string at = "delays[" + std::to_string(i) + "][" + std::to_string(j) + "]";
            if (!std::isfinite(v) || v < 0.0) {
                problems.push_back(at + ": must be finite and >= 0");
            } else if (i == j && v != 0.0) {
                problems.push_back(at + ": diagonal must be 0");
            }
        }
    }
    if (!problems.empty()) {
        throw ConfigError(std::move(problems));
    }
    DelayMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            m.m_(static_cast<DcId>(i), static_cast<DcId>(j)) = rows[i][j];
        }
    }
    return m;
}

void DelayMatrix::set(DcId from, DcId to, double ms)
{
    if (!std::isfinite(ms) || ms < 0.0) {
        throw ContractViolation("delay must be finite and non-negative");
    }
    if (from == to && ms != 0.0) {
        throw ContractViolation("self delay must be 0");
    }
    m_(from, to) = ms;
}

DcId entry_datacenter(const std::string& location_key, const LocationTable& table)
{
    auto it = table.find(location_key);
    if (it == table.end()) {
        throw UnboundLocation(location_key);
    }
    return it->second;
}

double path_delay(std::span<const DcId> path, const DelayMatrix& delays)
{
    double total = 0.0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (path[i] != path[i - 1]) {
            total += delays(path[i - 1], path[i]);
        }
    }
    return total;
}

std::vector<DcId> shortest_delay_path(DcId entry, DcId exit, const DelayMatrix& delays)
{
    const auto n = static_cast<DcId>(delays.size());
    if (entry == exit) {
        throw ContractViolation("shortest_delay_path requires entry != exit");
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    std::vector<DcId> prev(n, -1);
    std::vector<bool> done(n, false);
    dist[entry] = 0.0;
    // n is small, so the O(n^2) array scan beats a heap.
    for (DcId iter = 0; iter < n; ++iter) {
        DcId u = -1;
        for (DcId v = 0; v < n; ++v) {
            if (!done[v] && (u < 0 || dist[v] < dist[u])) {
                u = v;
            }
        }
        if (u < 0 || dist[u] == inf) {
            break;
        }
        done[u] = true;
        if (u == exit) {
            break;
        }
        for (DcId v = 0; v < n; ++v) {
            if (done[v] || v == u) {
                continue;
            }
            const double cand = dist[u] + delays(u, v);
            if (cand < dist[v]) {
                dist[v] = cand;
                prev[v] = u;
            }
        }
    }
    std::vector<DcId> path;
    for (DcId v = exit; v >= 0; v = prev[v]) {
        path.push_back(v);
        if (v == entry) {
            break;
        }
    }
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<DcId> shortest_delay_path_bounded(DcId entry, DcId exit, const DelayMatrix& delays,
                                              std::size_t max_nodes)
{
    const auto n = static_cast<DcId>(delays.size());
    if (max_nodes < 2 || entry == exit) {
        return {};
    }
    // Exhaustive DFS over simple paths; n is small and the node budget is tiny.
    std::vector<DcId> best;
    double best_delay = std::numeric_limits<double>::infinity();
    std::vector<DcId> stack{entry};
    std::vector<bool> used(n, false);
    used[entry] = true;

    auto dfs = [&](auto&& self, double acc) -> void {
        const DcId u = stack.back();
        if (u == exit) {
            if (acc < best_delay) {
                best_delay = acc;
                best = stack;
            }
            return;
        }
        if (stack.size() >= max_nodes) {
            return;
        }
        for (DcId v = 0; v < n; ++v) {
            if (used[v]) {
                continue;
            }
            const double next = acc + delays(u, v);
            if (next >= best_delay) {
                continue;
            }
            used[v] = true;
            stack.push_back(v);
            self(self, next);
            stack.pop_back();
            used[v] = false;
        }
    };
    dfs(dfs, 0.0);
    return best;
}

std::vector<DcId> collapse_path(std::span<const DcId> path)
{
    std::vector<DcId> out;
    for (DcId d : path) {
        if (out.empty() || out.back() != d) {
            out.push_back(d);
        }
    }
    return out;
}

bool is_loopless(std::span<const DcId> path)
{
    const auto c = collapse_path(path);
    std::set<DcId> seen(c.begin(), c.end());
    return seen.size() == c.size();
}

} // namespace geochain
