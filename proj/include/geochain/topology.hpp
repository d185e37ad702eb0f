#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace geochain {

// Dense datacenter index in [0, n).
using DcId = int;

// Row-major n x n matrix of doubles. Used for workload (entry -> exit demand)
// and as the storage behind DelayMatrix.
class SquareMatrix {
public:
    SquareMatrix() = default;
    explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), cells_(n * n, fill) {}

    std::size_t size() const { return n_; }

    double& operator()(DcId row, DcId col) { return cells_[index(row, col)]; }
    double operator()(DcId row, DcId col) const { return cells_[index(row, col)]; }

    double sum() const;
    std::span<const double> cells() const { return cells_; }

    bool operator==(const SquareMatrix&) const = default;

private:
    std::size_t index(DcId row, DcId col) const;

    std::size_t n_ = 0;
    std::vector<double> cells_;
};

using WorkloadMatrix = SquareMatrix;

// One-way inter-datacenter delays in milliseconds. Stored fully, so asymmetric
// measurements are representable. Diagonal is always 0.
class DelayMatrix {
public:
    DelayMatrix() = default;
    explicit DelayMatrix(std::size_t n) : m_(n) {}

    // Throws ConfigError unless rows form a square matrix of finite,
    // non-negative values with a zero diagonal.
    static DelayMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t size() const { return m_.size(); }
    double operator()(DcId from, DcId to) const { return m_(from, to); }
    void set(DcId from, DcId to, double ms);
    void set_symmetric(DcId a, DcId b, double ms)
    {
        set(a, b, ms);
        set(b, a, ms);
    }

    const SquareMatrix& matrix() const { return m_; }

private:
    SquareMatrix m_;
};

using LocationTable = std::map<std::string, DcId>;

DcId entry_datacenter(const std::string& location_key, const LocationTable& table);

// Sum of delays between consecutive distinct datacenters of a path.
double path_delay(std::span<const DcId> path, const DelayMatrix& delays);

// Minimum-delay simple datacenter sequence from entry to exit (Dijkstra over the
// full mesh). Ties prefer the lower predecessor index.
std::vector<DcId> shortest_delay_path(DcId entry, DcId exit, const DelayMatrix& delays);

// Minimum-delay simple path that visits at most max_nodes datacenters
// (including entry and exit). Empty when max_nodes < 2.
std::vector<DcId> shortest_delay_path_bounded(DcId entry, DcId exit, const DelayMatrix& delays,
                                              std::size_t max_nodes);

// Path with consecutive duplicate datacenters collapsed: (0,0,1,1,2) -> (0,1,2).
std::vector<DcId> collapse_path(std::span<const DcId> path);

// True when the collapsed path visits no datacenter twice.
bool is_loopless(std::span<const DcId> path);

} // namespace geochain
