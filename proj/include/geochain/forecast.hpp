#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <vector>

#include "geochain/topology.hpp"

namespace geochain {

struct ForecastParams {
    std::size_t window = 10; // intervals of history kept
    double phi_min = 0.0;
    double phi_max = 1.0;
};

// Per-interval averages, newest last, at most `window` values.
class SampleSeries {
public:
    explicit SampleSeries(std::size_t window = 10);

    // Negative values are clamped to 0.
    void push(double value);

    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    std::size_t window() const { return window_; }
    double back() const { return values_.back(); }
    std::vector<double> values() const { return {values_.begin(), values_.end()}; }

private:
    std::size_t window_;
    std::deque<double> values_;
};

// Lag-1 sample autocorrelation. 0 for fewer than 3 samples or zero variance.
double lag1_autocorrelation(std::span<const double> xs);

// AR(1) one-step forecast: mu + phi * (u_t - mu), clamped at 0. mu is the window
// mean and phi the lag-1 autocorrelation of the window clipped to
// [phi_min, phi_max]. Throws InsufficientHistory on an empty series.
double predict_next(const SampleSeries& series, double u_t, const ForecastParams& params = {});

// Element-wise predict_next. `histories` is row-major n*n.
SquareMatrix predict_matrix(std::span<const SampleSeries> histories, const SquareMatrix& current,
                            const ForecastParams& params = {});

} // namespace geochain
