#include "geochain/forecast.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "geochain/error.hpp"

namespace geochain {

SampleSeries::SampleSeries(std::size_t window) : window_(window)
{
    if (window_ == 0) {
        throw ContractViolation("forecast window must be >= 1");
    }
}

void SampleSeries::push(double value)
{
    values_.push_back(std::max(0.0, value));
    while (values_.size() > window_) {
        values_.pop_front();
    }
}

double lag1_autocorrelation(std::span<const double> xs)
{
    if (xs.size() < 3) {
        return 0.0;
    }
    const double mu = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double den = 0.0;
    double num = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - mu;
        den += d * d;
        if (i + 1 < xs.size()) {
            num += d * (xs[i + 1] - mu);
        }
    }
    if (den <= 0.0) {
        return 0.0;
    }
    return num / den;
}

double predict_next(const SampleSeries& series, double u_t, const ForecastParams& params)
{
    if (series.empty()) {
        throw InsufficientHistory("insufficient history");
    }
    const auto xs = series.values();
    // Mean taken relative to the first value, so a constant window yields it exactly.
    double shift = 0.0;
    for (double x : xs) {
        shift += x - xs.front();
    }
    const double mu = xs.front() + shift / static_cast<double>(xs.size());
    double phi = 0.0;
    if (xs.size() >= 3) {
        phi = std::clamp(lag1_autocorrelation(xs), params.phi_min, params.phi_max);
    }
    return std::max(0.0, mu + phi * (u_t - mu));
}

SquareMatrix predict_matrix(std::span<const SampleSeries> histories, const SquareMatrix& current,
                            const ForecastParams& params)
{
    const std::size_t n = current.size();
    if (histories.size() != n * n) {
        throw ContractViolation("predict_matrix: dimension mismatch (" +
                                std::to_string(histories.size()) + " histories for " +
                                std::to_string(n) + "x" + std::to_string(n) + " matrix)");
    }
    SquareMatrix out(n);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const auto& h = histories[r * n + c];
            const auto row = static_cast<DcId>(r);
            const auto col = static_cast<DcId>(c);
            if (h.empty()) {
                throw InsufficientHistory("insufficient history at cell (" + std::to_string(r) +
                                          "," + std::to_string(c) + ")");
            }
            out(row, col) = predict_next(h, current(row, col), params);
        }
    }
    return out;
}

} // namespace geochain
