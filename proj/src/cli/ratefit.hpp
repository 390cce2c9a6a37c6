#pragma once

#include <stdexcept>
#include <vector>

namespace homlab {

/// Least-squares fit of log(value) against log(radius).
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::vector<double> radii;
    std::vector<double> values;
};

/// Fits log v = slope * log r + intercept. Needs >= 3 points, all positive.
RateFit fit_rate(const std::vector<double>& radii, const std::vector<double>& values);

} // namespace homlab
