#include "ratefit.hpp"

#include <cmath>

namespace homlab {

RateFit fit_rate(const std::vector<double>& radii, const std::vector<double>& values) {
    if (radii.size() != values.size()) throw std::invalid_argument("fit_rate: size mismatch");
    if (radii.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 points");
    const std::size_t n = radii.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(radii[i] > 0.0) || !(values[i] > 0.0)) throw std::invalid_argument("fit_rate: nonpositive input");
        lx[i] = std::log(radii[i]);
        ly[i] = std::log(values[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    RateFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
    f.radii = radii;
    f.values = values;
    return f;
}

} // namespace homlab
