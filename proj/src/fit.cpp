#include "eflab/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eflab {

RateFit decay_rate_fit(const std::vector<double>& h,
                       const std::vector<double>& log_values,
                       const std::vector<double>* log_offsets) {
    const size_t n = h.size();
    if (n != log_values.size() || (log_offsets && log_offsets->size() != n))
        throw std::invalid_argument("decay_rate_fit: size mismatch");
    if (n < 3) throw std::invalid_argument("decay_rate_fit: fewer than 3 usable points");

    // y_i = -h_i (log N_i + off_i) = r + c h_i ; weights w_i = 1/h_i^2
    double s00 = 0, s01 = 0, s11 = 0, b0 = 0, b1 = 0;
    std::vector<double> y(n);
    for (size_t i = 0; i < n; ++i) {
        const double off = log_offsets ? (*log_offsets)[i] : 0.0;
        y[i] = -h[i] * (log_values[i] + off);
        const double w = 1.0 / (h[i] * h[i]);
        s00 += w;
        s01 += w * h[i];
        s11 += w * h[i] * h[i];
        b0 += w * y[i];
        b1 += w * h[i] * y[i];
    }
    const double det = s00 * s11 - s01 * s01;
    if (std::abs(det) < 1e-300) throw std::invalid_argument("decay_rate_fit: degenerate design");
    const double r = (s11 * b0 - s01 * b1) / det;
    const double c = (s00 * b1 - s01 * b0) / det;

    double rss = 0, maxres = 0;
    for (size_t i = 0; i < n; ++i) {
        const double res = (y[i] - r - c * h[i]) / h[i];  // whitened residual
        rss += res * res;
        maxres = std::max(maxres, std::abs(y[i] - r - c * h[i]));
    }
    const double dof = std::max<double>(1.0, double(n) - 2.0);
    const double s2 = rss / dof;

    RateFit out;
    out.rate = r;
    out.intercept = c;
    out.stderr_rate = std::sqrt(s2 * s11 / det);
    out.max_residual = maxres;
    out.used_points = static_cast<int>(n);
    return out;
}

RateFit robust_rate_fit(const std::vector<double>& h,
                        const std::vector<double>& log_values) {
    const size_t n = h.size();
    if (n != log_values.size()) throw std::invalid_argument("robust_rate_fit: size mismatch");
    if (n < 3) throw std::invalid_argument("robust_rate_fit: fewer than 3 usable points");

    std::vector<double> pairs;
    for (size_t i = 0; i < n; ++i) {
        const double yi = -h[i] * log_values[i];
        for (size_t j = i + 1; j < n; ++j) {
            if (std::abs(h[j] - h[i]) < 1e-14) continue;
            const double yj = -h[j] * log_values[j];
            pairs.push_back((h[j] * yi - h[i] * yj) / (h[j] - h[i]));
        }
    }
    if (pairs.empty()) throw std::invalid_argument("robust_rate_fit: no usable pairs");

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const size_t m = v.size() / 2;
        return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
    };
    const double r = median(pairs);
    std::vector<double> dev;
    dev.reserve(pairs.size());
    for (double p : pairs) dev.push_back(std::abs(p - r));

    RateFit out;
    out.rate = r;
    out.stderr_rate = 1.4826 * median(dev);
    out.used_points = static_cast<int>(n);
    return out;
}

SlopeFit loglog_slope(const std::vector<double>& h, const std::vector<double>& values) {
    const size_t n = h.size();
    if (n != values.size() || n < 2) throw std::invalid_argument("loglog_slope: bad input");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        const double x = std::log(h[i]), y = std::log(values[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = n * sxx - sx * sx;
    SlopeFit out;
    out.slope = (n * sxy - sx * sy) / det;
    out.intercept = (sy - out.slope * sx) / n;
    double rss = 0;
    for (size_t i = 0; i < n; ++i) {
        const double e = std::log(values[i]) - out.intercept - out.slope * std::log(h[i]);
        rss += e * e;
    }
    const double dof = std::max<double>(1.0, double(n) - 2.0);
    out.stderr_slope = std::sqrt(rss / dof * n / det);
    return out;
}

Extrapolation richardson_extrapolate(const std::vector<double>& h,
                                     const std::vector<double>& values) {
    const size_t n = h.size();
    if (n != values.size() || n == 0)
        throw std::invalid_argument("richardson_extrapolate: bad input");
    // Neville tableau evaluated at h = 0:
    //   T_{i,k} = (h_i T_{i+1,k-1} - h_{i+k} T_{i,k-1}) / (h_i - h_{i+k})
    std::vector<double> t = values;
    double best = t[0];
    double last_corr = 0.0;
    double prev_corr = std::numeric_limits<double>::infinity();
    bool osc = false;
    for (size_t k = 1; k < n; ++k) {
        for (size_t i = 0; i + k < n; ++i) {
            t[i] = (h[i] * t[i + 1] - h[i + k] * t[i]) / (h[i] - h[i + k]);
        }
        last_corr = std::abs(t[0] - best);
        best = t[0];
        if (k > 1 && last_corr > prev_corr * 1.5) osc = true;
        prev_corr = last_corr;
    }
    Extrapolation out;
    out.value = best;
    out.error_estimate = (n == 1) ? 0.0 : last_corr;
    out.oscillatory = osc;
    return out;
}

}  // namespace eflab
