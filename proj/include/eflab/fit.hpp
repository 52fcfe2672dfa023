#pragma once

#include <optional>
#include <vector>

namespace eflab {

struct RateFit {
    double rate = 0.0;       // r in  -h log N(h) = r + c h
    double intercept = 0.0;  // c
    double stderr_rate = 0.0;
    double max_residual = 0.0;
    int used_points = 0;
};

// Weighted least squares of -h log N(h) against r + c h, weights 1/h^2
// (equal noise on log N). Floor-limited samples must be removed by the
// caller; fewer than 3 usable points throws std::invalid_argument.
// `log_offsets`, when provided, is added to log N(h) before fitting.
RateFit decay_rate_fit(const std::vector<double>& h,
                       const std::vector<double>& log_values,
                       const std::vector<double>* log_offsets = nullptr);

// Robust variant: median over pairs (i,j) of the two-point solutions
//   r_ij = (h_j y_i - h_i y_j) / (h_j - h_i),  y = -h log N.
// Spread estimate is 1.4826 * MAD of the pairwise values. Resistant to
// oscillatory contamination of individual samples.
RateFit robust_rate_fit(const std::vector<double>& h,
                        const std::vector<double>& log_values);

// Least-squares slope of log v against log h.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double stderr_slope = 0.0;
};
SlopeFit loglog_slope(const std::vector<double>& h, const std::vector<double>& values);

// Polynomial Richardson extrapolation of samples (h_i, v_i) to h -> 0
// (Neville tableau). error_estimate is the magnitude of the last correction;
// `oscillatory` is set when successive column corrections fail to shrink.
struct Extrapolation {
    double value = 0.0;
    double error_estimate = 0.0;
    bool oscillatory = false;
};
Extrapolation richardson_extrapolate(const std::vector<double>& h,
                                     const std::vector<double>& values);

}  // namespace eflab
