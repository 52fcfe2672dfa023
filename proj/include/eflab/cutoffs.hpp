#pragma once

#include <cmath>
#include <functional>

namespace eflab {

// C-infinity transition built from the standard exp(-1/t) bump:
//   step(t) = 0 for t <= 0, 1 for t >= 1, strictly increasing between.
double smooth_step(double t);
double smooth_step_deriv(double t);

// 1 on [a + ramp, b - ramp], 0 outside (a, b), smooth in between.
double smooth_window(double x, double a, double b, double ramp);
double smooth_window_deriv(double x, double a, double b, double ramp);

// A 1D profile with value and first derivative.
struct Func1D {
    std::function<double(double)> f;
    std::function<double(double)> df;  // may be empty: central differences

    double operator()(double x) const { return f(x); }
    double deriv(double x) const {
        if (df) return df(x);
        const double step = 1e-6 * std::max(1.0, std::abs(x));
        return (f(x + step) - f(x - step)) / (2.0 * step);
    }
};

}  // namespace eflab
