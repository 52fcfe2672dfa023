#include "eflab/cutoffs.hpp"

namespace eflab {

namespace {
inline double bump(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
inline double bump_deriv(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }
}  // namespace

double smooth_step(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    const double a = bump(t), b = bump(1.0 - t);
    return a / (a + b);
}

double smooth_step_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double a = bump(t), b = bump(1.0 - t);
    const double da = bump_deriv(t), db = -bump_deriv(1.0 - t);
    const double s = a + b;
    return (da * s - a * (da + db)) / (s * s);
}

double smooth_window(double x, double a, double b, double ramp) {
    return smooth_step((x - a) / ramp) * smooth_step((b - x) / ramp);
}

double smooth_window_deriv(double x, double a, double b, double ramp) {
    const double u = (x - a) / ramp, v = (b - x) / ramp;
    return (smooth_step_deriv(u) * smooth_step(v) -
            smooth_step(u) * smooth_step_deriv(v)) /
           ramp;
}

}  // namespace eflab
