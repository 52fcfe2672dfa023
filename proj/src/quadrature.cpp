#include "eflab/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace eflab {

namespace {

// 15-point Kronrod nodes/weights on [-1,1] with embedded 7-point Gauss.
const double kXgk[8] = {0.991455371120813, 0.949107912342759, 0.864864423359769,
                        0.741531185599394, 0.586087235467691, 0.405845151377397,
                        0.207784955007898, 0.000000000000000};
const double kWgk[8] = {0.022935322010529, 0.063092092629979, 0.104790010322250,
                        0.140653259715525, 0.169004726639267, 0.190350578064785,
                        0.204432940075298, 0.209482141084728};
const double kWg[4] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                       0.417959183673469};

void gk15(const std::function<double(double)>& f, double a, double b, double& resk,
          double& err) {
    const double c = 0.5 * (a + b), hl = 0.5 * (b - a);
    const double fc = f(c);
    double rg = fc * kWg[3];
    double rk = fc * kWgk[7];
    for (int j = 0; j < 7; ++j) {
        const double x = hl * kXgk[j];
        const double f1 = f(c - x), f2 = f(c + x);
        rk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
    }
    resk = rk * hl;
    err = std::abs((rk - rg) * hl);
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol,
             int depth, int max_depth) {
    double r, e;
    gk15(f, a, b, r, e);
    if (e <= tol || depth >= max_depth) return r;
    const double c = 0.5 * (a + b);
    return adapt(f, a, c, 0.5 * tol, depth + 1, max_depth) +
           adapt(f, c, b, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol, double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    double r, e;
    gk15(f, a, b, r, e);
    const double tol = std::max(abs_tol, rel_tol * std::abs(r));
    if (e <= tol) return r;
    const double c = 0.5 * (a + b);
    return adapt(f, a, c, 0.5 * tol, 1, max_depth) +
           adapt(f, c, b, 0.5 * tol, 1, max_depth);
}

}  // namespace eflab
