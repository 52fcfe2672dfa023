#pragma once

#include <functional>

namespace eflab {

// Adaptive Gauss-Kronrod (G7/K15) integration on [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 1e-13, int max_depth = 40);

}  // namespace eflab
