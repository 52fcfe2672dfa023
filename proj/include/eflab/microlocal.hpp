#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eflab/fit.hpp"
#include "eflab/grid.hpp"
#include "eflab/models.hpp"

namespace eflab::microlocal {

// Pairings <Op_h(a) u_h, u_h> across the family's h-grid with a Richardson
// limit toward h -> 0.
struct MicrolocalProbe {
    std::vector<double> h;
    std::vector<Complex> pairings;
    double limit = 0.0;
    double limit_error = 0.0;
    bool convergent = true;
    double max_imag = 0.0;
};

MicrolocalProbe defect_mass(const models::EigenfunctionFamily& fam,
                            const QuantizedSymbol& a);

// Position-space support estimate of the defect measure: per-cell decay rate
// of the local L2 mass fitted across the h-grid, thresholded at r_tol.
struct SupportEstimate {
    double cell_size = 0.0;
    std::vector<double> centers;
    std::vector<double> rate;
    std::vector<double> stderr_rate;
    std::vector<bool> below_floor;
    std::vector<bool> in_K;      // rate <= r_tol and not below floor
    double r_tol = 0.0;

    bool contains(double x) const;
    // K_hat as closed intervals (merged adjoining member cells)
    std::vector<std::pair<double, double>> intervals() const;
};

// r_tol <= 0 selects the default: max(3 * median cell stderr, floor 0.004).
SupportEstimate support_estimate(const models::EigenfunctionFamily& fam,
                                 double cell_size, double r_tol = 0.0);

// Empirical lacunarity certificate: n(h) = ||chi2 Q(h) chi1 u_h||^2 fitted to
// e^{-C/h} (squared-mass convention, matching the restriction-norm fits).
struct LacunarityFit {
    double C = 0.0;
    double intercept = 0.0;
    double stderr_C = 0.0;
    bool floor_limited = false;  // all norms at numerical floor: certified lacunary
    std::vector<double> h;
    std::vector<double> n;
};

// Qapply maps (entry, grid function) -> grid function; identity when null.
using OperatorApplier =
    std::function<GridFn(const models::FamilyEntry&, const GridFn&, double)>;

LacunarityFit lacunarity_fit(const OperatorApplier& Qapply,
                             const models::EigenfunctionFamily& fam,
                             const Func1D& chi1, const Func1D& chi2,
                             std::pair<double, double> chi2_support,
                             const SupportEstimate& K_hat);

}  // namespace eflab::microlocal
