#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eflab/cutoffs.hpp"
#include "eflab/phase_space.hpp"
#include "eflab/scalar_field.hpp"
#include "eflab/symbol_expansion.hpp"

namespace eflab::carleman {

// Tangential cutoff rho_eps(|y'|): 0 on {|y'| <= 3 eps}, -1 on
// {|y'| >= c_Y/3}, smooth monotone ramp between; the gradient bound
// sup |d rho| <= c holds with c independent of eps.
struct RadialCutoff {
    double eps = 0.0;
    double c_Y = 0.0;

    double value(double r) const;
    double deriv(double r) const;
};

// Throws std::invalid_argument unless 0 < 3 eps < c_Y / 3.
RadialCutoff build_rho(double eps, double c_Y);

// psi(y', y_n) = beta y_n + 2 tau rho_eps(|y'|). tau = 0 yields the pure
// radial weight (rho unused).
struct CarlemanWeight {
    double tau = 0.0;
    double eps = 0.0;
    double c_Y = 0.0;
    double beta = 1.0;
    RadialCutoff rho;

    double psi(const std::vector<double>& y) const;
    // gradient components as fields (exact first derivatives)
    std::vector<symbols::ScalarField> grad_fields(int n) const;
};

CarlemanWeight make_weight(double tau, double eps, double c_Y, double beta = 1.0);

// Principal symbol p = xi_n^2 + a(y',xi') - 2 y_n b(y',xi') + R(y,xi')
// + V(y) - E near a convex geodesic sphere. a, b, R are quadratic forms in
// xi'; built-in constructors carry the exact metric factor for the
// discretized estimate.
struct GeodesicSphereModel {
    int n = 2;
    symbols::ScalarField a;
    symbols::ScalarField b;
    symbols::ScalarField R;
    symbols::ScalarField V;
    double E = 1.0;
    Box chart;
    std::optional<Func1D> metric_factor;  // w(y_n); level-set dual metric w^-2
    std::string name;

    symbols::ScalarField principal_symbol() const;

    static GeodesicSphereModel flat(const Box& chart);
    // Euclidean circle of radius r: b = a/r, R from the exact polar metric.
    static GeodesicSphereModel circle(double r, const Box& chart);
    // sign-flipped curvature contrast (b -> -a/r)
    static GeodesicSphereModel circle_concave(double r, const Box& chart);

    GeodesicSphereModel with_potential(symbols::ScalarField V, double E) const;

    // sampled model invariants: a >= c |xi'|^2, b positive relative to a,
    // |R| <= C y_n^2 |xi'|^2; returns the fitted C for the R bound.
    double validate(unsigned samples = 4096) const;
};

struct ConjugatedSymbol {
    symbols::ScalarField re;
    symbols::ScalarField im;
    symbols::ScalarField p;  // unconjugated principal symbol

    Complex eval(const PhasePoint& pt) const {
        return Complex(re(pt).real(), im(pt).real());
    }
};

// p_psi(y, xi) = p(y, xi + i grad psi); exact for symbols quadratic in xi.
ConjugatedSymbol conjugated_symbol(const GeodesicSphereModel& model,
                                   const CarlemanWeight& w);

struct BracketScan {
    double margin = 0.0;
    PhasePoint witness;
    size_t char_points = 0;
    bool found = false;  // false: no characteristic points in the sample
};

// min of the Poisson bracket {Re p_psi, Im p_psi} over grid samples with
// |p_psi| < char_tol. char_tol <= 0 selects a resolution-aware default
// (10 x min grid spacing x local gradient bound).
BracketScan bracket_margin(const GeodesicSphereModel& model, const CarlemanWeight& w,
                           const PhaseGrid& grid, double char_tol);

// Largest tested tau with positive bracket margin (bisection after doubling
// search). Throws std::runtime_error when the margin is already negative at
// the smallest tau.
struct TauEstimate {
    double tau_Y = 0.0;
    std::vector<std::pair<double, double>> trace;  // (tau, margin), monotone bracketing
};
TauEstimate max_tau_estimate(const GeodesicSphereModel& model,
                             const std::function<CarlemanWeight(double)>& weight_family,
                             const PhaseGrid& grid, double char_tol,
                             double tau_min = 1e-4, double tau_cap = 1.0);

// Axis box in (|y'|, y_n) used for the region bookkeeping.
struct RegionBox {
    double r_lo = 0.0, r_hi = 0.0;   // |y'| band
    double yn_lo = 0.0, yn_hi = 0.0;
    bool contains(double r, double yn) const {
        return r >= r_lo && r <= r_hi && yn >= yn_lo && yn <= yn_hi;
    }
};

struct RegionParams {
    double tau_H = 0.0;
    double eps = 0.0;
    double eps_Y = 0.0;
    double tau_Y = 0.0;
    double c_Y = 0.0;
};

struct RegionPartition {
    RegionParams params;
    RegionBox U_cn, U_bb, U_tr;
    double k_fit = 0.0;  // fitted inclusion constant of U_bb in the H-tube

    bool in_tr_tilde(double r, double yn) const {
        return U_tr.contains(r, yn) && !U_bb.contains(r, yn) && !U_cn.contains(r, yn);
    }
    // chi_eps = chi_Y(y_n) chi_H(y_n) chi_tr(|y'|)
    double chi(double r, double yn) const;
    double chi_dr(double r, double yn) const;
    double chi_dyn(double r, double yn) const;
};

// Throws std::invalid_argument naming the violated inequality.
RegionPartition region_partition(const RegionParams& p);

struct EnvelopeReport {
    bool control_ok = false;     // psi <= y_n on U_cn
    bool transition_ok = false;  // psi <= -9 eps on U_tr-tilde
    bool blackbox_ok = false;    // psi <= tau_H + eps on U_bb
};
EnvelopeReport weight_envelope_report(const CarlemanWeight& w,
                                      const RegionPartition& parts, int samples_per_axis);

// Smallest singular value of the conjugated operator discretized on the
// rectangle {|y'| < c_Y, -2 eps < y_n < tau + 2 eps} (second-order centered
// differences, zero boundary values, columns restricted to grid functions
// supported `buffer` nodes inside). Requires a built-in metric model; 2D only.
struct SigmaMinPoint {
    double h = 0.0;
    double sigma_min = 0.0;
};
std::vector<SigmaMinPoint> discrete_carleman_sigma_min(
    const GeodesicSphereModel& model, const CarlemanWeight& w,
    const std::vector<double>& h_list, int grid_resolution, int buffer = 3);

}  // namespace eflab::carleman
