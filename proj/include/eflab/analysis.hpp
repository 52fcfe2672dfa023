#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eflab/cutoffs.hpp"
#include "eflab/fit.hpp"
#include "eflab/microlocal.hpp"
#include "eflab/models.hpp"

namespace eflab::analysis {

// Level-set hypersurface {x = x0} of a 1D/warped base; for the warped surface
// this is the fiber circle over x0. An optional sub-arc keeps only the stated
// angular fraction of the fiber.
struct HypersurfaceSpec {
    double x0 = 0.0;
    double sub_arc_fraction = 1.0;  // (0,1]; 1 = full fiber circle
};

// log of the restriction norm ||u_h||_{L2(H)} (log-domain safe).
// warped: norm^2 = f(x0) |v(x0)|^2 * sub_arc_fraction; 1D: |v(x0)|^2.
double log_restriction_norm(const models::EigenfunctionFamily& fam,
                            const models::FamilyEntry& entry,
                            const HypersurfaceSpec& H);

// log of the tube mass ||u_h||_{L2(U_H(eps))} over {|x - x0| < eps} in the
// base arc metric, weighted measure for warped products.
double log_tube_mass(const models::EigenfunctionFamily& fam,
                     const models::FamilyEntry& entry, const HypersurfaceSpec& H,
                     double eps);

// Agmon distance in the metric (V - E)_+ |dx|^2 from x_from to the allowed
// set {V <= E}; circle domains take the min over both arcs. Integrable
// sqrt singularities at simple turning points are removed by substitution.
double agmon_distance_1d(const Func1D& V, double E, double x_from,
                         const models::Domain1D& domain);

// Base-metric distance from x0 to the estimated support (min over member
// cells; circle domains use arc distance both ways).
double riemannian_distance(const HypersurfaceSpec& H,
                           const microlocal::SupportEstimate& K_hat,
                           const models::Domain1D& domain);
// Distance to a closed interval [lo, hi] (analytic-K override for oracle runs).
double riemannian_distance_interval(const HypersurfaceSpec& H, double lo, double hi,
                                    const models::Domain1D& domain);

struct VerdictSet {
    bool laplace_restriction = false;   // r_H <= d_R + margin
    bool laplace_tube = false;          // r_tube <= d_R + margin
    bool schrodinger_restriction = false;  // r_H <= beta (d_R + margin)
    bool agmon_consistency = false;     // r_H >= d_A - margin
    bool sandwich = false;              // both Schrodinger bounds
    bool tube_le_restriction = false;   // r_tube <= r_H + stderr
};

struct RestrictionReport {
    HypersurfaceSpec H;
    std::vector<double> h;
    std::vector<double> log_restriction;
    std::vector<double> log_tube;
    std::vector<bool> floor_limited;
    RateFit fit_H;
    RateFit fit_tube;
    double d_R = 0.0;
    double d_A = 0.0;
    double beta = 0.0;
    double eps_margin = 0.0;
    double tube_eps = 0.0;
    VerdictSet verdicts;
};

// eps_margin <= 0 selects the default 0.05 * d_A.
RestrictionReport build_restriction_report(
    const models::EigenfunctionFamily& fam, const HypersurfaceSpec& H,
    double tube_eps, double beta, double d_R, double d_A, double eps_margin = 0.0);

// Verdicts recomputable from stored numbers (used by `verify`).
VerdictSet theorem_verdicts(double r_H, double se_H, double r_tube, double se_tube,
                            double d_R, double d_A, double beta, double eps_margin);

}  // namespace eflab::analysis
