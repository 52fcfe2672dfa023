#pragma once

#include <complex>
#include <string>
#include <vector>

#include "eflab/cutoffs.hpp"
#include "eflab/phase_space.hpp"

namespace eflab::models {

enum class DomainKind { Circle, IntervalDirichlet };

struct Domain1D {
    DomainKind kind = DomainKind::Circle;
    double a = 0.0;
    double b = 2.0 * M_PI;
    double length() const { return b - a; }
};

struct SchrodingerProblem1D {
    Domain1D domain;
    Func1D V;
    double E_target = 0.0;
    std::vector<double> h_grid;  // strictly decreasing
    int points_per_h = 16;       // dx <= h / points_per_h
    bool richardson = true;      // extrapolate E from two grids
};

// One eigenpair at a fixed h. `log_abs` carries log|v| with forbidden-region
// amplitudes reconstructed through the log-derivative variable w = h v'/v
// (h w' = (V - E) - w^2) where the direct eigenvector is below floor.
struct FamilyEntry {
    double h = 0.0;
    double E = 0.0;
    double lambda_h = 0.0;  // warped fiber momentum m(h) * h
    std::vector<double> x;
    std::vector<Complex> v;
    std::vector<double> log_abs;
    double residual = 0.0;
    double e_drift = 0.0;
    bool reconstructed = false;
};

struct EigenfunctionFamily {
    std::string model;  // "schrodinger1d" | "warped" | "torus"
    Domain1D domain;
    Func1D V_eff;    // effective potential on the base
    Func1D weight;   // measure weight (f^n for warped, 1 otherwise)
    double E_target = 0.0;
    double lambda = 0.0;
    int fiber_dim = 0;
    std::vector<FamilyEntry> entries;
};

struct EigenSolveOptions {
    double window = 0.0;  // 0: default max(0.5, 10 h)
};

// Finite-difference eigenpair nearest E_target by shifted inverse iteration,
// plus the log-amplitude reconstruction. Throws std::runtime_error when the
// grid does not resolve h or no eigenvalue lies within the window.
FamilyEntry solve_1d_eigen(const SchrodingerProblem1D& prob, double h,
                           const EigenSolveOptions& opts = {});

EigenfunctionFamily schrodinger_family(const SchrodingerProblem1D& prob);

struct WarpedProduct {
    Func1D f;               // warp profile, f >= C > 0 on the base circle
    double lambda = 1.0;    // target angular momentum; m(h) = round(lambda/h)
    double base_length = 2.0 * M_PI;
    std::vector<double> h_grid;
    int points_per_h = 16;
    // Restrict the eigensolve to even-parity states about x = 0 and x = L/2
    // (valid for profiles symmetric about both); keeps the restriction probe
    // at the antipode off the odd-parity node line.
    bool even_parity = false;
};

// Base family of -h^2 (v'' + (f'/f) v') + (lambda_h^2/f^2) v = E v,
// self-adjoint in the f-weighted inner product; normalization
// int |v|^2 f dx = 1.
EigenfunctionFamily warped_eigenfamily(const WarpedProduct& wp, double E_target);

// Exact joint eigenfunction of the coordinate momentum operators on the flat
// torus: u = (2 pi)^{-n/2} e^{i<k,x>} sampled on `samples` points per axis
// (n = k.size(); entries store the first-axis trace for n > 1).
FamilyEntry torus_joint_eigen(const std::vector<int>& k, double h, int samples = 512);

// Family with modes k_j(h) = round(xi_j / h) tracking a fixed momentum.
EigenfunctionFamily torus_family(const std::vector<double>& xi_target,
                                 const std::vector<double>& h_grid, int samples = 512);

// Symmetry defect of the assembled warped operator in the f-weighted inner
// product: max over seeded vector pairs of |<u, A v>_w - <A u, v>_w| relative
// to the matrix scale. Divergence-form assembly keeps this at machine level.
double warped_symmetry_defect(const WarpedProduct& wp, double E_target, double h,
                              int pairs = 8);

// Merged log-amplitude reconstruction (exposed for tests): integrates the
// Riccati variable along forbidden intervals of V - E and anchors against the
// direct eigenvector where it is reliable.
std::vector<double> reconstruct_log_abs(const std::vector<double>& x,
                                        const std::vector<double>& abs_v,
                                        const Func1D& V, double E, double h,
                                        DomainKind kind, bool* any_reconstructed);

}  // namespace eflab::models
