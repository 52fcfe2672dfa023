#pragma once

#include <functional>
#include <vector>

#include "eflab/cutoffs.hpp"
#include "eflab/fit.hpp"
#include "eflab/grid.hpp"
#include "eflab/phase_space.hpp"
#include "eflab/rng.hpp"
#include "eflab/scalar_field.hpp"
#include "eflab/symbol_expansion.hpp"

namespace eflab::factorize {

// Symbol-level factorization q ~ a # (xi_n - i B), built term by term:
//   a_0 = q_0 / (xi_n - i B)
//   a_{-m} = (xi_n - i B)^{-1} ( q_{-m}
//            + sum_{1<=l<=m} i (-i)^l sum_{|alpha|=l} (1/alpha!)
//              d_xi^alpha a_{l-m} d_x^alpha B ),   m >= 1.
struct FactorizationResult {
    symbols::SymbolExpansion a;  // a_0 .. a_{-K}
    symbols::ScalarField B;
    double c0 = 0.0;  // sampled lower bound of B over the declared region
    std::vector<std::pair<double, double>> residual_trace;  // (h, residual)
};

// Throws std::runtime_error when B fails a positive sampled lower bound on
// the declared region of q (ellipticity of the reference factor).
FactorizationResult factor_symbols(const symbols::SymbolExpansion& q,
                                   const symbols::ScalarField& B, int K);

// Left parametrix by symbolic Neumann iteration: l # a = 1 + O(h^{K+1}).
// Throws std::runtime_error when a_0 has no positive ellipticity margin on
// the sampled region.
symbols::SymbolExpansion left_parametrix(const symbols::SymbolExpansion& a, int K,
                                         const PhaseGrid& margin_grid,
                                         double xi_tail = 1.0);

// Operator-application oracle for the factorization residual on 1D periodic
// grids: r(h) = max over seeded test functions of
//   || chi2 ( Op(q) - Op(a_K) (h D - i B) ) chi1 u || / || u ||.
// Returns the log-log slope fit together with the per-h trace.
struct ResidualFitOptions {
    int grid_points = 1024;
    int num_test_functions = 12;
    uint64_t seed = 20240601;
    double domain_length = 2.0 * M_PI;
    // test-function pool: Gaussians x plane waves at momenta |xi| <= 2
    double envelope_center_lo = 2.2, envelope_center_hi = 4.1;
    double envelope_width_lo = 0.25, envelope_width_hi = 0.5;
    double max_momentum = 2.0;
};
struct ResidualFit {
    SlopeFit fit;
    std::vector<std::pair<double, double>> trace;  // (h, residual)
};
ResidualFit residual_order_fit(const symbols::SymbolExpansion& q,
                               const FactorizationResult& fact, const Func1D& chi1,
                               const Func1D& chi2, const std::vector<double>& h_list,
                               const ResidualFitOptions& opts = {});

// Samples over a tensor Fermi tube (x', x_n); x_n = 0 is the first normal
// slice (index j = 0), so gamma_H extracts column 0.
struct TubeFunction {
    int n_prime = 1;
    int n_normal = 0;
    double xn_lo = 0.0;
    double xn_hi = 0.0;
    double h = 0.0;
    std::vector<Complex> v;  // row-major: v[i * n_normal + j]

    double dxn() const { return (xn_hi - xn_lo) / (n_normal - 1); }
    double xn(int j) const { return xn_lo + j * dxn(); }
    Complex& at(int i, int j) { return v[size_t(i) * n_normal + j]; }
    Complex at(int i, int j) const { return v[size_t(i) * n_normal + j]; }
    double norm() const;  // L2 over the tube (trapezoid in x_n)
};

TubeFunction make_tube(int n_prime, int n_normal, double xn_lo, double xn_hi, double h);

// (E f)(x', x_n) = -(i/h) int_0^{x_n} e^{-(x_n - t) B0 / h} f(x', t) dt
// by the exponential-integrator rule exact for piecewise-linear data, so the
// trace gamma_H(E f) = 0 holds exactly. Requires B0 > 0 and xn_lo = 0.
TubeFunction apply_propagator(const TubeFunction& Rprime_f, double B0, double h);

// max over interior x_n slices of
//   | (h/2) d/dx_n N + B0 N - D |,  N(x_n) = ||gamma_{H_{x_n}} v||^2,
//   D(x_n) = -Im int v conj (h D_n - i B0) v dsigma
// normalized by max N. For kernels of (h D_n - i B0) the defect sits at the
// discretization floor.
double transport_identity_check(const TubeFunction& v, double B0, double h);

struct TubeBound {
    double lhs = 0.0;  // h ||gamma_H v||^2
    double rhs = 0.0;  // 2 B0 ||v||^2 over the half-tube of width eps/8
    bool verdict = false;
};
TubeBound tube_to_restriction_bound(const TubeFunction& v, double B0, double eps,
                                    double h, double rel_tol = 1e-6);

}  // namespace eflab::factorize
