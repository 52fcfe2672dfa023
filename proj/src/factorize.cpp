#include "eflab/factorize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eflab::factorize {

using symbols::ScalarField;
using symbols::SymbolExpansion;

namespace {

void enumerate_multi(int n, int total, std::vector<int>& cur,
                     const std::function<void(const std::vector<int>&)>& fn) {
    if (static_cast<int>(cur.size()) == n - 1) {
        cur.push_back(total);
        fn(cur);
        cur.pop_back();
        return;
    }
    for (int k = 0; k <= total; ++k) {
        cur.push_back(k);
        enumerate_multi(n, total - k, cur, fn);
        cur.pop_back();
    }
}

double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

ScalarField iter_d(ScalarField f, symbols::Var v, const std::vector<int>& alpha) {
    for (size_t k = 0; k < alpha.size(); ++k)
        for (int r = 0; r < alpha[k]; ++r) f = f.derivative(v, static_cast<int>(k));
    return f;
}

}  // namespace

FactorizationResult factor_symbols(const SymbolExpansion& q, const ScalarField& B,
                                   int K) {
    if (K < 0) throw std::invalid_argument("factor_symbols: negative order");
    if (!q.region) throw std::invalid_argument("factor_symbols: q needs a declared region");
    const int n = static_cast<int>(q.region->lo.size()) / 2;

    // sampled ellipticity of the reference factor: B >= c0 > 0
    PhaseGrid g{*q.region, std::vector<int>(2 * n, 9)};
    double c0 = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < g.size(); ++i) {
        const double b = B(g.point(i)).real();
        c0 = std::min(c0, b);
    }
    if (!(c0 > 0.0))
        throw std::runtime_error("factor_symbols: B is not bounded below by c0 > 0");

    ScalarField den = symbols::xi_coord(n - 1) - Complex(0.0, 1.0) * B;

    FactorizationResult out;
    out.B = B;
    out.c0 = c0;
    out.a.order_m = q.order_m;
    out.a.region = q.region;
    out.a.terms.push_back(q.principal() / den);

    for (int m = 1; m <= K; ++m) {
        ScalarField rhs = (m <= q.top_index()) ? q.terms[m] : symbols::constant(0.0);
        for (int l = 1; l <= m; ++l) {
            const Complex pref =
                Complex(0.0, 1.0) * std::pow(Complex(0.0, -1.0), l);
            std::vector<int> cur;
            enumerate_multi(n, l, cur, [&](const std::vector<int>& alpha) {
                double fact = 1.0;
                for (int e : alpha) fact *= factorial(e);
                ScalarField da = iter_d(out.a.terms[m - l], symbols::Var::Xi, alpha);
                ScalarField dB = iter_d(B, symbols::Var::Y, alpha);
                rhs = rhs + (pref / fact) * (da * dB);
            });
        }
        out.a.terms.push_back(rhs / den);
    }
    return out;
}

SymbolExpansion left_parametrix(const SymbolExpansion& a, int K,
                                const PhaseGrid& margin_grid, double xi_tail) {
    const double margin = symbols::ellipticity_margin(a, margin_grid, xi_tail);
    if (!(margin > 1e-12))
        throw std::runtime_error("left_parametrix: principal symbol not elliptic");

    // l_0 = 1/a_0; l_{k} fixes the h^k term of l # a = 1.
    const int n = a.region ? static_cast<int>(a.region->lo.size()) / 2 : 1;
    SymbolExpansion l;
    l.order_m = -a.order_m;
    l.region = a.region;
    ScalarField inv = symbols::constant(1.0) / a.principal();
    l.terms.push_back(inv);
    for (int m = 1; m <= K; ++m) {
        // residual term of order m from the truncated composition
        ScalarField rm = symbols::constant(0.0);
        for (int j = 0; j < m; ++j) {
            for (int k = 0; k <= std::min(m - j, a.top_index()); ++k) {
                const int ord = m - j - k;
                if (ord == 0 && k == 0) continue;  // the diagonal l_m a_0 term
                Complex pref = std::pow(Complex(0.0, -1.0), ord);
                std::vector<int> cur;
                enumerate_multi(n, ord, cur, [&](const std::vector<int>& alpha) {
                    double fact = 1.0;
                    for (int e : alpha) fact *= factorial(e);
                    ScalarField dl = iter_d(l.terms[j], symbols::Var::Xi, alpha);
                    ScalarField da = iter_d(a.terms[k], symbols::Var::Y, alpha);
                    rm = rm + (pref / fact) * (dl * da);
                });
            }
        }
        l.terms.push_back((symbols::constant(0.0) - rm) * inv);
    }
    return l;
}

namespace {

// dense semidiscrete application of a truncated expansion on a 1D grid,
// maximized over a seeded pool shared with the other fits
struct Pool {
    std::vector<std::vector<Complex>> functions;
};

Pool make_pool(const microlocal::PeriodicGrid& g, const Func1D& chi1,
               const ResidualFitOptions& o, double h) {
    Pool pool;
    Rng rng(o.seed, "residual-pool");
    for (int t = 0; t < o.num_test_functions; ++t) {
        const double x0 = rng.uniform(o.envelope_center_lo, o.envelope_center_hi);
        const double s0 = rng.uniform(o.envelope_width_lo, o.envelope_width_hi);
        const double xi0 = rng.uniform(-o.max_momentum, o.max_momentum);
        std::vector<Complex> u(g.n);
        for (int i = 0; i < g.n; ++i) {
            const double x = g.x(i);
            const double env = std::exp(-(x - x0) * (x - x0) / (2.0 * s0 * s0));
            const double phase = xi0 * x / h;
            u[i] = chi1(x) * env * Complex(std::cos(phase), std::sin(phase));
        }
        pool.functions.push_back(std::move(u));
    }
    return pool;
}

}  // namespace

ResidualFit residual_order_fit(const SymbolExpansion& q, const FactorizationResult& fact,
                               const Func1D& chi1, const Func1D& chi2,
                               const std::vector<double>& h_list,
                               const ResidualFitOptions& opts) {
    ResidualFit out;
    const int N = opts.grid_points;
    microlocal::PeriodicGrid g{N, opts.domain_length};

    symbols::FieldEvaluator evq, eva;
    for (double h : h_list) {
        // resolution guard: the pool oscillates at |xi| <= max_momentum
        const double need = 2.0 * M_PI * h / (8.0 * opts.max_momentum);
        if (g.dx() > need)
            throw std::runtime_error("residual_order_fit: grid does not resolve h");

        Pool pool = make_pool(g, chi1, opts, h);
        std::vector<std::vector<Complex>> uhat;
        std::vector<std::vector<Complex>> vhat;  // transform of (hD - iB) chi1 u
        std::vector<double> unorm;
        for (auto& u : pool.functions) {
            auto uh = microlocal::fft(u);
            std::vector<Complex> du(N);
            for (int k = 0; k < N; ++k) du[k] = uh[k] * g.momentum(k, h);
            auto dux = microlocal::ifft(du);
            std::vector<Complex> w(N);
            for (int i = 0; i < N; ++i) {
                const PhasePoint p = PhasePoint::dim1(g.x(i), 0.0);
                const Complex Bv = fact.B(p);
                w[i] = dux[i] - Complex(0.0, 1.0) * Bv * u[i];
            }
            uhat.push_back(std::move(uh));
            vhat.push_back(microlocal::fft(w));
            double s = 0.0;
            for (auto& z : u) s += std::norm(z);
            unorm.push_back(std::sqrt(s * g.dx()));
        }

        const int T = static_cast<int>(pool.functions.size());
        std::vector<double> res2(T, 0.0);
        std::vector<Complex> rowq(N), rowa(N), phase(N);
        for (int i = 0; i < N; ++i) {
            const double x = g.x(i);
            // total symbols along this row
            for (int k = 0; k < N; ++k) {
                const PhasePoint p = PhasePoint::dim1(x, g.momentum(k, h));
                Complex tq = 0.0, ta = 0.0;
                double hp = 1.0;
                for (size_t j = 0; j < q.terms.size(); ++j) {
                    tq += hp * evq.eval(q.terms[j], p);
                    hp *= h;
                }
                hp = 1.0;
                for (size_t j = 0; j < fact.a.terms.size(); ++j) {
                    ta += hp * eva.eval(fact.a.terms[j], p);
                    hp *= h;
                }
                rowq[k] = tq;
                rowa[k] = ta;
                const double ph = 2.0 * M_PI * double(g.wavenumber(k)) * double(i) /
                                  double(N);
                phase[k] = Complex(std::cos(ph), std::sin(ph));
            }
            const double c2 = chi2(x);
            if (c2 == 0.0) continue;
            for (int t = 0; t < T; ++t) {
                Complex acc = 0.0;
                for (int k = 0; k < N; ++k)
                    acc += (rowq[k] * uhat[t][k] - rowa[k] * vhat[t][k]) * phase[k];
                acc /= double(N);
                res2[t] += std::norm(c2 * acc) * g.dx();
            }
        }
        double worst = 0.0;
        for (int t = 0; t < T; ++t)
            worst = std::max(worst, std::sqrt(res2[t]) / unorm[t]);
        out.trace.emplace_back(h, worst);
    }
    std::vector<double> hs, rs;
    for (auto& [h, r] : out.trace) {
        hs.push_back(h);
        rs.push_back(std::max(r, 1e-300));
    }
    out.fit = loglog_slope(hs, rs);
    return out;
}

double TubeFunction::norm() const {
    double s = 0.0;
    for (int i = 0; i < n_prime; ++i)
        for (int j = 0; j < n_normal; ++j) {
            const double wj = (j == 0 || j == n_normal - 1) ? 0.5 : 1.0;
            s += wj * std::norm(at(i, j));
        }
    return std::sqrt(s * dxn() / n_prime);
}

TubeFunction make_tube(int n_prime, int n_normal, double xn_lo, double xn_hi, double h) {
    TubeFunction t;
    t.n_prime = n_prime;
    t.n_normal = n_normal;
    t.xn_lo = xn_lo;
    t.xn_hi = xn_hi;
    t.h = h;
    t.v.assign(size_t(n_prime) * n_normal, Complex(0.0, 0.0));
    return t;
}

TubeFunction apply_propagator(const TubeFunction& f, double B0, double h) {
    if (!(B0 > 0.0)) throw std::invalid_argument("apply_propagator: B0 must be positive");
    if (std::abs(f.xn_lo) > 1e-14)
        throw std::invalid_argument("apply_propagator: tube must start at x_n = 0");
    TubeFunction out = make_tube(f.n_prime, f.n_normal, f.xn_lo, f.xn_hi, h);
    const double d = f.dxn();
    const double mu = B0 * d / h;
    const double e = std::exp(-mu);
    // exact kernel integrals against the linear interpolant of f on each cell:
    //   w0 = int_0^d e^{-(d-s)B0/h} (1 - s/d) ds,  w1 = same with s/d
    const double em1 = -std::expm1(-mu);  // 1 - e^{-mu}
    const double w1 = (h / B0) * (1.0 - em1 / mu);
    const double w0 = (h / B0) * (em1 / mu - e);
    const Complex pref(0.0, -1.0 / h);
    for (int i = 0; i < f.n_prime; ++i) {
        Complex acc(0.0, 0.0);
        out.at(i, 0) = 0.0;  // gamma_H E f = 0 exactly
        for (int j = 1; j < f.n_normal; ++j) {
            acc = e * acc + pref * (w0 * f.at(i, j - 1) + w1 * f.at(i, j));
            out.at(i, j) = acc;
        }
    }
    return out;
}

namespace {
// (h/i) d/dx_n with second-order one-sided stencils at the tube edges
std::vector<Complex> hDn_column(const TubeFunction& v, int i, double h) {
    const int m = v.n_normal;
    const double d = v.dxn();
    std::vector<Complex> out(m);
    const Complex c = Complex(0.0, -h);  // h/i = -i h
    for (int j = 0; j < m; ++j) {
        Complex dv;
        if (j == 0)
            dv = (-3.0 * v.at(i, 0) + 4.0 * v.at(i, 1) - v.at(i, 2)) / (2.0 * d);
        else if (j == m - 1)
            dv = (3.0 * v.at(i, m - 1) - 4.0 * v.at(i, m - 2) + v.at(i, m - 3)) /
                 (2.0 * d);
        else
            dv = (v.at(i, j + 1) - v.at(i, j - 1)) / (2.0 * d);
        out[j] = c * dv;
    }
    return out;
}
}  // namespace

double transport_identity_check(const TubeFunction& v, double B0, double h) {
    const int m = v.n_normal;
    if (m < 5) throw std::invalid_argument("transport_identity_check: tube too short");
    const double d = v.dxn();

    // slice quantities
    std::vector<double> N(m, 0.0), D(m, 0.0);
    for (int i = 0; i < v.n_prime; ++i) {
        auto dv = hDn_column(v, i, h);
        for (int j = 0; j < m; ++j) {
            const Complex vij = v.at(i, j);
            N[j] += std::norm(vij);
            const Complex rho = dv[j] - Complex(0.0, B0) * vij;
            D[j] += -std::imag(std::conj(vij) * rho);
        }
    }
    const double inv = 1.0 / v.n_prime;
    double nmax = 0.0;
    for (int j = 0; j < m; ++j) {
        N[j] *= inv;
        D[j] *= inv;
        nmax = std::max(nmax, N[j]);
    }
    if (nmax == 0.0) return 0.0;

    double worst = 0.0;
    for (int j = 1; j + 1 < m; ++j) {
        const double dN = (N[j + 1] - N[j - 1]) / (2.0 * d);
        const double defect = 0.5 * h * dN + B0 * N[j] - D[j];
        worst = std::max(worst, std::abs(defect));
    }
    return worst / nmax;
}

TubeBound tube_to_restriction_bound(const TubeFunction& v, double B0, double eps,
                                    double h, double rel_tol) {
    TubeBound out;
    const double cap = eps / 8.0;
    const double d = v.dxn();
    double trace2 = 0.0;
    for (int i = 0; i < v.n_prime; ++i) trace2 += std::norm(v.at(i, 0));
    trace2 /= v.n_prime;
    out.lhs = h * trace2;

    double mass2 = 0.0;
    for (int i = 0; i < v.n_prime; ++i) {
        for (int j = 0; j < v.n_normal; ++j) {
            const double x = v.xn(j);
            if (x > cap + 1e-15) break;
            const double wj = (j == 0 || x >= cap - d + 1e-15) ? 0.5 : 1.0;
            mass2 += wj * std::norm(v.at(i, j)) * d;
        }
    }
    mass2 /= v.n_prime;
    out.rhs = 2.0 * B0 * mass2;
    out.verdict = out.lhs >= out.rhs - rel_tol * std::max(out.lhs, out.rhs) - 1e-300;
    return out;
}

}  // namespace eflab::factorize
