#include "eflab/symbol_expansion.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace eflab::symbols {

Complex eval_symbol(const SymbolExpansion& sym, const PhasePoint& pt, double h) {
    if (!(h > 0.0)) throw std::domain_error("eval_symbol: h must be positive");
    if (sym.region && !sym.region->contains(pt))
        throw std::domain_error("eval_symbol: point outside declared region");
    Complex acc = 0.0;
    double hp = 1.0;
    for (const auto& t : sym.terms) {
        acc += hp * t(pt);
        hp *= h;
    }
    return acc * std::pow(h, -sym.order_m);
}

Complex poisson_bracket(const ScalarField& f, const ScalarField& g,
                        const PhasePoint& pt) {
    const int n = pt.dim();
    Complex acc = 0.0;
    for (int k = 0; k < n; ++k) {
        acc += f.d_xi(k)(pt) * g.d_y(k)(pt) - f.d_y(k)(pt) * g.d_xi(k)(pt);
    }
    return acc;
}

namespace {

// Enumerate multi-indices alpha over n slots with |alpha| = total.
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

ScalarField iter_derivative(ScalarField f, Var v, const std::vector<int>& alpha) {
    for (size_t k = 0; k < alpha.size(); ++k)
        for (int r = 0; r < alpha[k]; ++r) f = f.derivative(v, static_cast<int>(k));
    return f;
}

}  // namespace

SymbolExpansion compose(const SymbolExpansion& a, const SymbolExpansion& b, int K) {
    int n = -1;
    if (a.region) n = static_cast<int>(a.region->lo.size()) / 2;
    if (n < 0 && b.region) n = static_cast<int>(b.region->lo.size()) / 2;
    if (n < 0) throw std::invalid_argument("compose: no declared region to infer dimension");
    return compose(a, b, K, n);
}

SymbolExpansion compose(const SymbolExpansion& a, const SymbolExpansion& b, int K,
                        int n) {
    if (K < 0) throw std::invalid_argument("compose: negative truncation order");

    SymbolExpansion out;
    out.order_m = a.order_m + b.order_m;
    out.region = a.region ? a.region : b.region;

    const int Ja = a.top_index(), Jb = b.top_index();
    for (int l = 0; l <= K; ++l) {
        ScalarField cl = constant(0.0);
        bool any = false;
        for (int j = 0; j <= std::min(l, Ja); ++j) {
            for (int k = 0; k <= std::min(l - j, Jb); ++k) {
                const int ord = l - j - k;
                Complex pref = std::pow(Complex(0.0, -1.0), ord);
                std::vector<int> cur;
                enumerate_multi(n, ord, cur, [&](const std::vector<int>& alpha) {
                    double fact = 1.0;
                    for (int e : alpha) fact *= factorial(e);
                    ScalarField da = iter_derivative(a.terms[j], Var::Xi, alpha);
                    ScalarField db = iter_derivative(b.terms[k], Var::Y, alpha);
                    ScalarField term = (pref / fact) * (da * db);
                    cl = any ? cl + term : term;
                    any = true;
                });
            }
        }
        out.terms.push_back(any ? cl : constant(0.0));
    }
    return out;
}

double ellipticity_margin(const SymbolExpansion& sym, const PhaseGrid& grid,
                          double xi_tail) {
    if (grid.size() == 0) throw std::invalid_argument("ellipticity_margin: empty grid");
    const ScalarField& a0 = sym.principal();
    double margin = std::numeric_limits<double>::infinity();
    const size_t total = grid.size();
    for (size_t idx = 0; idx < total; ++idx) {
        PhasePoint p = grid.point(idx);
        margin = std::min(margin, std::abs(a0(p)));
        if (xi_tail > 1.0) {
            // asymptotic check: rescale xi outward toward the tail radius
            PhasePoint q = p;
            for (double s : {0.25, 0.5, 1.0}) {
                for (int k = 0; k < q.dim(); ++k) q.xi[k] = p.xi[k] * (1.0 + s * (xi_tail - 1.0));
                margin = std::min(margin, std::abs(a0(q)));
            }
        }
    }
    return margin;
}

}  // namespace eflab::symbols
