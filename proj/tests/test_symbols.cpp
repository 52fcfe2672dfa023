#include <doctest.h>

#include <cmath>

#include "eflab/expr_parser.hpp"
#include "eflab/fit.hpp"
#include "eflab/grid.hpp"
#include "eflab/rng.hpp"
#include "eflab/symbol_expansion.hpp"

using namespace eflab;
using namespace eflab::symbols;

namespace {

Box box2d(double y_lo, double y_hi, double xi_lo, double xi_hi) {
    Box b;
    b.lo = {y_lo, y_lo, xi_lo, xi_lo};
    b.hi = {y_hi, y_hi, xi_hi, xi_hi};
    return b;
}

Box box1d(double y_lo, double y_hi, double xi_lo, double xi_hi) {
    Box b;
    b.lo = {y_lo, xi_lo};
    b.hi = {y_hi, xi_hi};
    return b;
}

}  // namespace

TEST_CASE("eval_symbol: constant and direct sums") {
    SymbolExpansion one;
    one.order_m = 0;
    one.terms = {constant(1.0)};
    CHECK(eval_symbol(one, PhasePoint::dim2(0.3, -0.1, 0.7, 2.0), 0.1) ==
          Complex(1.0, 0.0));

    // m = 0, terms (xi_n, 1): eval at xi_n = 2, h = 0.5 -> 2.5
    SymbolExpansion s;
    s.order_m = 0;
    s.terms = {xi_coord(1), constant(1.0)};
    CHECK(eval_symbol(s, PhasePoint::dim2(0, 0, 0, 2.0), 0.5).real() ==
          doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("eval_symbol: quadratic principal symbol by hand") {
    // p = xi_n^2 + a - 2 y_n b + R - 1 with a = 2|xi'|^2, b = |xi'|^2, R = 0
    // at y_n = 0.1, xi' = 1, xi_n = 0:  2 - 0.2 - 1 = 0.8
    ScalarField xp = xi_coord(0), xn = xi_coord(1), yn = y_coord(1);
    ScalarField p = xn * xn + Complex(2.0, 0.0) * xp * xp -
                    Complex(2.0, 0.0) * yn * (xp * xp) - constant(1.0);
    SymbolExpansion s;
    s.order_m = 0;
    s.terms = {p};
    CHECK(eval_symbol(s, PhasePoint::dim2(0.0, 0.1, 1.0, 0.0), 0.1).real() ==
          doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("eval_symbol: domain guard") {
    SymbolExpansion s;
    s.order_m = 0;
    s.terms = {constant(1.0)};
    s.region = box1d(-1, 1, -1, 1);
    CHECK_THROWS_AS(eval_symbol(s, PhasePoint::dim1(2.0, 0.0), 0.1), std::domain_error);
    CHECK_THROWS_AS(eval_symbol(s, PhasePoint::dim1(0.0, 0.0), -0.1), std::domain_error);
}

TEST_CASE("poisson_bracket: canonical pairs and antisymmetry") {
    ScalarField f = xi_coord(0), g = y_coord(0);
    PhasePoint pt = PhasePoint::dim2(0.3, 1.2, -0.4, 0.9);
    CHECK(poisson_bracket(f, g, pt).real() == doctest::Approx(1.0));
    CHECK(poisson_bracket(f, f, pt).real() == doctest::Approx(0.0));

    // {xi_n^2, y_n} = 2 xi_n = 6 at xi_n = 3 (symbolic differentiation oracle)
    ScalarField f2 = xi_coord(1) * xi_coord(1);
    CHECK(poisson_bracket(f2, y_coord(1), PhasePoint::dim2(0, 0, 0, 3.0)).real() ==
          doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("poisson_bracket: antisymmetry and Leibniz on random polynomial symbols") {
    Rng rng(31u, "symbol-props");
    for (int trial = 0; trial < 12; ++trial) {
        auto rnd_poly = [&]() {
            ScalarField acc = constant(rng.uniform(-1, 1));
            for (int t = 0; t < 3; ++t) {
                ScalarField term = constant(rng.uniform(-1, 1));
                for (int d = 0; d < 2; ++d) {
                    const int pick = static_cast<int>(rng.uniform(0, 4));
                    ScalarField c = pick == 0   ? y_coord(0)
                                    : pick == 1 ? y_coord(1)
                                    : pick == 2 ? xi_coord(0)
                                                : xi_coord(1);
                    term = term * c;
                }
                acc = acc + term;
            }
            return acc;
        };
        ScalarField f = rnd_poly(), g = rnd_poly(), k = rnd_poly();
        PhasePoint pt({rng.uniform(-1, 1), rng.uniform(-1, 1)},
                      {rng.uniform(-1, 1), rng.uniform(-1, 1)});
        const Complex fg = poisson_bracket(f, g, pt);
        const Complex gf = poisson_bracket(g, f, pt);
        CHECK(std::abs(fg + gf) < 1e-12 * (1.0 + std::abs(fg)));

        // {f, g k} = {f,g} k + g {f,k}
        const Complex lhs = poisson_bracket(f, g * k, pt);
        const Complex rhs = fg * k(pt) + g(pt) * poisson_bracket(f, k, pt);
        CHECK(std::abs(lhs - rhs) < 1e-8 * (1.0 + std::abs(lhs)));
    }
}

TEST_CASE("finite differences agree with analytic derivatives") {
    // smooth non-polynomial field via lambda (no analytic partials)
    ScalarField f = lambda_field([](const PhasePoint& p) {
        return Complex(std::sin(p.y[0]) * std::exp(0.3 * p.xi[0]), 0.0);
    });
    ScalarField g = sin_field(y_coord(0)) * exp_field(Complex(0.3, 0.0) * xi_coord(0));
    PhasePoint pt = PhasePoint::dim1(0.7, -0.4);
    for (auto v : {Var::Y, Var::Xi}) {
        const Complex fd = f.derivative(v, 0)(pt);
        const Complex an = g.derivative(v, 0)(pt);
        CHECK(std::abs(fd - an) < 1e-6 * (1.0 + std::abs(an)));
    }
}

TEST_CASE("compose: identity symbol and first-order correction") {
    SymbolExpansion a, b;
    a.order_m = b.order_m = 0;
    a.region = box1d(-10, 10, -10, 10);
    b.region = a.region;

    a.terms = {constant(1.0)};
    b.terms = {xi_coord(0) * y_coord(0) + constant(2.0)};
    auto ab = compose(a, b, 2);
    PhasePoint pt = PhasePoint::dim1(0.5, 1.5);
    CHECK(std::abs(eval_symbol(ab, pt, 0.1) - eval_symbol(b, pt, 0.1)) < 1e-13);

    // a = xi, b = y (1D): a # b = y xi - i h
    a.terms = {xi_coord(0)};
    b.terms = {y_coord(0)};
    auto c = compose(a, b, 1);
    const Complex got = eval_symbol(c, pt, 0.25);
    const Complex expect = pt.y[0] * pt.xi[0] - Complex(0, 0.25);
    CHECK(std::abs(got - expect) < 1e-13);
}

TEST_CASE("compose: constant-coefficient factor has no h-corrections") {
    // a = xi - i B0, b = (xi^2+1)/(xi - i B0): y-derivatives of b vanish,
    // so all correction terms are zero and a # b = a b exactly.
    const Complex iB0(0.0, 1.0);
    SymbolExpansion a, b;
    a.order_m = b.order_m = 0;
    a.region = box1d(-5, 5, -5, 5);
    b.region = a.region;
    a.terms = {xi_coord(0) - iB0};
    b.terms = {(xi_coord(0) * xi_coord(0) + constant(1.0)) / (xi_coord(0) - iB0)};
    auto c = compose(a, b, 2);
    PhasePoint pt = PhasePoint::dim1(0.3, 1.7);
    const Complex prod = a.terms[0](pt) * b.terms[0](pt);
    CHECK(std::abs(eval_symbol(c, pt, 0.1) - prod) < 1e-12);
    // order-1 and order-2 terms vanish identically
    CHECK(std::abs(c.terms[1](pt)) < 1e-13);
    CHECK(std::abs(c.terms[2](pt)) < 1e-13);
}

TEST_CASE("compose consistency with the operator product on a periodic grid") {
    // random trig-coefficient polynomial symbols of xi-degree <= 2;
    // || Op(a#b)u - Op(a)Op(b)u || / ||u|| = O(h^{K+1}) via slope fit
    using namespace eflab::microlocal;
    Rng rng(77u, "compose-oracle");

    auto trig = [&]() {
        const double c0 = rng.uniform(-1, 1), c1 = rng.uniform(-1, 1),
                     s1 = rng.uniform(-1, 1);
        return constant(c0) + Complex(c1, 0.0) * cos_field(y_coord(0)) +
               Complex(s1, 0.0) * sin_field(y_coord(0));
    };
    SymbolExpansion a, b;
    a.order_m = b.order_m = 0;
    a.region = box1d(-100, 100, -100, 100);
    b.region = a.region;
    a.terms = {trig() + trig() * xi_coord(0) + trig() * xi_coord(0) * xi_coord(0)};
    b.terms = {trig() + trig() * xi_coord(0) + trig() * xi_coord(0) * xi_coord(0)};

    const int K = 2;
    auto ab = compose(a, b, K);

    PeriodicGrid g{512, 2.0 * M_PI};
    std::vector<double> hs = {0.2, 0.1, 0.05, 0.025};
    std::vector<double> errs;
    FieldEvaluator eva, evb, evc;
    for (double h : hs) {
        GridFn u(g);
        for (int i = 0; i < g.n; ++i) {
            const double x = g.x(i);
            const double ph = 1.3 * x / h;
            u.v[i] = std::exp(-std::pow(std::sin((x - 2.4) / 2.0), 2) * 18.0) *
                     Complex(std::cos(ph), std::sin(ph));
        }
        auto symfn = [&](const SymbolExpansion& s, FieldEvaluator& ev, double hh) {
            return QuantizedSymbol::from_general([&s, &ev, hh](double x, double xi) {
                PhasePoint p = PhasePoint::dim1(x, xi);
                Complex acc = 0.0;
                double hp = 1.0;
                for (const auto& t : s.terms) {
                    acc += hp * ev.eval(t, p);
                    hp *= hh;
                }
                return acc;
            });
        };
        GridFn bu = quantize_apply(symfn(b, evb, h), u, h);
        GridFn abu = quantize_apply(symfn(a, eva, h), bu, h);
        GridFn cu = quantize_apply(symfn(ab, evc, h), u, h);
        double err = 0.0;
        for (int i = 0; i < g.n; ++i) err += std::norm(abu.v[i] - cu.v[i]);
        errs.push_back(std::sqrt(err * g.dx()) / u.norm());
    }
    auto fit = loglog_slope(hs, errs);
    CHECK(fit.slope >= K + 0.7);
}

TEST_CASE("ellipticity_margin") {
    // a_0 = xi_n - i B0, B0 = 1: margin >= 1 on any grid
    SymbolExpansion s;
    s.order_m = 0;
    s.terms = {xi_coord(1) - Complex(0.0, 1.0)};
    PhaseGrid g;
    g.box = box2d(-1, 1, -3, 3);
    g.counts = {5, 5, 21, 21};
    CHECK(ellipticity_margin(s, g, 1.0) >= 1.0 - 1e-12);

    // a_0 = xi_n real on a grid containing xi_n = 0: margin 0
    SymbolExpansion z;
    z.order_m = 0;
    z.terms = {xi_coord(1)};
    CHECK(ellipticity_margin(z, g, 1.0) == doctest::Approx(0.0).epsilon(1e-12));

    // a_0 = (xi_n^2+1)/(xi_n - i) on xi_n in [-10,10]: margin ~ 1
    SymbolExpansion r;
    r.order_m = 0;
    r.terms = {(xi_coord(1) * xi_coord(1) + constant(1.0)) /
               (xi_coord(1) - Complex(0.0, 1.0))};
    PhaseGrid g2;
    g2.box = box2d(-1, 1, -10, 10);
    g2.counts = {1, 1, 1, 2001};
    CHECK(ellipticity_margin(r, g2, 1.0) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("expression parser round-trips the grammar") {
    auto f = expr::parse_field("xi1^2 + 1 - 2*y2*xi1 + cos(y1)/2");
    PhasePoint pt = PhasePoint::dim2(0.4, 0.2, 1.5, -0.3);
    const double expect = 1.5 * 1.5 + 1.0 - 2.0 * 0.2 * 1.5 + std::cos(0.4) / 2.0;
    CHECK(f(pt).real() == doctest::Approx(expect).epsilon(1e-14));

    auto g = expr::parse_field("exp(-x^2) * pow(2 + sin(x), 2)");
    PhasePoint p1 = PhasePoint::dim1(0.7, 0.0);
    CHECK(g(p1).real() ==
          doctest::Approx(std::exp(-0.49) * std::pow(2 + std::sin(0.7), 2)));

    CHECK_THROWS_AS(expr::parse_field("2 +* 3"), std::invalid_argument);
    CHECK_THROWS_AS(expr::parse_field("unknown_fn(3)"), std::invalid_argument);
}
