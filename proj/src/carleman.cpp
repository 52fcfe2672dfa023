#include "eflab/carleman.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <thread>

#include "eflab/rng.hpp"

namespace eflab::carleman {

using symbols::ScalarField;

int worker_count() {
    if (const char* env = std::getenv("EFLAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

double RadialCutoff::value(double r) const {
    const double ramp = c_Y / 3.0 - 3.0 * eps;
    return -smooth_step((r - 3.0 * eps) / ramp);
}

double RadialCutoff::deriv(double r) const {
    const double ramp = c_Y / 3.0 - 3.0 * eps;
    return -smooth_step_deriv((r - 3.0 * eps) / ramp) / ramp;
}

RadialCutoff build_rho(double eps, double c_Y) {
    if (!(eps > 0.0) || !(3.0 * eps < c_Y / 3.0))
        throw std::invalid_argument("build_rho: need 0 < 3 eps < c_Y / 3");
    return RadialCutoff{eps, c_Y};
}

double CarlemanWeight::psi(const std::vector<double>& y) const {
    const int n = static_cast<int>(y.size());
    double r2 = 0.0;
    for (int k = 0; k + 1 < n; ++k) r2 += y[k] * y[k];
    const double rho_v = tau != 0.0 ? rho.value(std::sqrt(r2)) : 0.0;
    return beta * y[n - 1] + 2.0 * tau * rho_v;
}

std::vector<ScalarField> CarlemanWeight::grad_fields(int n) const {
    std::vector<ScalarField> g;
    for (int k = 0; k + 1 < n; ++k) {
        if (tau == 0.0) {
            g.push_back(symbols::constant(0.0));
            continue;
        }
        RadialCutoff rc = rho;
        const double t = tau;
        g.push_back(symbols::lambda_field([rc, t, k, n](const PhasePoint& p) {
            double r2 = 0.0;
            for (int j = 0; j + 1 < n; ++j) r2 += p.y[j] * p.y[j];
            const double r = std::sqrt(r2);
            if (r < 1e-14) return Complex(0.0, 0.0);
            return Complex(2.0 * t * rc.deriv(r) * p.y[k] / r, 0.0);
        }));
    }
    g.push_back(symbols::constant(beta));
    return g;
}

CarlemanWeight make_weight(double tau, double eps, double c_Y, double beta) {
    CarlemanWeight w;
    w.tau = tau;
    w.eps = eps;
    w.c_Y = c_Y;
    w.beta = beta;
    if (tau != 0.0) w.rho = build_rho(eps, c_Y);
    return w;
}

ScalarField GeodesicSphereModel::principal_symbol() const {
    ScalarField xin = symbols::xi_coord(n - 1);
    ScalarField yn = symbols::y_coord(n - 1);
    return xin * xin + a - Complex(2.0, 0.0) * yn * b + R + V -
           symbols::constant(E);
}

namespace {
ScalarField xi_prime_sq(int n) {
    ScalarField s = symbols::constant(0.0);
    for (int k = 0; k + 1 < n; ++k) {
        ScalarField x = symbols::xi_coord(k);
        s = s + x * x;
    }
    return s;
}
}  // namespace

GeodesicSphereModel GeodesicSphereModel::flat(const Box& chart) {
    GeodesicSphereModel m;
    m.n = static_cast<int>(chart.lo.size()) / 2;
    m.a = xi_prime_sq(m.n);
    m.b = symbols::constant(0.0);
    m.R = symbols::constant(0.0);
    m.V = symbols::constant(0.0);
    m.E = 1.0;
    m.chart = chart;
    m.metric_factor = Func1D{[](double) { return 1.0; }, [](double) { return 0.0; }};
    m.name = "flat";
    return m;
}

GeodesicSphereModel GeodesicSphereModel::circle(double r, const Box& chart) {
    // level sets y_n = const are concentric circles of radius r + y_n;
    // dual metric factor (1 + y_n/r)^{-2} = 1 - 2 y_n / r + remainder.
    GeodesicSphereModel m;
    m.n = static_cast<int>(chart.lo.size()) / 2;
    ScalarField q = xi_prime_sq(m.n);
    ScalarField yn = symbols::y_coord(m.n - 1);
    ScalarField wf = symbols::constant(1.0) + yn / Complex(r, 0.0);
    m.a = q;
    m.b = q / Complex(r, 0.0);
    m.R = (symbols::pow_int(wf, -2) - symbols::constant(1.0) +
           Complex(2.0 / r, 0.0) * yn) *
          q;
    m.V = symbols::constant(0.0);
    m.E = 1.0;
    m.chart = chart;
    m.metric_factor = Func1D{[r](double yn_) { return 1.0 + yn_ / r; },
                             [r](double) { return 1.0 / r; }};
    m.name = "circle";
    return m;
}

GeodesicSphereModel GeodesicSphereModel::circle_concave(double r, const Box& chart) {
    GeodesicSphereModel m;
    m.n = static_cast<int>(chart.lo.size()) / 2;
    ScalarField q = xi_prime_sq(m.n);
    ScalarField yn = symbols::y_coord(m.n - 1);
    ScalarField wf = symbols::constant(1.0) - yn / Complex(r, 0.0);
    m.a = q;
    m.b = Complex(-1.0 / r, 0.0) * q;
    m.R = (symbols::pow_int(wf, -2) - symbols::constant(1.0) -
           Complex(2.0 / r, 0.0) * yn) *
          q;
    m.V = symbols::constant(0.0);
    m.E = 1.0;
    m.chart = chart;
    m.metric_factor = Func1D{[r](double yn_) { return 1.0 - yn_ / r; },
                             [r](double) { return -1.0 / r; }};
    m.name = "circle-concave";
    return m;
}

GeodesicSphereModel GeodesicSphereModel::with_potential(ScalarField Vnew,
                                                        double Enew) const {
    GeodesicSphereModel m = *this;
    m.V = std::move(Vnew);
    m.E = Enew;
    m.metric_factor = metric_factor;
    m.name = name + "+V";
    return m;
}

double GeodesicSphereModel::validate(unsigned samples) const {
    Rng rng(20240601u, "model-validate");
    double worstC = 0.0;
    for (unsigned s = 0; s < samples; ++s) {
        PhasePoint p = chart.lo.empty() ? PhasePoint::dim2(0, 0, 1, 0) : [&] {
            std::vector<double> y(n), xi(n);
            for (int k = 0; k < n; ++k) {
                y[k] = rng.uniform(chart.lo[k], chart.hi[k]);
                xi[k] = rng.uniform(chart.lo[n + k], chart.hi[n + k]);
            }
            return PhasePoint(y, xi);
        }();
        double xp2 = 0.0;
        for (int k = 0; k + 1 < n; ++k) xp2 += p.xi[k] * p.xi[k];
        if (xp2 < 1e-10) continue;
        const double av = a(p).real();
        const double bv = b(p).real();
        const double Rv = R(p).real();
        if (av < 1e-12 * xp2)
            throw std::runtime_error("model validation: a not positive definite");
        if (name == "circle" && bv <= 0.0)
            throw std::runtime_error("model validation: b not positive");
        const double yn = p.y[n - 1];
        if (std::abs(yn) > 1e-8)
            worstC = std::max(worstC, std::abs(Rv) / (yn * yn * xp2));
    }
    return worstC;
}

ConjugatedSymbol conjugated_symbol(const GeodesicSphereModel& model,
                                   const CarlemanWeight& w) {
    const int n = model.n;
    ScalarField p = model.principal_symbol();
    std::vector<ScalarField> grad = w.grad_fields(n);

    // p is quadratic in xi, so the complex shift xi -> xi + i grad psi is an
    // exact two-term Taylor expansion:
    //   Re p_psi = p - (1/2) sum_{jk} w_j w_k d2p/dxi_j dxi_k
    //   Im p_psi = sum_k w_k dp/dxi_k
    ScalarField im = symbols::constant(0.0);
    for (int k = 0; k < n; ++k) im = im + grad[k] * p.d_xi(k);
    ScalarField re = p;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            re = re - Complex(0.5, 0.0) * grad[j] * grad[k] * p.d_xi(j).d_xi(k);

    ConjugatedSymbol out;
    out.p = p;
    out.re = re;
    out.im = im;
    return out;
}

namespace {

struct BracketFields {
    std::vector<ScalarField> re_dy, re_dxi, im_dy, im_dxi;
};

BracketFields bracket_fields(const ConjugatedSymbol& cs, int n) {
    BracketFields bf;
    for (int k = 0; k < n; ++k) {
        bf.re_dy.push_back(cs.re.d_y(k));
        bf.re_dxi.push_back(cs.re.d_xi(k));
        bf.im_dy.push_back(cs.im.d_y(k));
        bf.im_dxi.push_back(cs.im.d_xi(k));
    }
    return bf;
}

double eval_bracket(const BracketFields& bf, const PhasePoint& p, int n) {
    double acc = 0.0;
    for (int k = 0; k < n; ++k) {
        acc += bf.re_dxi[k](p).real() * bf.im_dy[k](p).real() -
               bf.re_dy[k](p).real() * bf.im_dxi[k](p).real();
    }
    return acc;
}

double default_char_tol(const ConjugatedSymbol& cs, const PhaseGrid& grid) {
    // 10 x min positive grid spacing x sampled gradient bound of |p_psi|
    double min_dx = std::numeric_limits<double>::infinity();
    const int n2 = static_cast<int>(grid.counts.size());
    for (int a = 0; a < n2; ++a) {
        if (grid.counts[a] < 2) continue;
        min_dx = std::min(min_dx,
                          (grid.box.hi[a] - grid.box.lo[a]) / (grid.counts[a] - 1));
    }
    if (!std::isfinite(min_dx)) min_dx = 1e-2;
    const int n = n2 / 2;
    Rng rng(7u, "char-tol");
    double gbound = 0.0;
    for (int s = 0; s < 256; ++s) {
        std::vector<double> y(n), xi(n);
        for (int k = 0; k < n; ++k) {
            y[k] = rng.uniform(grid.box.lo[k], grid.box.hi[k]);
            xi[k] = rng.uniform(grid.box.lo[n + k], grid.box.hi[n + k]);
        }
        PhasePoint p(y, xi);
        double g2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const Complex gy(cs.re.d_y(k)(p).real(), cs.im.d_y(k)(p).real());
            const Complex gx(cs.re.d_xi(k)(p).real(), cs.im.d_xi(k)(p).real());
            g2 += std::norm(gy) + std::norm(gx);
        }
        gbound = std::max(gbound, std::sqrt(g2));
    }
    return 10.0 * min_dx * gbound;
}

}  // namespace

BracketScan bracket_margin(const GeodesicSphereModel& model, const CarlemanWeight& w,
                           const PhaseGrid& grid, double char_tol) {
    if (grid.size() == 0) throw std::invalid_argument("bracket_margin: empty grid");
    ConjugatedSymbol cs = conjugated_symbol(model, w);
    if (char_tol <= 0.0) char_tol = default_char_tol(cs, grid);
    BracketFields bf = bracket_fields(cs, model.n);

    const size_t total = grid.size();
    const int workers = std::max(1, std::min<int>(worker_count(), 16));
    std::vector<double> mins(workers, std::numeric_limits<double>::infinity());
    std::vector<size_t> wit(workers, size_t(-1));
    std::vector<size_t> counts(workers, 0);

    auto task = [&](int t) {
        const size_t lo = total * t / workers;
        const size_t hi = total * (t + 1) / workers;
        for (size_t i = lo; i < hi; ++i) {
            PhasePoint p = grid.point(i);
            if (std::abs(cs.eval(p)) >= char_tol) continue;
            counts[t]++;
            const double br = eval_bracket(bf, p, model.n);
            if (br < mins[t]) {
                mins[t] = br;
                wit[t] = i;
            }
        }
    };
    if (workers == 1) {
        task(0);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(task, t);
        for (auto& th : pool) th.join();
    }

    BracketScan out;
    size_t total_char = 0;
    double best = std::numeric_limits<double>::infinity();
    size_t best_idx = size_t(-1);
    for (int t = 0; t < workers; ++t) {
        total_char += counts[t];
        if (mins[t] < best || (mins[t] == best && wit[t] < best_idx)) {
            best = mins[t];
            best_idx = wit[t];
        }
    }
    out.char_points = total_char;
    if (total_char == 0) {
        out.found = false;
        return out;
    }
    out.found = true;
    out.margin = best;
    out.witness = grid.point(best_idx);
    return out;
}

TauEstimate max_tau_estimate(const GeodesicSphereModel& model,
                             const std::function<CarlemanWeight(double)>& weight_family,
                             const PhaseGrid& grid, double char_tol, double tau_min,
                             double tau_cap) {
    TauEstimate est;
    auto margin_at = [&](double tau) {
        BracketScan s = bracket_margin(model, weight_family(tau), grid, char_tol);
        const double m = s.found ? s.margin : std::numeric_limits<double>::quiet_NaN();
        est.trace.emplace_back(tau, m);
        return s.found ? s.margin : -1.0;  // no char points: treat as failure
    };
    double lo = tau_min;
    if (margin_at(lo) <= 0.0)
        throw std::runtime_error("max_tau_estimate: margin not positive at smallest tau");
    double hi = lo;
    while (hi < tau_cap) {
        const double next = std::min(tau_cap, hi * 2.0);
        if (margin_at(next) <= 0.0) {
            hi = next;
            break;
        }
        hi = next;
        lo = next;
        if (next >= tau_cap) {
            est.tau_Y = tau_cap;
            return est;
        }
    }
    // bisect between last positive lo and failing hi
    for (int it = 0; it < 12; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (margin_at(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    est.tau_Y = lo;
    return est;
}

RegionPartition region_partition(const RegionParams& p) {
    auto fail = [](const std::string& what) {
        throw std::invalid_argument("region_partition: violated " + what);
    };
    if (!(p.eps > 0)) fail("eps > 0");
    if (!(p.eps < p.eps_Y)) fail("eps < eps_Y");
    if (!(p.eps < p.tau_H / 10.0)) fail("eps < tau_H / 10");
    if (!(p.eps_Y < p.tau_Y / 10.0)) fail("eps_Y < tau_Y / 10");
    if (!(p.eps_Y < p.c_Y / 10.0)) fail("eps_Y < c_Y / 10");
    if (!(p.tau_H + 2.0 * p.eps_Y < p.tau_Y)) fail("tau_H + 2 eps_Y < tau_Y");
    if (!(12.0 * p.eps <= p.c_Y)) fail("4 eps <= c_Y / 3");

    RegionPartition out;
    out.params = p;
    out.U_cn = RegionBox{0.0, p.c_Y, -2.0 * p.eps, -p.eps};
    out.U_bb = RegionBox{0.0, p.c_Y, p.tau_H - p.eps, p.tau_H + p.eps};
    out.U_tr = RegionBox{p.c_Y / 3.0, p.c_Y, -2.0 * p.eps, p.tau_H + p.eps};

    // inclusion constant of {|y_n - tau_H| < eps, |y'| <= 4 eps} in the
    // Fermi tube of H = {y_n = tau_H}: radial level sets realize distance,
    // so the sampled ratio is 1; the integration argument needs k > 2.
    double sampled = 0.0;
    for (int i = 0; i <= 32; ++i) {
        const double yn = p.tau_H - p.eps + 2.0 * p.eps * i / 32.0;
        sampled = std::max(sampled, std::abs(yn - p.tau_H) / p.eps);
    }
    out.k_fit = std::max(2.05, sampled);
    return out;
}

double RegionPartition::chi(double r, double yn) const {
    const double e = params.eps;
    const double chiY = smooth_step((yn + 2.0 * e) / e);            // ramp (-2e, -e)
    const double chiH = smooth_step((params.tau_H + e - yn) / (2.0 * e));
    const double ramp = params.c_Y - params.c_Y / 3.0;
    const double chiT = smooth_step((params.c_Y - r) / ramp);
    return chiY * chiH * chiT;
}

double RegionPartition::chi_dr(double r, double yn) const {
    const double e = params.eps;
    const double chiY = smooth_step((yn + 2.0 * e) / e);
    const double chiH = smooth_step((params.tau_H + e - yn) / (2.0 * e));
    const double ramp = params.c_Y - params.c_Y / 3.0;
    const double dT = -smooth_step_deriv((params.c_Y - r) / ramp) / ramp;
    return chiY * chiH * dT;
}

double RegionPartition::chi_dyn(double r, double yn) const {
    const double e = params.eps;
    const double chiY = smooth_step((yn + 2.0 * e) / e);
    const double dY = smooth_step_deriv((yn + 2.0 * e) / e) / e;
    const double chiH = smooth_step((params.tau_H + e - yn) / (2.0 * e));
    const double dH = -smooth_step_deriv((params.tau_H + e - yn) / (2.0 * e)) / (2.0 * e);
    const double ramp = params.c_Y - params.c_Y / 3.0;
    const double chiT = smooth_step((params.c_Y - r) / ramp);
    return (dY * chiH + chiY * dH) * chiT;
}

EnvelopeReport weight_envelope_report(const CarlemanWeight& w,
                                      const RegionPartition& parts,
                                      int samples_per_axis) {
    const auto& p = parts.params;
    const double tol = 1e-12;
    auto psi_at = [&](double r, double yn) {
        return w.beta * yn + 2.0 * w.tau * (w.tau != 0.0 ? w.rho.value(r) : 0.0);
    };
    EnvelopeReport rep;
    rep.control_ok = rep.transition_ok = rep.blackbox_ok = true;
    const int m = samples_per_axis;
    for (int i = 0; i <= m; ++i) {
        for (int j = 0; j <= m; ++j) {
            const double fr = double(i) / m, fy = double(j) / m;
            // control region
            {
                const double r = parts.U_cn.r_lo + fr * (parts.U_cn.r_hi - parts.U_cn.r_lo);
                const double yn =
                    parts.U_cn.yn_lo + fy * (parts.U_cn.yn_hi - parts.U_cn.yn_lo);
                if (psi_at(r, yn) > yn + tol) rep.control_ok = false;
            }
            // transition region (excluding U_bb, U_cn)
            {
                const double r = parts.U_tr.r_lo + fr * (parts.U_tr.r_hi - parts.U_tr.r_lo);
                const double yn =
                    parts.U_tr.yn_lo + fy * (parts.U_tr.yn_hi - parts.U_tr.yn_lo);
                if (parts.in_tr_tilde(r, yn) && psi_at(r, yn) > -9.0 * p.eps + tol)
                    rep.transition_ok = false;
            }
            // black-box region
            {
                const double r = parts.U_bb.r_lo + fr * (parts.U_bb.r_hi - parts.U_bb.r_lo);
                const double yn =
                    parts.U_bb.yn_lo + fy * (parts.U_bb.yn_hi - parts.U_bb.yn_lo);
                if (psi_at(r, yn) > p.tau_H + p.eps + tol) rep.blackbox_ok = false;
            }
        }
    }
    return rep;
}

std::vector<SigmaMinPoint> discrete_carleman_sigma_min(
    const GeodesicSphereModel& model, const CarlemanWeight& w,
    const std::vector<double>& h_list, int grid_resolution, int buffer) {
    if (model.n != 2)
        throw std::invalid_argument("discrete_carleman_sigma_min: 2D models only");
    if (!model.metric_factor)
        throw std::invalid_argument(
            "discrete_carleman_sigma_min: model carries no metric factor");
    const Func1D& wf = *model.metric_factor;

    const double cY = w.c_Y;
    const double yn_lo = -2.0 * w.eps, yn_hi = w.tau + 2.0 * w.eps;
    const int res = grid_resolution;
    const double dyp = 2.0 * cY / (res + 1);
    const double dyn = (yn_hi - yn_lo) / (res + 1);

    // potential sampled on the rectangle
    auto Vat = [&](double yp, double yn) {
        PhasePoint p = PhasePoint::dim2(yp, yn, 0.0, 0.0);
        return model.V(p).real();
    };

    std::vector<SigmaMinPoint> out;
    for (double h : h_list) {
        const double xi_ref = std::sqrt(std::max(model.E, 0.0) + w.beta * w.beta) + 0.5;
        const double need = 2.0 * M_PI * h / (8.0 * xi_ref);
        if (std::max(dyp, dyn) > need)
            throw std::runtime_error(
                "discrete_carleman_sigma_min: grid too coarse for h (needs >= 8 points "
                "per wavelength)");

        using SpMat = Eigen::SparseMatrix<double>;
        using Trip = Eigen::Triplet<double>;
        const int N = res * res;
        std::vector<Trip> trip;
        trip.reserve(static_cast<size_t>(N) * 5);
        auto idx = [&](int i, int j) { return i * res + j; };  // i: y', j: y_n
        for (int i = 0; i < res; ++i) {
            const double yp = -cY + (i + 1) * dyp;
            const double psip = (w.tau != 0.0)
                                    ? 2.0 * w.tau * w.rho.deriv(std::abs(yp)) *
                                          (yp >= 0 ? 1.0 : -1.0)
                                    : 0.0;
            const double dpsip =
                (w.tau != 0.0)
                    ? (2.0 * w.tau * w.rho.deriv(std::abs(yp) + 1e-7) -
                       2.0 * w.tau * w.rho.deriv(std::abs(yp) - 1e-7)) /
                          2e-7
                    : 0.0;
            for (int j = 0; j < res; ++j) {
                const double yn = yn_lo + (j + 1) * dyn;
                const double wv = wf(yn);
                const double wp = wf.deriv(yn);
                const double iw2 = 1.0 / (wv * wv);
                const int k = idx(i, j);
                double diag = 0.0;
                // -(h d_n - beta)^2 = -h^2 d_n^2 + 2 beta h d_n - beta^2
                diag += 2.0 * h * h / (dyn * dyn) - w.beta * w.beta;
                if (j + 1 < res)
                    trip.emplace_back(k, idx(i, j + 1),
                                      -h * h / (dyn * dyn) + w.beta * h / dyn);
                if (j - 1 >= 0)
                    trip.emplace_back(k, idx(i, j - 1),
                                      -h * h / (dyn * dyn) - w.beta * h / dyn);
                // -(w'/w) h (h d_n - beta)
                const double c2 = -wp / wv;
                if (j + 1 < res)
                    trip.emplace_back(k, idx(i, j + 1), c2 * h * h / (2.0 * dyn));
                if (j - 1 >= 0)
                    trip.emplace_back(k, idx(i, j - 1), -c2 * h * h / (2.0 * dyn));
                diag += -c2 * h * w.beta;
                // -w^{-2} (h d_p - psip)^2
                //   = -w^{-2}(h^2 d_p^2 - 2 psip h d_p - h psip' + psip^2)
                diag += iw2 * 2.0 * h * h / (dyp * dyp) - iw2 * psip * psip +
                        iw2 * h * dpsip;
                if (i + 1 < res)
                    trip.emplace_back(k, idx(i + 1, j),
                                      -iw2 * h * h / (dyp * dyp) +
                                          iw2 * psip * h / dyp);
                if (i - 1 >= 0)
                    trip.emplace_back(k, idx(i - 1, j),
                                      -iw2 * h * h / (dyp * dyp) -
                                          iw2 * psip * h / dyp);
                // potential and energy
                diag += Vat(yp, yn) - model.E;
                trip.emplace_back(k, k, diag);
            }
        }
        SpMat A(N, N);
        A.setFromTriplets(trip.begin(), trip.end());

        // columns restricted to functions supported `buffer` nodes inside
        std::vector<int> keep;
        keep.reserve(N);
        for (int i = buffer; i < res - buffer; ++i)
            for (int j = buffer; j < res - buffer; ++j) keep.push_back(idx(i, j));
        const int M = static_cast<int>(keep.size());
        SpMat Rsel(N, M);
        {
            std::vector<Trip> rt;
            rt.reserve(M);
            for (int c = 0; c < M; ++c) rt.emplace_back(keep[c], c, 1.0);
            Rsel.setFromTriplets(rt.begin(), rt.end());
        }
        SpMat Ar = A * Rsel;
        SpMat G = SpMat(Ar.transpose()) * Ar;
        G.makeCompressed();

        Eigen::SparseLU<SpMat> lu;
        lu.analyzePattern(G);
        lu.factorize(G);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("discrete_carleman_sigma_min: factorization failed");

        Rng rng(99u, "sigma-min");
        Eigen::VectorXd v(M);
        for (int i = 0; i < M; ++i) v[i] = rng.normal();
        v.normalize();
        double lam = 0.0;
        for (int it = 0; it < 400; ++it) {
            Eigen::VectorXd z = lu.solve(v);
            const double nz = z.norm();
            v = z / nz;
            const double lam_new = v.dot(G * v);
            if (it > 4 && std::abs(lam_new - lam) < 1e-12 * std::abs(lam_new)) {
                lam = lam_new;
                break;
            }
            lam = lam_new;
        }
        out.push_back(SigmaMinPoint{h, std::sqrt(std::max(lam, 0.0))});
    }
    return out;
}

}  // namespace eflab::carleman
