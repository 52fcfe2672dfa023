#include "eflab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "eflab/quadrature.hpp"

namespace eflab::analysis {

namespace {

// interpolate log|v| linearly in x (nodes ascending)
double interp_log_abs(const std::vector<double>& x, const std::vector<double>& la,
                      double x0) {
    if (x.empty()) throw std::invalid_argument("interp_log_abs: empty samples");
    auto it = std::lower_bound(x.begin(), x.end(), x0);
    if (it == x.begin()) return la.front();
    if (it == x.end()) return la.back();
    const size_t j = it - x.begin();
    const double t = (x0 - x[j - 1]) / (x[j] - x[j - 1]);
    return (1.0 - t) * la[j - 1] + t * la[j];
}

double circle_gap(double a, double b, double L) {
    double d = std::fmod(std::abs(a - b), L);
    return std::min(d, L - d);
}

}  // namespace

double log_restriction_norm(const models::EigenfunctionFamily& fam,
                            const models::FamilyEntry& entry,
                            const HypersurfaceSpec& H) {
    if (H.x0 < fam.domain.a || H.x0 > fam.domain.b)
        throw std::domain_error("restriction_norm: x0 outside chart");
    const double lv = interp_log_abs(entry.x, entry.log_abs, H.x0);
    double log_sq = 2.0 * lv;
    if (fam.model == "warped") {
        log_sq += std::log(fam.weight(H.x0));
        if (H.sub_arc_fraction < 1.0) log_sq += std::log(H.sub_arc_fraction);
    }
    return 0.5 * log_sq;
}

double log_tube_mass(const models::EigenfunctionFamily& fam,
                     const models::FamilyEntry& entry, const HypersurfaceSpec& H,
                     double eps) {
    if (eps <= 0.0) return -std::numeric_limits<double>::infinity();
    const double L = fam.domain.length();
    const int N = static_cast<int>(entry.x.size());
    const double dx = (fam.domain.kind == models::DomainKind::Circle)
                          ? L / N
                          : entry.x[1] - entry.x[0];
    double peak = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < N; ++i) {
        const double gap = (fam.domain.kind == models::DomainKind::Circle)
                               ? circle_gap(entry.x[i], H.x0, L)
                               : std::abs(entry.x[i] - H.x0);
        if (gap < eps) peak = std::max(peak, entry.log_abs[i]);
    }
    if (!std::isfinite(peak)) return -std::numeric_limits<double>::infinity();
    double acc = 0.0;
    for (int i = 0; i < N; ++i) {
        const double gap = (fam.domain.kind == models::DomainKind::Circle)
                               ? circle_gap(entry.x[i], H.x0, L)
                               : std::abs(entry.x[i] - H.x0);
        if (gap >= eps) continue;
        const double w = fam.weight.f ? fam.weight(entry.x[i]) : 1.0;
        acc += std::exp(2.0 * (entry.log_abs[i] - peak)) * w * dx;
    }
    return peak + 0.5 * std::log(std::max(acc, 1e-300));
}

double agmon_distance_1d(const Func1D& V, double E, double x_from,
                         const models::Domain1D& domain) {
    if (V(x_from) <= E) return 0.0;
    const double L = domain.length();

    // integrand with turning-point substitution: on a segment ending at a
    // simple turning point t*, substitute x = t* -+ u^2 so the sqrt vanishing
    // becomes smooth.
    auto seg_integral = [&](double a, double b) {
        // integral of sqrt((V-E)_+) over [a,b] (a < b), both endpoints either
        // interior forbidden points or turning points.
        auto f = [&](double t) { return std::sqrt(std::max(V(t) - E, 0.0)); };
        const bool ta = std::abs(V(a) - E) < 1e-12 * std::max(1.0, std::abs(E));
        const bool tb = std::abs(V(b) - E) < 1e-12 * std::max(1.0, std::abs(E));
        if (!ta && !tb) return integrate(f, a, b);
        const double len = b - a;
        const double cutA = a + (ta ? 0.25 * len : 0.0);
        const double cutB = b - (tb ? 0.25 * len : 0.0);
        double total = 0.0;
        if (ta) {
            auto g = [&](double u) {
                const double t = a + u * u;
                return 2.0 * u * std::sqrt(std::max(V(t) - E, 0.0));
            };
            total += integrate(g, 0.0, std::sqrt(cutA - a));
        }
        if (tb) {
            auto g = [&](double u) {
                const double t = b - u * u;
                return 2.0 * u * std::sqrt(std::max(V(t) - E, 0.0));
            };
            total += integrate(g, 0.0, std::sqrt(b - cutB));
        }
        total += integrate(f, cutA, cutB);
        return total;
    };

    // march along a direction until V <= E, locating the turning point by
    // bisection; returns the arc integral, or +inf if no exit within one lap.
    auto arc_distance = [&](double dir) {
        const double step = L / 4096.0;
        double prev = x_from;
        double dist = 0.0;
        const double limit =
            (domain.kind == models::DomainKind::Circle) ? L : (dir > 0 ? domain.b - x_from
                                                                       : x_from - domain.a);
        double traveled = 0.0;
        while (traveled < limit + 0.5 * step) {
            double next = prev + dir * step;
            double tn = traveled + step;
            if (domain.kind != models::DomainKind::Circle) {
                next = std::clamp(next, domain.a, domain.b);
                if (next == prev) break;
                tn = traveled + std::abs(next - prev);
            }
            if (V(next) <= E) {
                // bracket the turning point in [prev, next] (by travel order)
                double lo = prev, hi = next;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (V(mid) > E)
                        lo = mid;
                    else
                        hi = mid;
                }
                const double tp = 0.5 * (lo + hi);
                dist += dir > 0 ? seg_integral(prev, tp) : seg_integral(tp, prev);
                return dist;
            }
            dist += dir > 0 ? seg_integral(prev, next) : seg_integral(next, prev);
            prev = next;
            traveled = tn;
        }
        return std::numeric_limits<double>::infinity();
    };

    const double right = arc_distance(+1.0);
    const double left = arc_distance(-1.0);
    const double d = std::min(left, right);
    if (!std::isfinite(d))
        throw std::runtime_error("agmon_distance_1d: no allowed region reached");
    return d;
}

double riemannian_distance(const HypersurfaceSpec& H,
                           const microlocal::SupportEstimate& K_hat,
                           const models::Domain1D& domain) {
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    for (size_t c = 0; c < K_hat.centers.size(); ++c) {
        if (!K_hat.in_K[c]) continue;
        any = true;
        double gap = (domain.kind == models::DomainKind::Circle)
                         ? circle_gap(H.x0, K_hat.centers[c], domain.length())
                         : std::abs(H.x0 - K_hat.centers[c]);
        gap = std::max(0.0, gap - 0.5 * K_hat.cell_size);  // distance to the cell
        best = std::min(best, gap);
    }
    if (!any) throw std::invalid_argument("riemannian_distance: empty K_hat");
    return best;
}

double riemannian_distance_interval(const HypersurfaceSpec& H, double lo, double hi,
                                    const models::Domain1D& domain) {
    if (H.x0 >= lo && H.x0 <= hi) return 0.0;
    if (domain.kind == models::DomainKind::Circle) {
        const double L = domain.length();
        return std::min(circle_gap(H.x0, lo, L), circle_gap(H.x0, hi, L));
    }
    return H.x0 < lo ? lo - H.x0 : H.x0 - hi;
}

VerdictSet theorem_verdicts(double r_H, double se_H, double r_tube, double se_tube,
                            double d_R, double d_A, double beta, double eps_margin) {
    VerdictSet v;
    const double mH = eps_margin + se_H;
    const double mT = eps_margin + se_tube;
    v.laplace_restriction = r_H <= d_R + mH;
    v.laplace_tube = r_tube <= d_R + mT;
    v.schrodinger_restriction = r_H <= beta * (d_R + eps_margin) + se_H;
    v.agmon_consistency = r_H >= d_A - mH;
    v.sandwich = v.schrodinger_restriction && v.agmon_consistency;
    v.tube_le_restriction = r_tube <= r_H + se_H + se_tube;
    return v;
}

RestrictionReport build_restriction_report(
    const models::EigenfunctionFamily& fam, const HypersurfaceSpec& H,
    double tube_eps, double beta, double d_R, double d_A, double eps_margin) {
    RestrictionReport rep;
    rep.H = H;
    rep.tube_eps = tube_eps;
    rep.d_R = d_R;
    rep.d_A = d_A;
    rep.beta = beta;
    rep.eps_margin = eps_margin > 0 ? eps_margin : 0.05 * d_A;

    const double floor_log = std::log(1e3 * std::numeric_limits<double>::epsilon());
    std::vector<double> hu, yu, hu_t, yu_t;
    for (const auto& e : fam.entries) {
        const double lr = log_restriction_norm(fam, e, H);
        const double lt = log_tube_mass(fam, e, H, tube_eps);
        rep.h.push_back(e.h);
        rep.log_restriction.push_back(lr);
        rep.log_tube.push_back(lt);
        const bool floored = lr < floor_log;
        rep.floor_limited.push_back(floored);
        if (!floored) {
            hu.push_back(e.h);
            yu.push_back(lr);
        }
        if (lt >= floor_log) {
            hu_t.push_back(e.h);
            yu_t.push_back(lt);
        }
    }
    rep.fit_H = decay_rate_fit(hu, yu);
    rep.fit_tube = decay_rate_fit(hu_t, yu_t);
    rep.verdicts =
        theorem_verdicts(rep.fit_H.rate, rep.fit_H.stderr_rate, rep.fit_tube.rate,
                         rep.fit_tube.stderr_rate, d_R, d_A, beta, rep.eps_margin);
    return rep;
}

}  // namespace eflab::analysis
