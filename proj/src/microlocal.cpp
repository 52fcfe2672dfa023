#include "eflab/microlocal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace eflab::microlocal {

namespace {

GridFn to_gridfn(const models::FamilyEntry& e, double length) {
    GridFn u;
    u.grid = PeriodicGrid{static_cast<int>(e.x.size()), length};
    u.v = e.v;
    return u;
}

}  // namespace

MicrolocalProbe defect_mass(const models::EigenfunctionFamily& fam,
                            const QuantizedSymbol& a) {
    if (fam.entries.empty()) throw std::invalid_argument("defect_mass: empty family");
    MicrolocalProbe probe;
    const double L = fam.domain.length();
    for (const auto& e : fam.entries) {
        GridFn u = to_gridfn(e, L);
        GridFn au = quantize_apply(a, u, e.h);
        // weighted pairing with the family measure
        Complex acc = 0.0;
        const double dx = L / u.grid.n;
        for (int i = 0; i < u.grid.n; ++i) {
            const double w = fam.weight.f ? fam.weight(u.grid.x(i)) : 1.0;
            acc += au.v[i] * std::conj(u.v[i]) * w * dx;
        }
        probe.h.push_back(e.h);
        probe.pairings.push_back(acc);
        probe.max_imag = std::max(probe.max_imag, std::abs(acc.imag()));
    }
    std::vector<double> re(probe.pairings.size());
    for (size_t i = 0; i < re.size(); ++i) re[i] = probe.pairings[i].real();
    // Richardson wants ascending accuracy: reverse to increasing h? tableau is
    // order-free in nodes; pass as-is (h strictly decreasing).
    auto ex = richardson_extrapolate(probe.h, re);
    probe.limit = ex.value;
    probe.limit_error = ex.error_estimate;
    double osc = 0.0;
    for (size_t i = 1; i < re.size(); ++i) osc = std::max(osc, std::abs(re[i] - re[i - 1]));
    probe.convergent = !ex.oscillatory || osc <= 10.0 * std::max(ex.error_estimate, 1e-12);
    return probe;
}

bool SupportEstimate::contains(double x) const {
    for (size_t c = 0; c < centers.size(); ++c) {
        if (in_K[c] && std::abs(x - centers[c]) <= 0.5 * cell_size) return true;
    }
    return false;
}

std::vector<std::pair<double, double>> SupportEstimate::intervals() const {
    std::vector<std::pair<double, double>> out;
    const size_t n = centers.size();
    size_t c = 0;
    while (c < n) {
        if (!in_K[c]) {
            ++c;
            continue;
        }
        size_t d = c;
        while (d + 1 < n && in_K[d + 1]) ++d;
        out.emplace_back(centers[c] - 0.5 * cell_size, centers[d] + 0.5 * cell_size);
        c = d + 1;
    }
    return out;
}

SupportEstimate support_estimate(const models::EigenfunctionFamily& fam,
                                 double cell_size, double r_tol) {
    if (fam.entries.size() < 3)
        throw std::invalid_argument("support_estimate: need >= 3 h values");
    const double L = fam.domain.length();
    const int ncell = std::max(1, static_cast<int>(std::lround(L / cell_size)));
    const double cs = L / ncell;

    SupportEstimate est;
    est.cell_size = cs;
    est.centers.resize(ncell);
    for (int c = 0; c < ncell; ++c) est.centers[c] = fam.domain.a + (c + 0.5) * cs;

    const int nh = static_cast<int>(fam.entries.size());
    std::vector<std::vector<double>> logm(ncell, std::vector<double>(nh, 0.0));
    std::vector<std::vector<bool>> at_floor(ncell, std::vector<bool>(nh, false));

    for (int ei = 0; ei < nh; ++ei) {
        const auto& e = fam.entries[ei];
        const int N = static_cast<int>(e.x.size());
        const double floor_log = std::log(1e3 * std::numeric_limits<double>::epsilon());
        // cell mass via the log-domain samples: sum over nodes of
        // e^{2 log|v|} * weight * dx, evaluated stably against the peak.
        std::vector<double> peak(ncell, -std::numeric_limits<double>::infinity());
        for (int i = 0; i < N; ++i) {
            int c = static_cast<int>((e.x[i] - fam.domain.a) / cs);
            c = std::clamp(c, 0, ncell - 1);
            peak[c] = std::max(peak[c], e.log_abs[i]);
        }
        std::vector<double> acc(ncell, 0.0);
        std::vector<int> cnt(ncell, 0);
        for (int i = 0; i < N; ++i) {
            int c = static_cast<int>((e.x[i] - fam.domain.a) / cs);
            c = std::clamp(c, 0, ncell - 1);
            const double w = fam.weight.f ? fam.weight(e.x[i]) : 1.0;
            const double dx = L / N;
            acc[c] += std::exp(2.0 * (e.log_abs[i] - peak[c])) * w * dx;
            cnt[c]++;
        }
        for (int c = 0; c < ncell; ++c) {
            if (cnt[c] == 0 || !std::isfinite(peak[c])) {
                at_floor[c][ei] = true;
                logm[c][ei] = -709.0;
                continue;
            }
            logm[c][ei] = 2.0 * peak[c] + std::log(std::max(acc[c], 1e-300));
            if (peak[c] < floor_log) at_floor[c][ei] = true;
        }
    }

    std::vector<double> hs(nh);
    for (int ei = 0; ei < nh; ++ei) hs[ei] = fam.entries[ei].h;

    est.rate.resize(ncell);
    est.stderr_rate.resize(ncell);
    est.below_floor.resize(ncell);
    std::vector<double> clean_se;
    for (int c = 0; c < ncell; ++c) {
        std::vector<double> hu, yu;
        for (int ei = 0; ei < nh; ++ei) {
            if (at_floor[c][ei]) continue;
            hu.push_back(hs[ei]);
            yu.push_back(logm[c][ei]);
        }
        if (hu.size() < 3) {
            est.below_floor[c] = true;
            est.rate[c] = std::numeric_limits<double>::infinity();
            est.stderr_rate[c] = 0.0;
            continue;
        }
        est.below_floor[c] = false;
        auto fit = robust_rate_fit(hu, yu);
        est.rate[c] = fit.rate;
        est.stderr_rate[c] = fit.stderr_rate;
        clean_se.push_back(fit.stderr_rate);
    }

    if (r_tol <= 0.0) {
        double med = 0.004;
        if (!clean_se.empty()) {
            std::sort(clean_se.begin(), clean_se.end());
            med = clean_se[clean_se.size() / 2];
        }
        r_tol = std::max(3.0 * med, 0.004);
    }
    est.r_tol = r_tol;
    est.in_K.resize(ncell);
    for (int c = 0; c < ncell; ++c)
        est.in_K[c] = !est.below_floor[c] && est.rate[c] <= r_tol;
    return est;
}

LacunarityFit lacunarity_fit(const OperatorApplier& Qapply,
                             const models::EigenfunctionFamily& fam,
                             const Func1D& chi1, const Func1D& chi2,
                             std::pair<double, double> chi2_support,
                             const SupportEstimate& K_hat) {
    // precondition: supp chi2 must avoid the estimated defect support
    for (size_t c = 0; c < K_hat.centers.size(); ++c) {
        if (!K_hat.in_K[c]) continue;
        const double x = K_hat.centers[c];
        if (x >= chi2_support.first - 0.5 * K_hat.cell_size &&
            x <= chi2_support.second + 0.5 * K_hat.cell_size)
            throw std::invalid_argument(
                "lacunarity_fit: cutoff support intersects estimated defect support");
    }

    LacunarityFit out;
    const double L = fam.domain.length();
    std::vector<double> logn;
    std::vector<double> floor_level;  // per-entry certification floor
    for (const auto& e : fam.entries) {
        GridFn u;
        u.grid = PeriodicGrid{static_cast<int>(e.x.size()), L};
        u.v.resize(e.x.size());
        // build chi1 u in the log domain so forbidden-band tails survive
        // (values re-exponentiated; fine for the norms taken here)
        const int N = static_cast<int>(e.x.size());
        double peak = -std::numeric_limits<double>::infinity();
        std::vector<double> lw(N);
        for (int i = 0; i < N; ++i) {
            const double c1 = chi1(e.x[i]);
            lw[i] = (c1 > 0 ? std::log(c1) : -745.0) + e.log_abs[i];
            peak = std::max(peak, lw[i]);
        }
        for (int i = 0; i < N; ++i) {
            const double phase = std::arg(e.v[i] == Complex(0.0, 0.0) ? Complex(1.0, 0.0)
                                                                      : e.v[i]);
            u.v[i] = std::exp(lw[i] - peak) * Complex(std::cos(phase), std::sin(phase));
        }
        GridFn qu = Qapply ? Qapply(e, u, e.h) : u;
        double s = 0.0;
        const double dx = L / N;
        for (int i = 0; i < N; ++i) {
            const double c2 = chi2(e.x[i]);
            const double w = fam.weight.f ? fam.weight(e.x[i]) : 1.0;
            s += c2 * c2 * std::norm(qu.v[i]) * w * dx;
        }
        const double log_n2 = std::log(std::max(s, 1e-300)) + 2.0 * peak;
        out.h.push_back(e.h);
        out.n.push_back(log_n2);
        logn.push_back(log_n2);
        // masses at the solver-noise level certify annihilation of the family
        const double noise = std::max(1e3 * std::numeric_limits<double>::epsilon(),
                                      1e2 * e.residual);
        floor_level.push_back(2.0 * std::log(noise));
    }
    int floored = 0;
    for (size_t i = 0; i < logn.size(); ++i)
        if (logn[i] < floor_level[i]) ++floored;
    if (floored == static_cast<int>(logn.size())) {
        out.floor_limited = true;
        return out;
    }
    auto fit = decay_rate_fit(out.h, logn);
    out.C = fit.rate;
    out.intercept = fit.intercept;
    out.stderr_C = fit.stderr_rate;
    return out;
}

}  // namespace eflab::microlocal
