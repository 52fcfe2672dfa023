#include "eflab/pipelines.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <sstream>

#include "eflab/analysis.hpp"
#include "eflab/carleman.hpp"
#include "eflab/expr_parser.hpp"
#include "eflab/factorize.hpp"
#include "eflab/io.hpp"
#include "eflab/microlocal.hpp"
#include "eflab/models.hpp"
#include "eflab/rng.hpp"

namespace eflab::pipelines {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Func1D field_to_func1d(const symbols::ScalarField& f) {
    symbols::ScalarField df = f.d_y(0);
    return Func1D{
        [f](double x) { return f(PhasePoint::dim1(x, 0.0)).real(); },
        [df](double x) { return df(PhasePoint::dim1(x, 0.0)).real(); }};
}

struct Artifacts {
    fs::path dir;
    json manifest;
    std::vector<std::string> warnings;

    void record(const std::string& name, const std::string& body,
                const std::string& operation, const std::string& block) {
        io::write_text(dir / name, body);
        manifest["artifacts"][name] = {{"hash", io::hash_hex(body)},
                                       {"operation", operation},
                                       {"config_block", block}};
    }
};

models::EigenfunctionFamily build_family(const config::Config& cfg,
                                         const std::vector<double>& h_grid) {
    const std::string type = cfg.str("model.type");
    if (type == "warped") {
        models::WarpedProduct wp;
        wp.f = field_to_func1d(expr::parse_field(cfg.str("model.f")));
        wp.lambda = cfg.num_or("model.lambda", 1.0);
        wp.base_length = cfg.num_or("model.length", 2.0 * M_PI);
        wp.h_grid = h_grid;
        wp.points_per_h = static_cast<int>(cfg.num_or("model.points_per_h", 16));
        wp.even_parity = cfg.str_or("model.parity", "any") == "even";
        return models::warped_eigenfamily(wp, cfg.num("model.E_target"));
    }
    if (type == "schrodinger1d") {
        models::SchrodingerProblem1D prob;
        prob.V = field_to_func1d(expr::parse_field(cfg.str("model.V")));
        prob.E_target = cfg.num("model.E_target");
        prob.h_grid = h_grid;
        prob.points_per_h = static_cast<int>(cfg.num_or("model.points_per_h", 16));
        if (cfg.str_or("model.domain", "interval") == "circle") {
            prob.domain = models::Domain1D{models::DomainKind::Circle, 0.0,
                                           cfg.num_or("model.length", 2.0 * M_PI)};
        } else {
            auto iv = cfg.num_list("model.interval");
            if (iv.size() != 2)
                throw std::invalid_argument("config error: model.interval needs [a, b]");
            prob.domain =
                models::Domain1D{models::DomainKind::IntervalDirichlet, iv[0], iv[1]};
        }
        return models::schrodinger_family(prob);
    }
    if (type == "torus") {
        auto xi = cfg.num_list_or("model.xi", {1.0});
        return models::torus_family(xi, h_grid,
                                    static_cast<int>(cfg.num_or("model.samples", 512)));
    }
    throw std::invalid_argument("config error: unknown model.type '" + type + "'");
}

void emit_family(Artifacts& art, const models::EigenfunctionFamily& fam) {
    json meta;
    meta["model"] = fam.model;
    meta["E_target"] = fam.E_target;
    meta["lambda"] = fam.lambda;
    meta["domain"] = {fam.domain.a, fam.domain.b};
    meta["circle"] = fam.domain.kind == models::DomainKind::Circle;
    json entries = json::array();
    for (size_t i = 0; i < fam.entries.size(); ++i) {
        const auto& e = fam.entries[i];
        entries.push_back({{"h", e.h},
                           {"E", e.E},
                           {"lambda_h", e.lambda_h},
                           {"residual", e.residual},
                           {"e_drift", e.e_drift},
                           {"reconstructed", e.reconstructed},
                           {"csv", "family_" + std::to_string(i) + ".csv"}});
        io::CsvTable t;
        t.header = {"x", "re_v", "im_v", "log_abs_v"};
        for (size_t j = 0; j < e.x.size(); ++j)
            t.add_row({e.x[j], e.v[j].real(), e.v[j].imag(), e.log_abs[j]});
        art.record("family_" + std::to_string(i) + ".csv", t.body(),
                   "eigenfamily", "model");
    }
    meta["entries"] = entries;
    art.record("family.json", meta.dump(2) + "\n", "eigenfamily", "model");
}

// turning interval of {V <= E} around the minimum of V (1D circle/interval)
std::pair<double, double> allowed_interval(const Func1D& V, double E, double a,
                                           double b) {
    const int n = 4096;
    double lo = b, hi = a;
    for (int i = 0; i <= n; ++i) {
        const double x = a + (b - a) * i / n;
        if (V(x) <= E) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    return {lo, hi};
}

void stage_support(const config::Config& cfg, Artifacts& art,
                   const models::EigenfunctionFamily& fam,
                   std::unique_ptr<microlocal::SupportEstimate>& out) {
    const double cell = cfg.num_or("support.cell_size", 0.02);
    const double rtol = cfg.num_or("support.r_tol", 0.0);
    auto est = microlocal::support_estimate(fam, cell, rtol);

    io::CsvTable t;
    t.header = {"cell_center", "fitted_rate", "stderr"};
    for (size_t c = 0; c < est.centers.size(); ++c) {
        t.add_row({est.centers[c],
                   est.below_floor[c] ? std::numeric_limits<double>::infinity()
                                      : est.rate[c],
                   est.stderr_rate[c]});
    }
    art.record("density.csv", t.body(), "support_estimate", "support");

    json s;
    s["cell_size"] = est.cell_size;
    s["r_tol"] = est.r_tol;
    json iv = json::array();
    for (auto& [a, b] : est.intervals()) iv.push_back({a, b});
    s["K_hat"] = iv;
    // sensitivity of K_hat to the threshold
    for (double mult : {0.5, 2.0}) {
        auto est2 = microlocal::support_estimate(fam, cell, est.r_tol * mult);
        json iv2 = json::array();
        for (auto& [a, b] : est2.intervals()) iv2.push_back({a, b});
        s[mult < 1.0 ? "K_hat_half_tol" : "K_hat_double_tol"] = iv2;
    }
    // Schrodinger localization: K_hat within one cell of {V <= E}
    if (fam.model != "torus") {
        auto [lo, hi] =
            allowed_interval(fam.V_eff, fam.E_target, fam.domain.a, fam.domain.b);
        bool included = true;
        for (size_t c = 0; c < est.centers.size(); ++c) {
            if (!est.in_K[c]) continue;
            if (est.centers[c] < lo - est.cell_size || est.centers[c] > hi + est.cell_size)
                included = false;
        }
        s["allowed_interval"] = {lo, hi};
        s["inclusion_within_one_cell"] = included;
    }
    art.record("support.json", s.dump(2) + "\n", "support_estimate", "support");
    out = std::make_unique<microlocal::SupportEstimate>(std::move(est));
}

void stage_probes(const config::Config& cfg, Artifacts& art,
                  const models::EigenfunctionFamily& fam,
                  const microlocal::SupportEstimate* K_hat) {
    for (const std::string& name : cfg.subsections("probe")) {
        const std::string base = "probe." + name + ".";
        analysis::HypersurfaceSpec H;
        H.x0 = cfg.num(base + "x0");
        H.sub_arc_fraction = cfg.num_or(base + "sub_arc", 1.0);
        const double tube_eps = cfg.num_or(base + "tube_eps", 0.4);

        const double d_A =
            analysis::agmon_distance_1d(fam.V_eff, fam.E_target, H.x0, fam.domain);
        double beta = cfg.num_or(base + "beta", 0.0);
        if (beta <= 0.0) {
            // 1.05 * max sqrt|V - E| over the domain
            double m = 0.0;
            for (int i = 0; i <= 2048; ++i) {
                const double x =
                    fam.domain.a + (fam.domain.b - fam.domain.a) * i / 2048.0;
                m = std::max(m, std::abs(fam.V_eff(x) - fam.E_target));
            }
            beta = 1.05 * std::sqrt(m);
        }
        double d_R;
        if (cfg.str_or(base + "K", "estimate") == "analytic" || K_hat == nullptr) {
            auto [lo, hi] =
                allowed_interval(fam.V_eff, fam.E_target, fam.domain.a, fam.domain.b);
            d_R = analysis::riemannian_distance_interval(H, lo, hi, fam.domain);
        } else {
            d_R = analysis::riemannian_distance(H, *K_hat, fam.domain);
        }
        auto rep = analysis::build_restriction_report(
            fam, H, tube_eps, beta, d_R, d_A, cfg.num_or(base + "eps_margin", 0.0));

        io::CsvTable t;
        t.header = {"h", "log_restriction_norm", "log_tube_mass"};
        for (size_t i = 0; i < rep.h.size(); ++i)
            t.add_row({rep.h[i], rep.log_restriction[i], rep.log_tube[i]});
        art.record("trace_" + name + ".csv", t.body(), "restriction_norm+tube_mass",
                   "probe." + name);

        json r;
        r["x0"] = H.x0;
        r["sub_arc_fraction"] = H.sub_arc_fraction;
        r["tube_eps"] = tube_eps;
        r["rate_H"] = rep.fit_H.rate;
        r["stderr_H"] = rep.fit_H.stderr_rate;
        r["intercept_H"] = rep.fit_H.intercept;
        r["rate_tube"] = rep.fit_tube.rate;
        r["stderr_tube"] = rep.fit_tube.stderr_rate;
        r["d_R"] = rep.d_R;
        r["d_A"] = rep.d_A;
        r["beta"] = rep.beta;
        r["eps_margin"] = rep.eps_margin;
        r["verdicts"] = {{"laplace_restriction", rep.verdicts.laplace_restriction},
                         {"laplace_tube", rep.verdicts.laplace_tube},
                         {"schrodinger_restriction", rep.verdicts.schrodinger_restriction},
                         {"agmon_consistency", rep.verdicts.agmon_consistency},
                         {"sandwich", rep.verdicts.sandwich},
                         {"tube_le_restriction", rep.verdicts.tube_le_restriction}};
        art.record("restriction_" + name + ".json", r.dump(2) + "\n",
                   "build_restriction_report", "probe." + name);

        std::vector<double> ys;
        for (size_t i = 0; i < rep.h.size(); ++i)
            ys.push_back(-rep.h[i] * rep.log_restriction[i]);
        art.record("decay_" + name + ".svg",
                   io::decay_plot_svg(rep.h, ys, rep.fit_H.rate, rep.fit_H.intercept,
                                      "restriction decay: " + name),
                   "decay_rate_fit", "probe." + name);
    }
}

carleman::GeodesicSphereModel carleman_model(const config::Config& cfg) {
    Box chart;
    auto box = cfg.num_list("carleman.box");  // y'lo y'hi ynlo ynhi xi'lo xi'hi xinlo xinhi
    if (box.size() != 8)
        throw std::invalid_argument("config error: carleman.box needs 8 entries");
    chart.lo = {box[0], box[2], box[4], box[6]};
    chart.hi = {box[1], box[3], box[5], box[7]};
    const std::string kind = cfg.str_or("carleman.model", "circle");
    carleman::GeodesicSphereModel m =
        kind == "flat" ? carleman::GeodesicSphereModel::flat(chart)
        : kind == "concave"
            ? carleman::GeodesicSphereModel::circle_concave(
                  cfg.num_or("carleman.r", 1.0), chart)
            : carleman::GeodesicSphereModel::circle(cfg.num_or("carleman.r", 1.0), chart);
    if (cfg.has("carleman.V")) {
        m = m.with_potential(expr::parse_field(cfg.str("carleman.V")),
                             cfg.num_or("carleman.E", 1.0));
    }
    return m;
}

void stage_carleman(const config::Config& cfg, Artifacts& art) {
    auto model = carleman_model(cfg);
    const double beta = cfg.num_or("carleman.beta", 1.0);
    const double tau = cfg.num_or("carleman.tau", 1e-3);
    const double c_Y = cfg.num_or("carleman.c_Y", 1.5);
    const double eps = cfg.num_or("carleman.eps", c_Y / 20.0);
    auto w = carleman::make_weight(tau, eps, c_Y, beta);

    PhaseGrid grid;
    grid.box = model.chart;
    auto counts = cfg.num_list_or("carleman.counts", {48, 48, 48, 48});
    grid.counts.assign(counts.size(), 0);
    for (size_t i = 0; i < counts.size(); ++i)
        grid.counts[i] = static_cast<int>(counts[i]);

    const double char_tol = cfg.num_or("carleman.char_tol", 0.0);
    auto scan = carleman::bracket_margin(model, w, grid, char_tol);

    // characteristic sample rows (capped, deterministic order)
    io::CsvTable t;
    t.header = {"y_prime", "y_n", "xi_prime", "xi_n", "abs_p_psi", "bracket"};
    {
        auto cs = carleman::conjugated_symbol(model, w);
        const double tol = char_tol > 0 ? char_tol : 0.0;
        size_t kept = 0;
        for (size_t i = 0; i < grid.size() && kept < 20000; ++i) {
            PhasePoint p = grid.point(i);
            const double ap = std::abs(cs.eval(p));
            if (tol > 0 && ap >= tol) continue;
            if (tol == 0 && ap >= 0.05) continue;
            const double br =
                symbols::poisson_bracket(cs.re, cs.im, p).real();
            t.add_row({p.y[0], p.y[1], p.xi[0], p.xi[1], ap, br});
            ++kept;
        }
    }
    art.record("bracket_scan.csv", t.body(), "bracket_margin", "carleman");

    json s;
    s["found_char_points"] = scan.found;
    s["char_points"] = scan.char_points;
    if (scan.found) {
        s["margin"] = scan.margin;
        s["witness"] = {{"y", scan.witness.y}, {"xi", scan.witness.xi}};
    }
    if (cfg.flag_or("carleman.max_tau", false)) {
        auto est = carleman::max_tau_estimate(
            model, [&](double t2) { return carleman::make_weight(t2, eps, c_Y, beta); },
            grid, char_tol);
        s["tau_Y"] = est.tau_Y;
        json tr = json::array();
        for (auto& [tv, mv] : est.trace) tr.push_back({tv, mv});
        s["tau_trace"] = tr;
    }
    art.record("bracket_summary.json", s.dump(2) + "\n", "bracket_margin", "carleman");
}

void stage_sigma_min(const config::Config& cfg, Artifacts& art,
                     std::vector<std::string>& warnings) {
    Box chart;
    const double cY = cfg.num_or("sigma_min.c_Y", 0.265);
    const double eps = cfg.num_or("sigma_min.eps", 0.1325);
    const double tau = cfg.num_or("sigma_min.tau", 0.0);
    chart.lo = {-cY, -2 * eps, -4, -4};
    chart.hi = {cY, tau + 2 * eps, 4, 4};
    const std::string kind = cfg.str_or("sigma_min.model", "circle");
    auto model = kind == "concave"
                     ? carleman::GeodesicSphereModel::circle_concave(
                           cfg.num_or("sigma_min.r", 1.0), chart)
                     : carleman::GeodesicSphereModel::circle(
                           cfg.num_or("sigma_min.r", 1.0), chart);
    auto w = carleman::make_weight(tau, eps, cY, cfg.num_or("sigma_min.beta", 1.0));
    auto hs = cfg.num_list_or("sigma_min.h_values", {0.04, 0.02, 0.01});
    const int res = static_cast<int>(cfg.num_or("sigma_min.resolution", 96));

    auto pts = carleman::discrete_carleman_sigma_min(model, w, hs, res);
    io::CsvTable t;
    t.header = {"h", "sigma_min"};
    std::vector<double> hv, sv;
    for (auto& p : pts) {
        t.add_row({p.h, p.sigma_min});
        hv.push_back(p.h);
        sv.push_back(p.sigma_min);
    }
    art.record("sigma_min.csv", t.body(), "discrete_carleman_sigma_min", "sigma_min");
    auto fit = loglog_slope(hv, sv);
    json s;
    s["slope"] = fit.slope;
    s["stderr"] = fit.stderr_slope;
    s["resolution"] = res;
    const bool in_window = fit.slope >= 0.4 && fit.slope <= 0.8;
    s["slope_in_target_window"] = in_window;
    art.record("sigma_min.json", s.dump(2) + "\n", "discrete_carleman_sigma_min",
               "sigma_min");
    art.record("sigma_min.svg",
               io::loglog_plot_svg(hv, sv, fit.slope, "sigma_min vs h"),
               "discrete_carleman_sigma_min", "sigma_min");
    if (!in_window && kind != "concave")
        warnings.push_back(
            "sigma_min slope " + io::format_double(fit.slope) +
            " outside [0.4, 0.8]; resolution=" + std::to_string(res) +
            " may be insufficient for the smallest h");
}

void stage_factorize(const config::Config& cfg, Artifacts& art) {
    symbols::SymbolExpansion q;
    q.order_m = 0;
    q.terms.push_back(expr::parse_field(cfg.str("factorize.q0")));
    if (cfg.has("factorize.q1"))
        q.terms.push_back(expr::parse_field(cfg.str("factorize.q1")));
    Box region;
    const double L = cfg.num_or("factorize.length", 2.0 * M_PI);
    region.lo = {0.0, -2048.0};
    region.hi = {L, 2048.0};
    q.region = region;
    symbols::ScalarField B = expr::parse_field(cfg.str("factorize.B"));

    auto Ks = cfg.num_list_or("factorize.K_values", {1, 2, 3});
    auto hs = cfg.num_list_or("factorize.h_values",
                              {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128});
    const double ramp = cfg.num_or("factorize.cutoff_ramp", 0.5);
    Func1D chi1{[L, ramp](double x) {
                    return smooth_window(x, 0.18 * L, 0.82 * L, ramp);
                },
                {}};
    Func1D chi2{[L, ramp](double x) {
                    return smooth_window(x, 0.28 * L, 0.72 * L, ramp);
                },
                {}};

    json meta;
    meta["K"] = json::array();
    for (double Kd : Ks) {
        const int K = static_cast<int>(Kd);
        auto fact = factorize::factor_symbols(q, B, K);
        factorize::ResidualFitOptions opts;
        opts.grid_points = static_cast<int>(cfg.num_or("factorize.grid_points", 1024));
        opts.num_test_functions =
            static_cast<int>(cfg.num_or("factorize.test_functions", 12));
        opts.seed = static_cast<uint64_t>(cfg.num_or("seed", 42));
        opts.domain_length = L;
        auto rf = factorize::residual_order_fit(q, fact, chi1, chi2, hs, opts);

        io::CsvTable t;
        t.header = {"h", "residual"};
        for (auto& [h, r] : rf.trace) t.add_row({h, r});
        const std::string csv = "factorize_residual_K" + std::to_string(K) + ".csv";
        art.record(csv, t.body(), "residual_order_fit", "factorize");
        meta["K"].push_back({{"order", K},
                             {"slope", rf.fit.slope},
                             {"stderr", rf.fit.stderr_slope},
                             {"c0", fact.c0},
                             {"trace_csv", csv}});
    }
    art.record("factorization.json", meta.dump(2) + "\n", "factor_symbols",
               "factorize");
}

void stage_lacunarity(const config::Config& cfg, Artifacts& art,
                      const models::EigenfunctionFamily& fam,
                      const microlocal::SupportEstimate* K_hat) {
    if (K_hat == nullptr)
        throw std::invalid_argument(
            "config error: [lacunarity] requires the [support] stage");
    auto c2 = cfg.num_list("lacunarity.chi2");  // [a, b, ramp]
    auto c1 = cfg.num_list("lacunarity.chi1");
    if (c1.size() != 3 || c2.size() != 3)
        throw std::invalid_argument("config error: lacunarity.chi needs [a, b, ramp]");
    Func1D chi1{[=](double x) { return smooth_window(x, c1[0], c1[1], c1[2]); }, {}};
    Func1D chi2{[=](double x) { return smooth_window(x, c2[0], c2[1], c2[2]); }, {}};

    microlocal::OperatorApplier Q;  // identity by default
    const std::string qkind = cfg.str_or("lacunarity.q", "identity");
    if (qkind == "eigen-annihilator") {
        const Func1D fw = fam.weight;
        Q = [fw](const models::FamilyEntry& e, const microlocal::GridFn& u, double h) {
            // (P(h) - E(h)) u on the periodic grid, divergence form weights
            microlocal::GridFn out = u;
            const int N = u.grid.n;
            const double dx = u.grid.dx();
            for (int i = 0; i < N; ++i) {
                const double x = u.grid.x(i);
                const double fc = fw.f ? fw(x) : 1.0;
                const double fm = fw.f ? fw(x - 0.5 * dx) : 1.0;
                const double fp = fw.f ? fw(x + 0.5 * dx) : 1.0;
                const Complex um = u.v[(i - 1 + N) % N], up = u.v[(i + 1) % N];
                const double lam_h = e.lambda_h;
                const double V = fc != 0.0 ? lam_h * lam_h / (fc * fc) : 0.0;
                out.v[i] = h * h * (fm * (u.v[i] - um) + fp * (u.v[i] - up)) /
                               (fc * dx * dx) +
                           (V - e.E) * u.v[i];
            }
            return out;
        };
    }
    auto fit = microlocal::lacunarity_fit(Q, fam, chi1, chi2, {c2[0], c2[1]}, *K_hat);
    json s;
    s["q"] = qkind;
    s["floor_limited"] = fit.floor_limited;
    if (!fit.floor_limited) {
        s["C"] = fit.C;
        s["intercept"] = fit.intercept;
        s["stderr"] = fit.stderr_C;
    }
    json tr = json::array();
    for (size_t i = 0; i < fit.h.size(); ++i) tr.push_back({fit.h[i], fit.n[i]});
    s["trace"] = tr;
    art.record("lacunarity.json", s.dump(2) + "\n", "lacunarity_fit", "lacunarity");
}

}  // namespace

RunResult run(const config::Config& cfg, const std::string& outdir_override) {
    RunResult res;
    const std::string outdir =
        outdir_override.empty() ? cfg.str_or("run.output", "out") : outdir_override;
    res.outdir = outdir;

    Artifacts art;
    art.dir = outdir;
    art.manifest["schema_version"] = kSchemaVersion;
    art.manifest["generator"] = Rng::kGeneratorId;
    art.manifest["config_hash"] = io::hash_hex(cfg.text());
    art.manifest["seed"] = cfg.num_or("seed", 42);

    // validate h grid early (schema-level check)
    std::vector<double> h_grid;
    if (cfg.has("h_grid.values")) {
        h_grid = cfg.num_list("h_grid.values");
        for (size_t i = 0; i + 1 < h_grid.size(); ++i)
            if (h_grid[i] <= h_grid[i + 1])
                throw std::invalid_argument(
                    "config error: h_grid.values must be strictly decreasing");
        for (double h : h_grid)
            if (h <= 0)
                throw std::invalid_argument("config error: h_grid.values must be positive");
    }

    std::string stage;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        std::unique_ptr<models::EigenfunctionFamily> fam;
        std::unique_ptr<microlocal::SupportEstimate> K_hat;
        if (cfg.has("model.type")) {
            stage = "model";
            if (h_grid.empty())
                throw std::invalid_argument("config error: missing h_grid.values");
            fam = std::make_unique<models::EigenfunctionFamily>(
                build_family(cfg, h_grid));
            emit_family(art, *fam);
        }
        if (cfg.has("support.cell_size") && fam) {
            stage = "support";
            if (cfg.has("support.h_values")) {
                auto fam2 = build_family(cfg, cfg.num_list("support.h_values"));
                stage_support(cfg, art, fam2, K_hat);
            } else {
                stage_support(cfg, art, *fam, K_hat);
            }
        }
        if (fam && !cfg.subsections("probe").empty()) {
            stage = "analysis";
            stage_probes(cfg, art, *fam, K_hat.get());
        }
        if (cfg.has("carleman.box")) {
            stage = "carleman";
            stage_carleman(cfg, art);
        }
        if (cfg.flag_or("sigma_min.enabled", false)) {
            stage = "sigma_min";
            stage_sigma_min(cfg, art, art.warnings);
        }
        if (cfg.has("factorize.q0")) {
            stage = "factorize";
            stage_factorize(cfg, art);
        }
        if (cfg.has("lacunarity.chi2") && fam) {
            stage = "lacunarity";
            stage_lacunarity(cfg, art, *fam, K_hat.get());
        }
    } catch (const std::invalid_argument&) {
        throw;  // config/schema error: exit 2 at the CLI
    } catch (const std::exception& ex) {
        res.exit_code = 3;
        res.failed_stage = stage;
        art.manifest["failed_stage"] = stage;
        art.manifest["error"] = ex.what();
        io::write_text(art.dir / "manifest.json", art.manifest.dump(2) + "\n");
        return res;
    }

    const auto t1 = std::chrono::steady_clock::now();
    art.manifest["timings_ms"] = {
        {"total",
         std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()}};
    art.manifest["warnings"] = art.warnings;
    io::write_text(art.dir / "manifest.json", art.manifest.dump(2) + "\n");
    res.warnings = art.warnings;
    return res;
}

namespace {

bool approx_eq(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

std::vector<std::vector<double>> read_csv_columns(const fs::path& p, size_t ncols) {
    const std::string body = io::read_text(p);
    std::vector<std::vector<double>> cols(ncols);
    std::istringstream is(body);
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        for (size_t c = 0; c < ncols && std::getline(ls, cell, ','); ++c)
            cols[c].push_back(std::stod(cell));
    }
    return cols;
}

}  // namespace

VerifyResult verify(const std::string& artifact_dir) {
    VerifyResult out;
    const fs::path dir(artifact_dir);
    auto check = [&](const std::string& name, bool ok, const std::string& msg = "") {
        out.checks.emplace_back(name, ok);
        if (!ok) {
            out.pass = false;
            if (!msg.empty()) out.messages.push_back(name + ": " + msg);
        }
    };

    json manifest;
    try {
        manifest = json::parse(io::read_text(dir / "manifest.json"));
    } catch (const std::exception& ex) {
        throw std::runtime_error(std::string("verify: missing or bad manifest: ") +
                                 ex.what());
    }
    if (!manifest.contains("schema_version") ||
        manifest["schema_version"].get<int>() != kSchemaVersion) {
        throw std::runtime_error(
            "verify: artifact schema version mismatch (found " +
            (manifest.contains("schema_version")
                 ? std::to_string(manifest["schema_version"].get<int>())
                 : std::string("none")) +
            ", expected " + std::to_string(kSchemaVersion) + ")");
    }

    // restriction reports: refit from traces, recompute verdicts, monotonicity
    for (auto& [name, info] : manifest["artifacts"].items()) {
        if (name.rfind("restriction_", 0) != 0) continue;
        const std::string probe = name.substr(12, name.size() - 12 - 5);
        json r = json::parse(io::read_text(dir / name));
        auto cols = read_csv_columns(dir / ("trace_" + probe + ".csv"), 3);
        const auto& h = cols[0];
        bool desc = true;
        for (size_t i = 0; i + 1 < h.size(); ++i) desc = desc && h[i] > h[i + 1];
        check("trace-h-decreasing[" + probe + "]", desc);

        const double floor_log = std::log(1e3 * std::numeric_limits<double>::epsilon());
        std::vector<double> hu, yu, hut, yut;
        for (size_t i = 0; i < h.size(); ++i) {
            if (cols[1][i] >= floor_log) {
                hu.push_back(h[i]);
                yu.push_back(cols[1][i]);
            }
            if (cols[2][i] >= floor_log) {
                hut.push_back(h[i]);
                yut.push_back(cols[2][i]);
            }
        }
        bool refit_ok = false;
        analysis::VerdictSet vs;
        double rate_H = 0, se_H = 0, rate_T = 0, se_T = 0;
        try {
            auto fH = decay_rate_fit(hu, yu);
            auto fT = decay_rate_fit(hut, yut);
            rate_H = fH.rate;
            se_H = fH.stderr_rate;
            rate_T = fT.rate;
            se_T = fT.stderr_rate;
            refit_ok = approx_eq(fH.rate, r["rate_H"].get<double>(), 1e-9) &&
                       approx_eq(fT.rate, r["rate_tube"].get<double>(), 1e-9);
        } catch (...) {
            refit_ok = false;
        }
        check("rate-refit[" + probe + "]", refit_ok,
              "stored rates do not match a refit of the stored trace");

        vs = analysis::theorem_verdicts(rate_H, se_H, rate_T, se_T,
                                        r["d_R"].get<double>(), r["d_A"].get<double>(),
                                        r["beta"].get<double>(),
                                        r["eps_margin"].get<double>());
        const auto& jv = r["verdicts"];
        check("verdict-recompute[" + probe + "]",
              jv["sandwich"].get<bool>() == vs.sandwich &&
                  jv["agmon_consistency"].get<bool>() == vs.agmon_consistency &&
                  jv["schrodinger_restriction"].get<bool>() ==
                      vs.schrodinger_restriction);
        check("tube-le-restriction[" + probe + "]",
              rate_T <= rate_H + se_H + se_T + 1e-12,
              "tube rate exceeds restriction rate beyond stderr");
        check("metric-comparison[" + probe + "]",
              r["d_A"].get<double>() <=
                  r["beta"].get<double>() * r["d_R"].get<double>() + 0.05 + 1e-12,
              "d_A exceeds beta * d_R beyond tolerance");
    }

    // support monotonicity in r_tol
    if (fs::exists(dir / "support.json")) {
        json s = json::parse(io::read_text(dir / "support.json"));
        auto width = [](const json& iv) {
            double w = 0;
            for (auto& ab : iv) w += ab[1].get<double>() - ab[0].get<double>();
            return w;
        };
        if (s.contains("K_hat_half_tol") && s.contains("K_hat_double_tol")) {
            check("support-monotone-in-rtol",
                  width(s["K_hat_half_tol"]) <= width(s["K_hat"]) + 1e-12 &&
                      width(s["K_hat"]) <= width(s["K_hat_double_tol"]) + 1e-12);
        }
        if (s.contains("inclusion_within_one_cell"))
            check("support-allowed-inclusion", s["inclusion_within_one_cell"].get<bool>());
    }

    // sigma_min slope recompute
    if (fs::exists(dir / "sigma_min.json")) {
        json s = json::parse(io::read_text(dir / "sigma_min.json"));
        auto cols = read_csv_columns(dir / "sigma_min.csv", 2);
        auto fit = loglog_slope(cols[0], cols[1]);
        check("sigma-min-slope-refit", approx_eq(fit.slope, s["slope"].get<double>(), 1e-9));
    }

    // artifact hashes last: catches any edit not already named above
    for (auto& [name, info] : manifest["artifacts"].items()) {
        const std::string body = io::read_text(dir / name);
        check("artifact-hash[" + name + "]",
              io::hash_hex(body) == info["hash"].get<std::string>(),
              "stored hash differs (artifact edited after the run?)");
    }
    return out;
}

int replot(const std::string& artifact_dir) {
    const fs::path dir(artifact_dir);
    json manifest = json::parse(io::read_text(dir / "manifest.json"));
    int made = 0;
    for (auto& [name, info] : manifest["artifacts"].items()) {
        if (name.rfind("trace_", 0) == 0) {
            const std::string probe = name.substr(6, name.size() - 6 - 4);
            auto cols = read_csv_columns(dir / name, 3);
            std::vector<double> ys;
            for (size_t i = 0; i < cols[0].size(); ++i)
                ys.push_back(-cols[0][i] * cols[1][i]);
            auto fit = decay_rate_fit(cols[0], cols[1]);
            io::write_text(dir / ("decay_" + probe + ".svg"),
                           io::decay_plot_svg(cols[0], ys, fit.rate, fit.intercept,
                                              "restriction decay: " + probe));
            ++made;
        }
        if (name == "sigma_min.csv") {
            auto cols = read_csv_columns(dir / name, 2);
            auto fit = loglog_slope(cols[0], cols[1]);
            io::write_text(dir / "sigma_min.svg",
                           io::loglog_plot_svg(cols[0], cols[1], fit.slope,
                                               "sigma_min vs h"));
            ++made;
        }
    }
    return made;
}

std::string list_models() {
    return
        "warped          warp profile f on the base circle; fiber momentum lambda;\n"
        "                effective potential lambda_h^2 / f^2; weighted measure f dx\n"
        "schrodinger1d   -h^2 d^2/dx^2 + V(x) on an interval (Dirichlet) or circle\n"
        "torus           exact plane-wave joint eigenfunctions e^{i<k,x>} (2 pi)^{-n/2}\n"
        "carleman models: flat | circle r | concave r (bracket scans, sigma_min)\n";
}

}  // namespace eflab::pipelines
