#include "eflab/models.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "eflab/rng.hpp"

namespace eflab::models {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct Discretization {
    std::vector<double> x;   // nodes carried in the entry
    std::vector<double> w;   // quadrature weights (includes measure weight)
    SpMat A;                 // operator matrix acting on the stored DOFs
    bool periodic = false;
};

// weight = nullptr: plain Laplacian. Divergence form keeps the matrix
// symmetric under the weighted inner product.
Discretization assemble(const Domain1D& dom, const Func1D& V, const Func1D* weight,
                        double h, int N) {
    Discretization d;
    if (dom.kind == DomainKind::Circle) {
        const double dx = dom.length() / N;
        d.periodic = true;
        d.x.resize(N);
        d.w.resize(N);
        std::vector<Triplet> trip;
        trip.reserve(3 * N);
        for (int i = 0; i < N; ++i) {
            const double xi = dom.a + i * dx;
            d.x[i] = xi;
            const double fc = weight ? (*weight)(xi) : 1.0;
            const double fm = weight ? (*weight)(xi - 0.5 * dx) : 1.0;
            const double fp = weight ? (*weight)(xi + 0.5 * dx) : 1.0;
            d.w[i] = fc * dx;
            const double c = h * h / (fc * dx * dx);
            trip.emplace_back(i, i, c * (fm + fp) + V(xi));
            trip.emplace_back(i, (i + 1) % N, -c * fp);
            trip.emplace_back(i, (i - 1 + N) % N, -c * fm);
        }
        d.A.resize(N, N);
        d.A.setFromTriplets(trip.begin(), trip.end());
    } else {
        // Dirichlet interval: interior nodes only
        const double dx = dom.length() / (N + 1);
        d.x.resize(N);
        d.w.resize(N);
        std::vector<Triplet> trip;
        trip.reserve(3 * N);
        for (int i = 0; i < N; ++i) {
            const double xi = dom.a + (i + 1) * dx;
            d.x[i] = xi;
            const double fc = weight ? (*weight)(xi) : 1.0;
            const double fm = weight ? (*weight)(xi - 0.5 * dx) : 1.0;
            const double fp = weight ? (*weight)(xi + 0.5 * dx) : 1.0;
            d.w[i] = fc * dx;
            const double c = h * h / (fc * dx * dx);
            trip.emplace_back(i, i, c * (fm + fp) + V(xi));
            if (i + 1 < N) trip.emplace_back(i, i + 1, -c * fp);
            if (i - 1 >= 0) trip.emplace_back(i, i - 1, -c * fm);
        }
        d.A.resize(N, N);
        d.A.setFromTriplets(trip.begin(), trip.end());
    }
    return d;
}

// Neumann half-domain [a, a+L/2] for even-parity states of a symmetric
// profile; ghost reflection at both ends.
Discretization assemble_even_half(const Domain1D& dom, const Func1D& V,
                                  const Func1D* weight, double h, int N) {
    Discretization d;
    const double half = 0.5 * dom.length();
    const double dx = half / (N - 1);
    d.x.resize(N);
    d.w.resize(N);
    std::vector<Triplet> trip;
    trip.reserve(3 * N);
    for (int i = 0; i < N; ++i) {
        const double xi = dom.a + i * dx;
        d.x[i] = xi;
        const double fc = weight ? (*weight)(xi) : 1.0;
        const double fm = weight ? (*weight)(xi - 0.5 * dx) : 1.0;
        const double fp = weight ? (*weight)(xi + 0.5 * dx) : 1.0;
        const double edge = (i == 0 || i == N - 1) ? 0.5 : 1.0;
        d.w[i] = fc * dx * edge;
        const double c = h * h / (fc * dx * dx);
        trip.emplace_back(i, i, c * (fm + fp) + V(xi));
        if (i + 1 < N) trip.emplace_back(i, i + 1, i == 0 ? -c * (fm + fp) : -c * fp);
        if (i - 1 >= 0)
            trip.emplace_back(i, i - 1, i == N - 1 ? -c * (fm + fp) : -c * fm);
    }
    d.A.resize(N, N);
    d.A.setFromTriplets(trip.begin(), trip.end());
    return d;
}

struct EigOut {
    double E = 0.0;
    std::vector<double> v;
    double residual = 0.0;
};

EigOut nearest_eigenpair(const Discretization& d, double sigma, int max_iter = 120) {
    const int N = static_cast<int>(d.A.rows());
    SpMat M = d.A;
    for (int i = 0; i < N; ++i) M.coeffRef(i, i) -= sigma;
    M.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(M);
    lu.factorize(M);
    if (lu.info() != Eigen::Success)
        throw std::runtime_error("eigensolver: LU factorization failed");

    Eigen::VectorXd v = Eigen::VectorXd::Ones(N);
    for (int i = 0; i < N; ++i) v[i] += 0.01 * std::cos(double(i));
    v.normalize();
    double E = sigma;
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd z = lu.solve(v);
        v = z / z.norm();
        const double En = v.dot(d.A * v) / v.dot(v);
        if (std::abs(En - E) < 1e-15 * std::max(1.0, std::abs(En)) && it > 2) {
            E = En;
            break;
        }
        E = En;
    }
    EigOut out;
    out.E = E;
    out.residual = (d.A * v - E * v).norm() / v.norm();
    out.v.assign(v.data(), v.data() + N);
    return out;
}

// Riccati right-hand side: h w' = (V - E) - w^2.
double riccati_rhs(const Func1D& V, double E, double h, double t, double w) {
    return ((V(t) - E) - w * w) / h;
}

// RK4 integration of w along [t0, t1] (either direction), accumulating
// I(t) = int_{t0}^{t} w ds on the provided output nodes (must lie between
// t0 and t1 in integration order).
void integrate_riccati(const Func1D& V, double E, double h, double t0, double t1,
                       double w0, const std::vector<double>& out_nodes,
                       std::vector<double>& out_I) {
    const int M = static_cast<int>(out_nodes.size());
    out_I.assign(M, 0.0);
    const double span = t1 - t0;
    const double target_step = std::min(h / 40.0, std::abs(span) / 64.0);
    double w = w0;
    double I = 0.0;
    double t = t0;
    int next = 0;
    const double dir = span >= 0 ? 1.0 : -1.0;
    auto step_to = [&](double tn) {
        // one or more RK4 steps from t to tn
        while (std::abs(tn - t) > 1e-15) {
            double dt = dir * std::min(target_step, std::abs(tn - t));
            const double k1 = riccati_rhs(V, E, h, t, w);
            const double k2 = riccati_rhs(V, E, h, t + dt / 2, w + dt / 2 * k1);
            const double k3 = riccati_rhs(V, E, h, t + dt / 2, w + dt / 2 * k2);
            const double k4 = riccati_rhs(V, E, h, t + dt, w + dt * k3);
            const double wn = w + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
            I += 0.5 * (w + wn) * dt;
            w = wn;
            t += dt;
        }
    };
    for (; next < M; ++next) {
        step_to(out_nodes[next]);
        out_I[next] = I;
    }
}

}  // namespace

std::vector<double> reconstruct_log_abs(const std::vector<double>& x,
                                        const std::vector<double>& abs_v,
                                        const Func1D& V, double E, double h,
                                        DomainKind kind, bool* any_reconstructed) {
    const int N = static_cast<int>(x.size());
    double vmax = 0.0;
    for (double a : abs_v) vmax = std::max(vmax, a);
    std::vector<double> out(N);
    for (int i = 0; i < N; ++i)
        out[i] = std::log(std::max(abs_v[i], 1e-300));
    if (any_reconstructed) *any_reconstructed = false;
    if (vmax == 0.0) return out;

    const double direct_floor = 1e-11 * vmax;  // below this the solver value is noise
    const double anchor_level = 1e-5 * vmax;   // anchor where direct is still clean

    // forbidden runs of V > E over the stored nodes
    std::vector<std::pair<int, int>> runs;
    int i = 0;
    while (i < N) {
        if (V(x[i]) > E) {
            int j = i;
            while (j + 1 < N && V(x[j + 1]) > E) ++j;
            runs.emplace_back(i, j);
            i = j + 1;
        } else {
            ++i;
        }
    }
    // On a circle a run may wrap; handle the common single-interior-band case
    // (wrapping bands are split into the two end runs and treated one-sided).

    for (auto [i0, i1] : runs) {
        if (i1 - i0 < 8) continue;
        const bool left_open = (i0 > 0) || kind == DomainKind::Circle;
        const bool right_open = (i1 < N - 1) || kind == DomainKind::Circle;

        std::vector<double> nodes(x.begin() + i0, x.begin() + i1 + 1);
        const int M = static_cast<int>(nodes.size());

        // branch decaying rightward from the left edge: w ~ -sqrt(V-E);
        // stable integrating right -> left, then anchored near the left edge.
        std::vector<double> Lleft, Lright;
        if (left_open) {
            std::vector<double> rev(nodes.rbegin(), nodes.rend());
            std::vector<double> I;
            const double winit = -std::sqrt(std::max(V(rev.front()) - E, 0.0));
            integrate_riccati(V, E, h, rev.front(), rev.back(), winit, rev, I);
            Lleft.assign(M, 0.0);
            for (int kk = 0; kk < M; ++kk) Lleft[M - 1 - kk] = I[kk] / h;
        }
        if (right_open) {
            std::vector<double> I;
            const double winit = std::sqrt(std::max(V(nodes.front()) - E, 0.0));
            integrate_riccati(V, E, h, nodes.front(), nodes.back(), winit, nodes, I);
            Lright.assign(M, 0.0);
            for (int kk = 0; kk < M; ++kk) Lright[kk] = I[kk] / h;
        }

        // anchor each branch where the direct eigenvector is clean
        auto anchor = [&](std::vector<double>& L, bool from_left) {
            if (L.empty()) return false;
            int best = -1;
            if (from_left) {
                for (int kk = 2; kk < M - 2; ++kk)
                    if (abs_v[i0 + kk] >= anchor_level)
                        best = kk;
                    else
                        break;
            } else {
                for (int kk = M - 3; kk >= 2; --kk)
                    if (abs_v[i0 + kk] >= anchor_level)
                        best = kk;
                    else
                        break;
            }
            if (best < 0) return false;
            const double shift = std::log(abs_v[i0 + best]) - L[best];
            for (auto& l : L) l += shift;
            return true;
        };
        const bool okL = left_open && anchor(Lleft, true);
        const bool okR = right_open && anchor(Lright, false);
        if (!okL && !okR) continue;

        for (int kk = 0; kk < M; ++kk) {
            const int gi = i0 + kk;
            if (abs_v[gi] >= direct_floor) continue;  // direct value trusted
            double lv = -std::numeric_limits<double>::infinity();
            if (okL) lv = std::max(lv, Lleft[kk]);
            if (okR) lv = std::max(lv, Lright[kk]);
            if (std::isfinite(lv)) {
                out[gi] = lv;
                if (any_reconstructed) *any_reconstructed = true;
            }
        }
    }
    return out;
}

FamilyEntry solve_1d_eigen(const SchrodingerProblem1D& prob, double h,
                           const EigenSolveOptions& opts) {
    if (!(h > 0)) throw std::invalid_argument("solve_1d_eigen: h <= 0");
    const double L = prob.domain.length();
    int N = static_cast<int>(std::ceil(prob.points_per_h * L / h));
    if (N < 16) throw std::runtime_error("solve_1d_eigen: grid does not resolve h");

    auto run = [&](int n) { return assemble(prob.domain, prob.V, nullptr, h, n); };

    Discretization d = run(N);
    EigOut e = nearest_eigenpair(d, prob.E_target);
    double E = e.E;
    if (prob.richardson) {
        Discretization d2 = run(2 * N);
        EigOut e2 = nearest_eigenpair(d2, prob.E_target);
        E = (4.0 * e2.E - e.E) / 3.0;
        d = std::move(d2);
        e = std::move(e2);
    }
    const double window = opts.window > 0 ? opts.window : std::max(0.5, 10 * h);
    if (std::abs(E - prob.E_target) > window)
        throw std::runtime_error("solve_1d_eigen: no eigenvalue within window of E_target");

    // normalize: sum w_i v_i^2 = 1
    double nrm = 0.0;
    for (size_t i = 0; i < e.v.size(); ++i) nrm += d.w[i] * e.v[i] * e.v[i];
    const double s = 1.0 / std::sqrt(nrm);
    FamilyEntry entry;
    entry.h = h;
    entry.E = E;
    entry.e_drift = E - prob.E_target;
    entry.residual = e.residual;
    entry.x = d.x;
    entry.v.resize(e.v.size());
    std::vector<double> absv(e.v.size());
    for (size_t i = 0; i < e.v.size(); ++i) {
        entry.v[i] = Complex(e.v[i] * s, 0.0);
        absv[i] = std::abs(e.v[i] * s);
    }
    entry.log_abs = reconstruct_log_abs(entry.x, absv, prob.V, e.E, h,
                                        prob.domain.kind, &entry.reconstructed);
    return entry;
}

EigenfunctionFamily schrodinger_family(const SchrodingerProblem1D& prob) {
    EigenfunctionFamily fam;
    fam.model = "schrodinger1d";
    fam.domain = prob.domain;
    fam.V_eff = prob.V;
    fam.weight = Func1D{[](double) { return 1.0; }, [](double) { return 0.0; }};
    fam.E_target = prob.E_target;
    for (double h : prob.h_grid) fam.entries.push_back(solve_1d_eigen(prob, h));
    return fam;
}

EigenfunctionFamily warped_eigenfamily(const WarpedProduct& wp, double E_target) {
    EigenfunctionFamily fam;
    fam.model = "warped";
    fam.domain = Domain1D{DomainKind::Circle, 0.0, wp.base_length};
    fam.weight = wp.f;
    fam.E_target = E_target;
    fam.lambda = wp.lambda;
    fam.fiber_dim = 1;
    // nominal effective potential (lambda, not lambda_h) for the oracles
    fam.V_eff = Func1D{[f = wp.f, lam = wp.lambda](double t) {
                           const double ft = f(t);
                           return lam * lam / (ft * ft);
                       },
                       {}};

    for (double h : wp.h_grid) {
        const long m = std::lround(wp.lambda / h);
        const double lam_h = double(m) * h;
        Func1D Veff{[f = wp.f, lam_h](double t) {
                        const double ft = f(t);
                        return lam_h * lam_h / (ft * ft);
                    },
                    {}};
        const double L = wp.base_length;
        int N = static_cast<int>(std::ceil(wp.points_per_h * L / h));
        if (N % 2) ++N;
        if (N < 32) throw std::runtime_error("warped_eigenfamily: grid does not resolve h");

        auto assemble_at = [&](int n_full) {
            if (wp.even_parity)
                return assemble_even_half(fam.domain, Veff, &wp.f, h, n_full / 2 + 1);
            return assemble(fam.domain, Veff, &wp.f, h, n_full);
        };
        Discretization dc = assemble_at(N);
        EigOut ec = nearest_eigenpair(dc, E_target);
        Discretization d = assemble_at(2 * N);
        EigOut e = nearest_eigenpair(d, E_target);
        const double E_rich = (4.0 * e.E - ec.E) / 3.0;
        if (std::abs(E_rich - E_target) > std::max(0.5, 10 * h))
            throw std::runtime_error("warped_eigenfamily: no eigenvalue near E_target");

        FamilyEntry entry;
        entry.h = h;
        entry.E = E_rich;
        entry.lambda_h = lam_h;
        entry.e_drift = E_rich - E_target;
        entry.residual = e.residual;

        if (wp.even_parity) {
            // expand even half-domain samples to the full circle
            const int Nh = static_cast<int>(d.x.size());
            double nrm = 0.0;
            for (int i = 0; i < Nh; ++i) nrm += d.w[i] * e.v[i] * e.v[i];
            nrm *= 2.0;  // both halves
            const double s = 1.0 / std::sqrt(nrm);
            entry.x.resize(2 * (Nh - 1));
            entry.v.resize(entry.x.size());
            const double dx = d.x[1] - d.x[0];
            for (int i = 0; i < Nh; ++i) {
                entry.x[i] = d.x[i];
                entry.v[i] = Complex(e.v[i] * s, 0.0);
            }
            for (int i = 1; i + 1 < Nh; ++i) {
                const int j = 2 * (Nh - 1) - i;
                entry.x[j] = wp.base_length - d.x[i];
                entry.v[j] = Complex(e.v[i] * s, 0.0);
            }
            (void)dx;
        } else {
            double nrm = 0.0;
            for (size_t i = 0; i < e.v.size(); ++i) nrm += d.w[i] * e.v[i] * e.v[i];
            const double s = 1.0 / std::sqrt(nrm);
            entry.x = d.x;
            entry.v.resize(e.v.size());
            for (size_t i = 0; i < e.v.size(); ++i) entry.v[i] = Complex(e.v[i] * s, 0.0);
        }
        std::vector<double> absv(entry.v.size());
        for (size_t i = 0; i < entry.v.size(); ++i) absv[i] = std::abs(entry.v[i]);
        entry.log_abs = reconstruct_log_abs(entry.x, absv, Veff, e.E, h,
                                            DomainKind::Circle, &entry.reconstructed);
        fam.entries.push_back(std::move(entry));
    }
    return fam;
}

double warped_symmetry_defect(const WarpedProduct& wp, double E_target, double h,
                              int pairs) {
    (void)E_target;
    const long m = std::lround(wp.lambda / h);
    const double lam_h = double(m) * h;
    Func1D Veff{[f = wp.f, lam_h](double t) {
                    const double ft = f(t);
                    return lam_h * lam_h / (ft * ft);
                },
                {}};
    Domain1D dom{DomainKind::Circle, 0.0, wp.base_length};
    int N = static_cast<int>(std::ceil(wp.points_per_h * wp.base_length / h));
    if (N % 2) ++N;
    Discretization d = assemble(dom, Veff, &wp.f, h, N);

    double scale = 0.0;
    for (int i = 0; i < N; ++i) scale = std::max(scale, std::abs(d.A.coeff(i, i)));
    Rng rng(4242u, "warped-symmetry");
    double worst = 0.0;
    for (int t = 0; t < pairs; ++t) {
        Eigen::VectorXd u(N), v(N);
        for (int i = 0; i < N; ++i) {
            u[i] = rng.normal();
            v[i] = rng.normal();
        }
        const Eigen::VectorXd Au = d.A * u, Av = d.A * v;
        double uAv = 0.0, Auv = 0.0, nu = 0.0, nv = 0.0;
        for (int i = 0; i < N; ++i) {
            uAv += d.w[i] * u[i] * Av[i];
            Auv += d.w[i] * Au[i] * v[i];
            nu += d.w[i] * u[i] * u[i];
            nv += d.w[i] * v[i] * v[i];
        }
        worst = std::max(worst,
                         std::abs(uAv - Auv) / (scale * std::sqrt(nu * nv)));
    }
    return worst;
}

FamilyEntry torus_joint_eigen(const std::vector<int>& k, double h, int samples) {
    if (k.empty()) throw std::invalid_argument("torus_joint_eigen: empty mode vector");
    const int n = static_cast<int>(k.size());
    FamilyEntry entry;
    entry.h = h;
    entry.E = 0.0;
    const double norm = std::pow(2.0 * M_PI, -0.5 * n);
    entry.x.resize(samples);
    entry.v.resize(samples);
    entry.log_abs.resize(samples);
    for (int i = 0; i < samples; ++i) {
        const double x = 2.0 * M_PI * i / samples;
        entry.x[i] = x;
        const double phase = k[0] * x;  // first-axis trace
        entry.v[i] = norm * Complex(std::cos(phase), std::sin(phase));
        entry.log_abs[i] = std::log(norm);
    }
    // joint eigenvalues (k_j h)^2 of the squared momentum operators
    entry.E = 0.0;
    for (int kj : k) entry.E += (kj * h) * (kj * h);
    entry.residual = 0.0;
    return entry;
}

EigenfunctionFamily torus_family(const std::vector<double>& xi_target,
                                 const std::vector<double>& h_grid, int samples) {
    EigenfunctionFamily fam;
    fam.model = "torus";
    fam.domain = Domain1D{DomainKind::Circle, 0.0, 2.0 * M_PI};
    fam.weight = Func1D{[](double) { return 1.0; }, [](double) { return 0.0; }};
    fam.V_eff = Func1D{[](double) { return 0.0; }, [](double) { return 0.0; }};
    double e0 = 0.0;
    for (double xi : xi_target) e0 += xi * xi;
    fam.E_target = e0;
    for (double h : h_grid) {
        std::vector<int> k(xi_target.size());
        for (size_t j = 0; j < xi_target.size(); ++j)
            k[j] = static_cast<int>(std::lround(xi_target[j] / h));
        FamilyEntry e = torus_joint_eigen(k, h, samples);
        e.lambda_h = k[0] * h;
        e.e_drift = e.E - e0;
        fam.entries.push_back(std::move(e));
    }
    return fam;
}

}  // namespace eflab::models
