#include "eflab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace eflab::microlocal {

namespace {
std::mutex g_fftw_mutex;  // plan creation is not thread-safe

std::vector<Complex> run_fft(const std::vector<Complex>& in, int sign) {
    const int n = static_cast<int>(in.size());
    std::vector<Complex> out(n);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        plan = fftw_plan_dft_1d(
            n,
            reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in.data())),
            reinterpret_cast<fftw_complex*>(out.data()), sign,
            FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_destroy_plan(plan);
    }
    return out;
}
}  // namespace

double GridFn::norm() const {
    double s = 0.0;
    for (const auto& z : v) s += std::norm(z);
    return std::sqrt(s * grid.dx());
}

std::vector<Complex> fft(const std::vector<Complex>& in) { return run_fft(in, FFTW_FORWARD); }

std::vector<Complex> ifft(const std::vector<Complex>& in) {
    auto out = run_fft(in, FFTW_BACKWARD);
    const double inv = 1.0 / in.size();
    for (auto& z : out) z *= inv;
    return out;
}

GridFn quantize_apply(const QuantizedSymbol& a, const GridFn& u, double h) {
    const auto& g = u.grid;
    if (a.xi_window && g.max_momentum(h) > *a.xi_window * (1.0 + 1e-12))
        throw std::domain_error("quantize_apply: resolved momentum window exceeds symbol region");

    GridFn out(g);
    if (a.position && !a.multiplier && a.separable.empty() && !a.general) {
        for (int i = 0; i < g.n; ++i) out.v[i] = a.position(g.x(i)) * u.v[i];
        return out;
    }

    auto uh = fft(u.v);
    if (a.multiplier) {
        for (int k = 0; k < g.n; ++k) uh[k] *= a.multiplier(g.momentum(k, h));
        out.v = ifft(uh);
        return out;
    }
    if (!a.separable.empty()) {
        for (const auto& [cx, mxi] : a.separable) {
            auto wk = uh;
            for (int k = 0; k < g.n; ++k) wk[k] *= mxi(g.momentum(k, h));
            auto w = ifft(wk);
            for (int i = 0; i < g.n; ++i) out.v[i] += cx(g.x(i)) * w[i];
        }
        return out;
    }
    if (a.general) {
        // semidiscrete synthesis: out(x_i) = (1/n) sum_k a(x_i, h k) uh_k e^{2 pi i k i / n}
        const int n = g.n;
        for (int i = 0; i < n; ++i) {
            Complex acc = 0.0;
            const double xi_pos = g.x(i);
            for (int k = 0; k < n; ++k) {
                const int kk = g.wavenumber(k);
                const double phase = 2.0 * M_PI * double(kk) * double(i) / double(n);
                acc += a.general(xi_pos, g.momentum(k, h)) * uh[k] *
                       Complex(std::cos(phase), std::sin(phase));
            }
            out.v[i] = acc / double(n);
        }
        return out;
    }
    throw std::invalid_argument("quantize_apply: empty symbol descriptor");
}

GridFn hD(const GridFn& u, double h) {
    QuantizedSymbol s = QuantizedSymbol::from_multiplier(
        [](double xi) { return Complex(xi, 0.0); });
    return quantize_apply(s, u, h);
}

}  // namespace eflab::microlocal
