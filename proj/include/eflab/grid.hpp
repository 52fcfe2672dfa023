#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "eflab/phase_space.hpp"

namespace eflab::microlocal {

// Uniform grid on a circle of given length; node i sits at x_i = i L / n.
struct PeriodicGrid {
    int n = 0;
    double length = 0.0;

    double dx() const { return length / n; }
    double x(int i) const { return length * i / n; }
    // signed integer wavenumber of FFT bin k
    int wavenumber(int bin) const { return bin <= n / 2 - 1 ? bin : bin - n; }
    // semiclassical momentum carried by bin k: h * 2 pi k / L
    double momentum(int bin, double h) const {
        return h * 2.0 * M_PI * wavenumber(bin) / length;
    }
    double max_momentum(double h) const { return h * 2.0 * M_PI * (n / 2) / length; }
};

struct GridFn {
    PeriodicGrid grid;
    std::vector<Complex> v;

    GridFn() = default;
    explicit GridFn(PeriodicGrid g) : grid(g), v(g.n, Complex{0.0, 0.0}) {}

    double norm() const;  // L2 with the grid measure dx
};

std::vector<Complex> fft(const std::vector<Complex>& in);   // unnormalized forward
std::vector<Complex> ifft(const std::vector<Complex>& in);  // 1/n-normalized inverse

// Standard-quantization symbol descriptor for application on a periodic grid.
// Exactly one evaluation path is used depending on structure:
//   multiplier   Op(a(xi)) u = F^{-1}[a(h k) F u]
//   position     Op(a(x))  u = a(x) u
//   separable    Op(sum_t c_t(x) m_t(xi)) applied term by term (exact)
//   general      semidiscrete sum, O(n^2)
struct QuantizedSymbol {
    std::function<Complex(double)> multiplier;
    std::function<Complex(double)> position;
    std::vector<std::pair<std::function<Complex(double)>, std::function<Complex(double)>>>
        separable;  // (c_t(x), m_t(xi))
    std::function<Complex(double, double)> general;  // a(x, xi)
    std::optional<double> xi_window;  // declared |xi| range of validity

    static QuantizedSymbol from_multiplier(std::function<Complex(double)> m) {
        QuantizedSymbol s;
        s.multiplier = std::move(m);
        return s;
    }
    static QuantizedSymbol from_position(std::function<Complex(double)> c) {
        QuantizedSymbol s;
        s.position = std::move(c);
        return s;
    }
    static QuantizedSymbol from_general(std::function<Complex(double, double)> a) {
        QuantizedSymbol s;
        s.general = std::move(a);
        return s;
    }
};

// Op_h(a) u on the periodic grid. Throws std::domain_error when the resolved
// momentum window exceeds a declared xi_window.
GridFn quantize_apply(const QuantizedSymbol& a, const GridFn& u, double h);

// h D_x via the exact Fourier multiplier.
GridFn hD(const GridFn& u, double h);

}  // namespace eflab::microlocal
