#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace eflab {

using Complex = std::complex<double>;

// A point (y, xi) in phase space. The last position coordinate is the
// normal direction by convention; primed variables are the leading n-1.
struct PhasePoint {
    std::vector<double> y;
    std::vector<double> xi;

    PhasePoint() = default;
    PhasePoint(std::vector<double> y_, std::vector<double> xi_)
        : y(std::move(y_)), xi(std::move(xi_)) {
        if (y.size() != xi.size())
            throw std::invalid_argument("PhasePoint: dim(y) != dim(xi)");
        for (double v : y)
            if (!std::isfinite(v)) throw std::invalid_argument("PhasePoint: non-finite y");
        for (double v : xi)
            if (!std::isfinite(v)) throw std::invalid_argument("PhasePoint: non-finite xi");
    }

    int dim() const { return static_cast<int>(y.size()); }

    static PhasePoint dim2(double yp, double yn, double xip, double xin) {
        return PhasePoint({yp, yn}, {xip, xin});
    }
    static PhasePoint dim1(double y0, double xi0) { return PhasePoint({y0}, {xi0}); }
};

// Axis-aligned box over (y, xi) coordinates; lo/hi each of length 2n
// ordered (y_1..y_n, xi_1..xi_n).
struct Box {
    std::vector<double> lo;
    std::vector<double> hi;

    bool contains(const PhasePoint& p, double slack = 0.0) const {
        const int n = p.dim();
        if (lo.size() != static_cast<size_t>(2 * n)) return false;
        for (int i = 0; i < n; ++i) {
            if (p.y[i] < lo[i] - slack || p.y[i] > hi[i] + slack) return false;
            if (p.xi[i] < lo[n + i] - slack || p.xi[i] > hi[n + i] + slack) return false;
        }
        return true;
    }
};

// Tensor-product sampling grid over a Box.
struct PhaseGrid {
    Box box;
    std::vector<int> counts;  // length 2n, points per axis

    size_t size() const {
        size_t s = 1;
        for (int c : counts) s *= static_cast<size_t>(c);
        return s;
    }

    // Linear index -> point. Axis with count 1 samples the midpoint.
    PhasePoint point(size_t idx) const {
        const int n2 = static_cast<int>(counts.size());
        const int n = n2 / 2;
        std::vector<double> v(n2);
        for (int a = 0; a < n2; ++a) {
            const int c = counts[a];
            const size_t k = idx % c;
            idx /= c;
            v[a] = (c == 1) ? 0.5 * (box.lo[a] + box.hi[a])
                            : box.lo[a] + (box.hi[a] - box.lo[a]) * double(k) / double(c - 1);
        }
        return PhasePoint(std::vector<double>(v.begin(), v.begin() + n),
                          std::vector<double>(v.begin() + n, v.end()));
    }
};

}  // namespace eflab
