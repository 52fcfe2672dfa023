#pragma once

#include <optional>
#include <vector>

#include "eflab/phase_space.hpp"
#include "eflab/scalar_field.hpp"

namespace eflab::symbols {

// h-asymptotic symbol a ~ h^{-m} (a_0 + h a_1 + ... + h^K a_K), each term an
// evaluable scalar field on a declared box region of phase space.
struct SymbolExpansion {
    int order_m = 0;
    std::vector<ScalarField> terms;
    std::optional<Box> region;

    int top_index() const { return static_cast<int>(terms.size()) - 1; }
    const ScalarField& principal() const { return terms.front(); }
};

// h^{-m} sum_j h^j a_j(pt); throws std::domain_error outside the declared region.
Complex eval_symbol(const SymbolExpansion& sym, const PhasePoint& pt, double h);

// {f, g} = sum_k (d_xi_k f d_y_k g - d_y_k f d_xi_k g); the sign convention
// is fixed so that {xi_k, y_k} = +1.
Complex poisson_bracket(const ScalarField& f, const ScalarField& g, const PhasePoint& pt);

// Standard (left) quantization composition a # b truncated at total order K:
//   (a#b)_l = sum_{j+k+|alpha|=l} (-i)^{|alpha|}/alpha! d_xi^alpha a_j d_y^alpha b_k.
// Throws std::invalid_argument if K is negative. The 3-argument form infers
// the dimension from a declared region.
SymbolExpansion compose(const SymbolExpansion& a, const SymbolExpansion& b, int K,
                        int dim);
SymbolExpansion compose(const SymbolExpansion& a, const SymbolExpansion& b, int K);

// min over grid samples (plus tail samples at xi scaled out to xi_tail) of
// |a_0|; the caller compares the returned margin against a candidate C_0.
double ellipticity_margin(const SymbolExpansion& sym, const PhaseGrid& grid,
                          double xi_tail);

}  // namespace eflab::symbols
