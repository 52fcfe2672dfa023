#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "eflab/phase_space.hpp"

namespace eflab::symbols {

enum class Var { Y, Xi };

class FieldImpl;
using FieldPtr = std::shared_ptr<const FieldImpl>;
class EvalCache;

// An evaluable complex scalar field on phase space. Fields are immutable
// after construction; derivative() produces a new field (exact chain rule
// where the constituents carry analytic derivatives, central finite
// differences otherwise).
class ScalarField {
public:
    ScalarField();  // zero field
    explicit ScalarField(FieldPtr impl) : impl_(std::move(impl)) {}

    Complex operator()(const PhasePoint& p) const;
    ScalarField derivative(Var v, int index) const;

    ScalarField d_y(int i) const { return derivative(Var::Y, i); }
    ScalarField d_xi(int i) const { return derivative(Var::Xi, i); }

    const FieldPtr& impl() const { return impl_; }

private:
    FieldPtr impl_;
};

// -- constructors ------------------------------------------------------------

ScalarField constant(Complex c);
ScalarField constant(double c);
ScalarField y_coord(int i);
ScalarField xi_coord(int i);

// Arbitrary callable with optional analytic first partials. Missing
// derivatives fall back to central differences with step
// cbrt(machine eps) * max(1, |coordinate|), widened per nesting level.
struct LambdaSpec {
    std::function<Complex(const PhasePoint&)> value;
    // index: Y derivatives first (0..n-1), then Xi (n..2n-1); entries may be null
    std::function<Complex(const PhasePoint&)> dy[8];
    std::function<Complex(const PhasePoint&)> dxi[8];
    int dim = 0;  // number of provided analytic partial slots per group
};
ScalarField lambda_field(std::function<Complex(const PhasePoint&)> value);
ScalarField lambda_field(const LambdaSpec& spec);

// -- algebra -----------------------------------------------------------------

ScalarField operator+(const ScalarField&, const ScalarField&);
ScalarField operator-(const ScalarField&, const ScalarField&);
ScalarField operator*(const ScalarField&, const ScalarField&);
ScalarField operator/(const ScalarField&, const ScalarField&);
ScalarField operator-(const ScalarField&);
ScalarField operator+(const ScalarField&, Complex);
ScalarField operator+(Complex, const ScalarField&);
ScalarField operator-(const ScalarField&, Complex);
ScalarField operator-(Complex, const ScalarField&);
ScalarField operator*(Complex, const ScalarField&);
ScalarField operator*(const ScalarField&, Complex);
ScalarField operator/(const ScalarField&, Complex);
ScalarField operator/(Complex, const ScalarField&);

ScalarField pow_int(const ScalarField&, int k);  // k may be negative
ScalarField pow_real(const ScalarField&, double p);
ScalarField exp_field(const ScalarField&);
ScalarField sin_field(const ScalarField&);
ScalarField cos_field(const ScalarField&);
ScalarField sqrt_field(const ScalarField&);
ScalarField re_field(const ScalarField&);
ScalarField im_field(const ScalarField&);

// F(y, xi + s(y)) with one shift field per xi coordinate.
ScalarField shift_xi(const ScalarField& base, const std::vector<ScalarField>& shifts);
// F(y, w(y)): xi coordinates replaced by fields of y.
ScalarField substitute_xi(const ScalarField& base, const std::vector<ScalarField>& w);

// Memoizing evaluator over the field DAG: each distinct node is evaluated
// once per point. Pays off on derivative towers (factorization terms) where
// the expression graphs share most of their subtrees.
class FieldEvaluator {
public:
    FieldEvaluator();
    ~FieldEvaluator();
    FieldEvaluator(const FieldEvaluator&) = delete;
    FieldEvaluator& operator=(const FieldEvaluator&) = delete;

    Complex eval(const ScalarField& f, const PhasePoint& p);

private:
    std::unique_ptr<EvalCache> cache_;
};

}  // namespace eflab::symbols
