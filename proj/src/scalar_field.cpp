#include "eflab/scalar_field.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

namespace eflab::symbols {

// Per-point memo table over impl pointers. FD and shifted-argument nodes
// evaluate their bases at displaced points and therefore bypass the cache
// for those sub-evaluations.
class EvalCache {
public:
    Complex value(const FieldImpl* f, const PhasePoint& p);
    void set_point(const PhasePoint& p) {
        if (!same_point(p)) {
            ++stamp_;
            last_y = p.y;
            last_xi = p.xi;
        }
    }

private:
    bool same_point(const PhasePoint& p) const {
        return p.y == last_y && p.xi == last_xi;
    }
    struct Slot {
        uint64_t stamp = 0;
        Complex v;
    };
    std::unordered_map<const FieldImpl*, Slot> map_;
    uint64_t stamp_ = 1;
    std::vector<double> last_y, last_xi;
};

class FieldImpl {
public:
    virtual ~FieldImpl() = default;
    virtual Complex eval(const PhasePoint&, EvalCache*) const = 0;
    virtual FieldPtr derivative(Var, int) const = 0;
};

namespace {
inline Complex ev(const FieldPtr& f, const PhasePoint& p, EvalCache* c) {
    return c ? c->value(f.get(), p) : f->eval(p, nullptr);
}
}  // namespace

Complex EvalCache::value(const FieldImpl* f, const PhasePoint& p) {
    auto it = map_.find(f);
    if (it != map_.end() && it->second.stamp == stamp_) return it->second.v;
    const Complex v = f->eval(p, this);
    map_[f] = Slot{stamp_, v};
    return v;
}

namespace {

double& coord_ref(PhasePoint& p, Var v, int i) {
    return v == Var::Y ? p.y[i] : p.xi[i];
}

class FdDeriv final : public FieldImpl {
public:
    FdDeriv(FieldPtr base, Var v, int i, int level)
        : base_(std::move(base)), v_(v), i_(i), level_(level) {}

    Complex eval(const PhasePoint& p, EvalCache*) const override {
        PhasePoint q = p;
        double& c = coord_ref(q, v_, i_);
        const double eps = std::numeric_limits<double>::epsilon();
        const double step =
            std::pow(eps, 1.0 / (level_ + 3.0)) * std::max(1.0, std::abs(c));
        const double c0 = c;
        c = c0 + step;
        const Complex fp = base_->eval(q, nullptr);
        c = c0 - step;
        const Complex fm = base_->eval(q, nullptr);
        return (fp - fm) / (2.0 * step);
    }

    FieldPtr derivative(Var v, int i) const override {
        return std::make_shared<FdDeriv>(
            std::make_shared<FdDeriv>(base_, v_, i_, level_), v, i, level_ + 1);
    }

private:
    FieldPtr base_;
    Var v_;
    int i_;
    int level_;
};

class ConstField final : public FieldImpl {
public:
    explicit ConstField(Complex c) : c_(c) {}
    Complex eval(const PhasePoint&, EvalCache*) const override { return c_; }
    FieldPtr derivative(Var, int) const override {
        return std::make_shared<ConstField>(Complex{0.0, 0.0});
    }
    Complex value() const { return c_; }

private:
    Complex c_;
};

class CoordField final : public FieldImpl {
public:
    CoordField(Var v, int i) : v_(v), i_(i) {}
    Complex eval(const PhasePoint& p, EvalCache*) const override {
        return v_ == Var::Y ? p.y[i_] : p.xi[i_];
    }
    FieldPtr derivative(Var v, int i) const override {
        return std::make_shared<ConstField>(
            Complex{(v == v_ && i == i_) ? 1.0 : 0.0, 0.0});
    }

private:
    Var v_;
    int i_;
};

bool is_zero_const(const FieldPtr& f) {
    auto c = dynamic_cast<const ConstField*>(f.get());
    return c && c->value() == Complex{0.0, 0.0};
}

FieldPtr zero_field() { return std::make_shared<ConstField>(Complex{0.0, 0.0}); }

class SumField final : public FieldImpl {
public:
    SumField(FieldPtr a, FieldPtr b) : a_(std::move(a)), b_(std::move(b)) {}
    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        return ev(a_, p, c) + ev(b_, p, c);
    }
    FieldPtr derivative(Var v, int i) const override {
        FieldPtr da = a_->derivative(v, i), db = b_->derivative(v, i);
        if (is_zero_const(da)) return db;
        if (is_zero_const(db)) return da;
        return std::make_shared<SumField>(da, db);
    }

private:
    FieldPtr a_, b_;
};

class DiffField final : public FieldImpl {
public:
    DiffField(FieldPtr a, FieldPtr b) : a_(std::move(a)), b_(std::move(b)) {}
    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        return ev(a_, p, c) - ev(b_, p, c);
    }
    FieldPtr derivative(Var v, int i) const override {
        FieldPtr da = a_->derivative(v, i), db = b_->derivative(v, i);
        if (is_zero_const(db)) return da;
        return std::make_shared<DiffField>(da, db);
    }

private:
    FieldPtr a_, b_;
};

class NegField final : public FieldImpl {
public:
    explicit NegField(FieldPtr a) : a_(std::move(a)) {}
    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        return -ev(a_, p, c);
    }
    FieldPtr derivative(Var v, int i) const override {
        return std::make_shared<NegField>(a_->derivative(v, i));
    }

private:
    FieldPtr a_;
};

class ProductField final : public FieldImpl {
public:
    ProductField(FieldPtr a, FieldPtr b) : a_(std::move(a)), b_(std::move(b)) {}
    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        return ev(a_, p, c) * ev(b_, p, c);
    }
    FieldPtr derivative(Var v, int i) const override {
        FieldPtr da = a_->derivative(v, i), db = b_->derivative(v, i);
        FieldPtr t1 = is_zero_const(da) ? nullptr : std::make_shared<ProductField>(da, b_);
        FieldPtr t2 = is_zero_const(db) ? nullptr : std::make_shared<ProductField>(a_, db);
        if (!t1 && !t2) return zero_field();
        if (!t1) return t2;
        if (!t2) return t1;
        return std::make_shared<SumField>(t1, t2);
    }

private:
    FieldPtr a_, b_;
};

class QuotientField final : public FieldImpl {
public:
    QuotientField(FieldPtr a, FieldPtr b) : a_(std::move(a)), b_(std::move(b)) {}
    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        return ev(a_, p, c) / ev(b_, p, c);
    }
    FieldPtr derivative(Var v, int i) const override {
        FieldPtr da = a_->derivative(v, i), db = b_->derivative(v, i);
        FieldPtr t1 = is_zero_const(da) ? nullptr : std::make_shared<QuotientField>(da, b_);
        FieldPtr t2 = nullptr;
        if (!is_zero_const(db)) {
            FieldPtr num = std::make_shared<ProductField>(a_, db);
            FieldPtr den = std::make_shared<ProductField>(b_, b_);
            t2 = std::make_shared<QuotientField>(num, den);
        }
        if (!t1 && !t2) return zero_field();
        if (!t1) return std::make_shared<NegField>(t2);
        if (!t2) return t1;
        return std::make_shared<DiffField>(t1, t2);
    }

private:
    FieldPtr a_, b_;
};

class PowIntField final : public FieldImpl {
public:
    PowIntField(FieldPtr a, int k) : a_(std::move(a)), k_(k) {}
    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        Complex b = ev(a_, p, c);
        if (k_ == 0) return 1.0;
        Complex r = 1.0;
        int n = std::abs(k_);
        Complex base = b;
        while (n) {
            if (n & 1) r *= base;
            base *= base;
            n >>= 1;
        }
        return k_ > 0 ? r : 1.0 / r;
    }
    FieldPtr derivative(Var v, int i) const override {
        if (k_ == 0) return zero_field();
        FieldPtr da = a_->derivative(v, i);
        if (is_zero_const(da)) return zero_field();
        FieldPtr p = std::make_shared<PowIntField>(a_, k_ - 1);
        FieldPtr kf = std::make_shared<ConstField>(Complex(double(k_), 0.0));
        return std::make_shared<ProductField>(std::make_shared<ProductField>(kf, p), da);
    }

private:
    FieldPtr a_;
    int k_;
};

class UnaryFn final : public FieldImpl {
public:
    enum Kind { Exp, Sin, Cos, Sqrt, PowReal, Re, Im };
    UnaryFn(Kind k, FieldPtr a, double param = 0.0)
        : kind_(k), a_(std::move(a)), param_(param) {}

    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        Complex z = ev(a_, p, c);
        switch (kind_) {
            case Exp: return std::exp(z);
            case Sin: return std::sin(z);
            case Cos: return std::cos(z);
            case Sqrt: return std::sqrt(z);
            case PowReal: return std::pow(z, param_);
            case Re: return Complex(z.real(), 0.0);
            case Im: return Complex(z.imag(), 0.0);
        }
        return {};
    }

    FieldPtr derivative(Var v, int i) const override {
        FieldPtr da = a_->derivative(v, i);
        if (is_zero_const(da)) return zero_field();
        FieldPtr outer;
        switch (kind_) {
            case Exp: outer = std::make_shared<UnaryFn>(Exp, a_); break;
            case Sin: outer = std::make_shared<UnaryFn>(Cos, a_); break;
            case Cos:
                outer = std::make_shared<NegField>(std::make_shared<UnaryFn>(Sin, a_));
                break;
            case Sqrt: {
                FieldPtr half = std::make_shared<ConstField>(Complex(0.5, 0.0));
                outer = std::make_shared<QuotientField>(half,
                                                        std::make_shared<UnaryFn>(Sqrt, a_));
                break;
            }
            case PowReal: {
                FieldPtr c = std::make_shared<ConstField>(Complex(param_, 0.0));
                FieldPtr pm1 = std::make_shared<UnaryFn>(PowReal, a_, param_ - 1.0);
                outer = std::make_shared<ProductField>(c, pm1);
                break;
            }
            case Re: return std::make_shared<UnaryFn>(Re, da);
            case Im: return std::make_shared<UnaryFn>(Im, da);
        }
        return std::make_shared<ProductField>(outer, da);
    }

private:
    Kind kind_;
    FieldPtr a_;
    double param_;
};

class LambdaFieldImpl final : public FieldImpl {
public:
    explicit LambdaFieldImpl(LambdaSpec spec) : spec_(std::move(spec)) {}

    Complex eval(const PhasePoint& p, EvalCache*) const override {
        return spec_.value(p);
    }

    FieldPtr derivative(Var v, int i) const override {
        const auto& slot = (v == Var::Y) ? spec_.dy : spec_.dxi;
        if (i < spec_.dim && slot[i]) {
            LambdaSpec d;
            d.value = slot[i];
            return std::make_shared<LambdaFieldImpl>(std::move(d));
        }
        return std::make_shared<FdDeriv>(
            std::make_shared<LambdaFieldImpl>(spec_), v, i, 0);
    }

private:
    LambdaSpec spec_;
};

// F(y, xi + s(y,xi)); exact chain rule through the shift fields. Base
// evaluations happen at displaced points, hence uncached.
class ShiftXiField final : public FieldImpl {
public:
    ShiftXiField(FieldPtr base, std::vector<ScalarField> shifts)
        : base_(std::move(base)), shifts_(std::move(shifts)) {}

    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        return base_->eval(shifted(p, c), nullptr);
    }

    FieldPtr derivative(Var v, int i) const override {
        FieldPtr acc = std::make_shared<ShiftXiField>(base_->derivative(v, i), shifts_);
        for (size_t k = 0; k < shifts_.size(); ++k) {
            ScalarField dsk = shifts_[k].derivative(v, i);
            if (is_zero_const(dsk.impl())) continue;
            FieldPtr fk = std::make_shared<ShiftXiField>(
                base_->derivative(Var::Xi, static_cast<int>(k)), shifts_);
            acc = std::make_shared<SumField>(
                acc, std::make_shared<ProductField>(dsk.impl(), fk));
        }
        return acc;
    }

private:
    PhasePoint shifted(const PhasePoint& p, EvalCache* c) const {
        PhasePoint q = p;
        for (size_t k = 0; k < shifts_.size(); ++k)
            q.xi[k] += ev(shifts_[k].impl(), p, c).real();
        return q;
    }

    FieldPtr base_;
    std::vector<ScalarField> shifts_;
};

class SubstituteXiField final : public FieldImpl {
public:
    SubstituteXiField(FieldPtr base, std::vector<ScalarField> w)
        : base_(std::move(base)), w_(std::move(w)) {}

    Complex eval(const PhasePoint& p, EvalCache* c) const override {
        return base_->eval(subbed(p, c), nullptr);
    }

    FieldPtr derivative(Var v, int i) const override {
        FieldPtr acc = (v == Var::Y)
                           ? std::make_shared<SubstituteXiField>(base_->derivative(v, i), w_)
                           : FieldPtr(zero_field());
        for (size_t k = 0; k < w_.size(); ++k) {
            ScalarField dwk = w_[k].derivative(v, i);
            if (is_zero_const(dwk.impl())) continue;
            FieldPtr fk = std::make_shared<SubstituteXiField>(
                base_->derivative(Var::Xi, static_cast<int>(k)), w_);
            acc = std::make_shared<SumField>(
                acc, std::make_shared<ProductField>(dwk.impl(), fk));
        }
        return acc;
    }

private:
    PhasePoint subbed(const PhasePoint& p, EvalCache* c) const {
        PhasePoint q = p;
        for (size_t k = 0; k < w_.size(); ++k)
            q.xi[k] = ev(w_[k].impl(), p, c).real();
        return q;
    }

    FieldPtr base_;
    std::vector<ScalarField> w_;
};

}  // namespace

ScalarField::ScalarField() : impl_(zero_field()) {}

Complex ScalarField::operator()(const PhasePoint& p) const {
    return impl_->eval(p, nullptr);
}

ScalarField ScalarField::derivative(Var v, int index) const {
    return ScalarField(impl_->derivative(v, index));
}

FieldEvaluator::FieldEvaluator() : cache_(std::make_unique<EvalCache>()) {}
FieldEvaluator::~FieldEvaluator() = default;

Complex FieldEvaluator::eval(const ScalarField& f, const PhasePoint& p) {
    cache_->set_point(p);
    return cache_->value(f.impl().get(), p);
}

ScalarField constant(Complex c) { return ScalarField(std::make_shared<ConstField>(c)); }
ScalarField constant(double c) { return constant(Complex(c, 0.0)); }
ScalarField y_coord(int i) { return ScalarField(std::make_shared<CoordField>(Var::Y, i)); }
ScalarField xi_coord(int i) { return ScalarField(std::make_shared<CoordField>(Var::Xi, i)); }

ScalarField lambda_field(std::function<Complex(const PhasePoint&)> value) {
    LambdaSpec s;
    s.value = std::move(value);
    return ScalarField(std::make_shared<LambdaFieldImpl>(std::move(s)));
}
ScalarField lambda_field(const LambdaSpec& spec) {
    return ScalarField(std::make_shared<LambdaFieldImpl>(spec));
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    return ScalarField(std::make_shared<SumField>(a.impl(), b.impl()));
}
ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    return ScalarField(std::make_shared<DiffField>(a.impl(), b.impl()));
}
ScalarField operator*(const ScalarField& a, const ScalarField& b) {
    return ScalarField(std::make_shared<ProductField>(a.impl(), b.impl()));
}
ScalarField operator/(const ScalarField& a, const ScalarField& b) {
    return ScalarField(std::make_shared<QuotientField>(a.impl(), b.impl()));
}
ScalarField operator-(const ScalarField& a) {
    return ScalarField(std::make_shared<NegField>(a.impl()));
}
ScalarField operator+(const ScalarField& a, Complex c) { return a + constant(c); }
ScalarField operator+(Complex c, const ScalarField& a) { return constant(c) + a; }
ScalarField operator-(const ScalarField& a, Complex c) { return a - constant(c); }
ScalarField operator-(Complex c, const ScalarField& a) { return constant(c) - a; }
ScalarField operator*(Complex c, const ScalarField& a) { return constant(c) * a; }
ScalarField operator*(const ScalarField& a, Complex c) { return a * constant(c); }
ScalarField operator/(const ScalarField& a, Complex c) { return a / constant(c); }
ScalarField operator/(Complex c, const ScalarField& a) { return constant(c) / a; }

ScalarField pow_int(const ScalarField& a, int k) {
    return ScalarField(std::make_shared<PowIntField>(a.impl(), k));
}
ScalarField pow_real(const ScalarField& a, double p) {
    return ScalarField(std::make_shared<UnaryFn>(UnaryFn::PowReal, a.impl(), p));
}
ScalarField exp_field(const ScalarField& a) {
    return ScalarField(std::make_shared<UnaryFn>(UnaryFn::Exp, a.impl()));
}
ScalarField sin_field(const ScalarField& a) {
    return ScalarField(std::make_shared<UnaryFn>(UnaryFn::Sin, a.impl()));
}
ScalarField cos_field(const ScalarField& a) {
    return ScalarField(std::make_shared<UnaryFn>(UnaryFn::Cos, a.impl()));
}
ScalarField sqrt_field(const ScalarField& a) {
    return ScalarField(std::make_shared<UnaryFn>(UnaryFn::Sqrt, a.impl()));
}
ScalarField re_field(const ScalarField& a) {
    return ScalarField(std::make_shared<UnaryFn>(UnaryFn::Re, a.impl()));
}
ScalarField im_field(const ScalarField& a) {
    return ScalarField(std::make_shared<UnaryFn>(UnaryFn::Im, a.impl()));
}

ScalarField shift_xi(const ScalarField& base, const std::vector<ScalarField>& shifts) {
    return ScalarField(std::make_shared<ShiftXiField>(base.impl(), shifts));
}
ScalarField substitute_xi(const ScalarField& base, const std::vector<ScalarField>& w) {
    return ScalarField(std::make_shared<SubstituteXiField>(base.impl(), w));
}

}  // namespace eflab::symbols
