#include "eflab/expr_parser.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace eflab::expr {

using symbols::ScalarField;

namespace {

struct Parser {
    const std::string& s;
    size_t pos = 0;
    const std::map<std::string, double>& consts;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("expression error at column " +
                                    std::to_string(pos + 1) + ": " + what);
    }

    void skip() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    bool eat(char c) {
        skip();
        if (pos < s.size() && s[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    char peek() {
        skip();
        return pos < s.size() ? s[pos] : '\0';
    }

    ScalarField parse_expr() {
        ScalarField lhs = parse_term();
        for (;;) {
            if (eat('+'))
                lhs = lhs + parse_term();
            else if (eat('-'))
                lhs = lhs - parse_term();
            else
                return lhs;
        }
    }

    ScalarField parse_term() {
        ScalarField lhs = parse_unary();
        for (;;) {
            if (eat('*'))
                lhs = lhs * parse_unary();
            else if (eat('/'))
                lhs = lhs / parse_unary();
            else
                return lhs;
        }
    }

    ScalarField parse_unary() {
        if (eat('-')) return -parse_unary();
        if (eat('+')) return parse_unary();
        return parse_power();
    }

    ScalarField parse_power() {
        ScalarField base = parse_atom();
        if (eat('^')) {
            // integer exponents keep exact derivatives; real ones use pow
            skip();
            const size_t save = pos;
            bool neg = eat('-');
            std::string num;
            while (pos < s.size() &&
                   (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'))
                num += s[pos++];
            if (num.empty()) fail("expected numeric exponent");
            if (num.find('.') == std::string::npos) {
                int k = std::stoi(num);
                return symbols::pow_int(base, neg ? -k : k);
            }
            pos = save;
            fail("only numeric exponents are supported");
        }
        return base;
    }

    ScalarField parse_atom() {
        skip();
        if (pos >= s.size()) fail("unexpected end of expression");
        const char c = s[pos];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
        if (eat('(')) {
            ScalarField e = parse_expr();
            if (!eat(')')) fail("expected ')'");
            return e;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    ScalarField parse_number() {
        skip();
        size_t end = pos;
        while (end < s.size() &&
               (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.' ||
                s[end] == 'e' || s[end] == 'E' ||
                ((s[end] == '+' || s[end] == '-') && end > pos &&
                 (s[end - 1] == 'e' || s[end - 1] == 'E'))))
            ++end;
        const std::string num = s.substr(pos, end - pos);
        try {
            const double v = std::stod(num);
            pos = end;
            return symbols::constant(v);
        } catch (...) {
            fail("bad numeric literal '" + num + "'");
        }
    }

    ScalarField parse_ident() {
        skip();
        size_t end = pos;
        while (end < s.size() && (std::isalnum(static_cast<unsigned char>(s[end])) ||
                                  s[end] == '_'))
            ++end;
        std::string name = s.substr(pos, end - pos);
        pos = end;

        if (peek() == '(') {
            eat('(');
            if (name == "pow") {
                ScalarField base = parse_expr();
                if (!eat(',')) fail("pow expects two arguments");
                skip();
                bool neg = eat('-');
                std::string num;
                while (pos < s.size() &&
                       (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.'))
                    num += s[pos++];
                if (num.empty()) fail("pow expects a numeric exponent");
                if (!eat(')')) fail("expected ')'");
                if (num.find('.') == std::string::npos)
                    return symbols::pow_int(base, (neg ? -1 : 1) * std::stoi(num));
                return symbols::pow_real(base, (neg ? -1.0 : 1.0) * std::stod(num));
            }
            ScalarField arg = parse_expr();
            if (!eat(')')) fail("expected ')'");
            if (name == "exp") return symbols::exp_field(arg);
            if (name == "sin") return symbols::sin_field(arg);
            if (name == "cos") return symbols::cos_field(arg);
            if (name == "sqrt") return symbols::sqrt_field(arg);
            fail("unknown function '" + name + "'");
        }

        // coordinates: y1..y8, xi1..xi8, x as alias of y
        auto coord_index = [&](const std::string& base) -> int {
            const std::string digits = name.substr(base.size());
            if (digits.empty()) return 1;
            for (char d : digits)
                if (!std::isdigit(static_cast<unsigned char>(d))) return -1;
            return std::stoi(digits);
        };
        if (name.rfind("xi", 0) == 0 &&
            (name.size() == 2 || std::isdigit(static_cast<unsigned char>(name[2])))) {
            const int i = coord_index("xi");
            if (i >= 1 && i <= 8) return symbols::xi_coord(i - 1);
        }
        if ((name[0] == 'y' || name[0] == 'x') &&
            (name.size() == 1 || std::isdigit(static_cast<unsigned char>(name[1])))) {
            const int i = coord_index(name.substr(0, 1));
            if (i >= 1 && i <= 8) return symbols::y_coord(i - 1);
        }
        if (name == "pi") return symbols::constant(M_PI);
        auto it = consts.find(name);
        if (it != consts.end()) return symbols::constant(it->second);
        fail("unknown identifier '" + name + "'");
    }
};

}  // namespace

ScalarField parse_field(const std::string& text,
                        const std::map<std::string, double>& constants) {
    Parser p{text, 0, constants};
    ScalarField e = p.parse_expr();
    p.skip();
    if (p.pos != text.size()) p.fail("trailing input");
    return e;
}

}  // namespace eflab::expr
