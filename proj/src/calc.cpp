#include "finforge/calc.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>

#include "finforge/errors.hpp"
#include "finforge/textutil.hpp"

namespace finforge::calc {

ExprPtr Expr::make_number(double v) {
    auto e = std::make_unique<Expr>();
    e->kind = NodeKind::number;
    e->number = v;
    return e;
}

ExprPtr Expr::make_percent(ExprPtr inner) {
    auto e = std::make_unique<Expr>();
    e->kind = NodeKind::percent;
    e->lhs = std::move(inner);
    return e;
}

ExprPtr Expr::make_negate(ExprPtr inner) {
    auto e = std::make_unique<Expr>();
    e->kind = NodeKind::negate;
    e->lhs = std::move(inner);
    return e;
}

ExprPtr Expr::make_binary(BinaryOp op, ExprPtr l, ExprPtr r) {
    auto e = std::make_unique<Expr>();
    e->kind = NodeKind::binary;
    e->op = op;
    e->lhs = std::move(l);
    e->rhs = std::move(r);
    return e;
}

ExprPtr Expr::make_call(std::string func, std::vector<ExprPtr> args) {
    auto e = std::make_unique<Expr>();
    e->kind = NodeKind::call;
    e->func = std::move(func);
    e->args = std::move(args);
    return e;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case NodeKind::number:
            return a.number == b.number;
        case NodeKind::percent:
        case NodeKind::negate:
            return structurally_equal(*a.lhs, *b.lhs);
        case NodeKind::binary:
            return a.op == b.op && structurally_equal(*a.lhs, *b.lhs) &&
                   structurally_equal(*a.rhs, *b.rhs);
        case NodeKind::call: {
            if (a.func != b.func || a.args.size() != b.args.size()) return false;
            for (std::size_t i = 0; i < a.args.size(); ++i) {
                if (!structurally_equal(*a.args[i], *b.args[i])) return false;
            }
            return true;
        }
    }
    return false;
}

namespace {

// min arity, max arity (SIZE_MAX = unbounded)
const std::map<std::string, std::pair<std::size_t, std::size_t>>& function_table() {
    static const std::map<std::string, std::pair<std::size_t, std::size_t>> table{
        {"sqrt", {1, 1}}, {"abs", {1, 1}},   {"ln", {1, 1}},
        {"log10", {1, 1}}, {"exp", {1, 1}},  {"pow", {2, 2}},
        {"round", {2, 2}}, {"min", {2, SIZE_MAX}}, {"max", {2, SIZE_MAX}},
    };
    return table;
}

struct NormChar {
    char ch;
    std::size_t src_offset;  // byte offset into the original source
};

// ASCII view of the source: fullwidth forms folded, ×/÷/− mapped, spaces
// dropped. Offsets point back into the original bytes for error messages.
std::vector<NormChar> normalize_source(const std::string& src) {
    std::vector<NormChar> out;
    std::size_t i = 0;
    const auto cps = decode_utf8(src);
    // re-walk to recover byte offsets
    std::size_t byte = 0;
    for (char32_t cp : cps) {
        std::string enc;
        append_utf8(enc, cp);
        const std::size_t at = byte;
        byte += enc.size();
        char32_t mapped = fullwidth_to_ascii(cp);
        if (mapped == 0x00D7) mapped = U'*';       // ×
        if (mapped == 0x00F7) mapped = U'/';       // ÷
        if (mapped == 0x2212) mapped = U'-';       // minus sign
        if (mapped == U' ' || mapped == U'\t' || mapped == U'\n' || mapped == U'\r') {
            continue;
        }
        if (mapped > 0x7F) {
            throw CalcError(CalcErrorKind::parse,
                            "unexpected character at byte " + std::to_string(at), at);
        }
        out.push_back({static_cast<char>(mapped), at});
    }
    (void)i;
    return out;
}

class Parser {
public:
    explicit Parser(const std::string& src) : src_(src), chars_(normalize_source(src)) {}

    ExprPtr parse() {
        if (chars_.empty()) {
            throw CalcError(CalcErrorKind::parse, "empty expression", 0);
        }
        auto e = parse_expr_rule();
        if (pos_ != chars_.size()) {
            fail("expected operator or end of expression");
        }
        return e;
    }

private:
    const std::string& src_;
    std::vector<NormChar> chars_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& expected) const {
        const std::size_t off = pos_ < chars_.size() ? chars_[pos_].src_offset : src_.size();
        throw CalcError(CalcErrorKind::parse,
                        expected + " at byte " + std::to_string(off), off);
    }

    bool at_end() const { return pos_ >= chars_.size(); }
    char peek() const { return chars_[pos_].ch; }
    bool accept(char c) {
        if (!at_end() && peek() == c) { ++pos_; return true; }
        return false;
    }
    void expect(char c, const char* what) {
        if (!accept(c)) fail(std::string("expected ") + what);
    }

    ExprPtr parse_expr_rule() {
        auto lhs = parse_term();
        while (!at_end() && (peek() == '+' || peek() == '-')) {
            const BinaryOp op = peek() == '+' ? BinaryOp::add : BinaryOp::sub;
            ++pos_;
            lhs = Expr::make_binary(op, std::move(lhs), parse_term());
        }
        return lhs;
    }

    ExprPtr parse_term() {
        auto lhs = parse_unary();
        while (!at_end() && (peek() == '*' || peek() == '/')) {
            const BinaryOp op = peek() == '*' ? BinaryOp::mul : BinaryOp::div;
            ++pos_;
            lhs = Expr::make_binary(op, std::move(lhs), parse_unary());
        }
        return lhs;
    }

    ExprPtr parse_unary() {
        if (accept('-')) return Expr::make_negate(parse_unary());
        return parse_power();
    }

    ExprPtr parse_power() {
        auto base = parse_postfix();
        if (accept('^')) {
            // exponent re-enters unary: right-associative, and 2^-3 parses
            return Expr::make_binary(BinaryOp::pow, std::move(base), parse_unary());
        }
        return base;
    }

    ExprPtr parse_postfix() {
        auto e = parse_atom();
        while (accept('%')) e = Expr::make_percent(std::move(e));
        return e;
    }

    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool is_ident(char c) { return is_ident_start(c) || is_digit(c); }

    ExprPtr parse_atom() {
        if (at_end()) fail("expected number, function or '('");
        if (accept('(')) {
            auto inner = parse_expr_rule();
            expect(')', "')'");
            return inner;
        }
        if (is_digit(peek()) || (peek() == '.' && pos_ + 1 < chars_.size() &&
                                 is_digit(chars_[pos_ + 1].ch))) {
            return parse_number();
        }
        if (is_ident_start(peek())) return parse_call();
        fail("expected number, function or '('");
    }

    // A comma is part of a number only in thousands position: followed by
    // exactly three digits and then a non-digit. "min(2,3)" keeps its
    // argument separator.
    bool comma_is_thousands() const {
        if (pos_ + 3 >= chars_.size()) return false;
        for (std::size_t k = 1; k <= 3; ++k) {
            if (!is_digit(chars_[pos_ + k].ch)) return false;
        }
        return pos_ + 4 >= chars_.size() || !is_digit(chars_[pos_ + 4].ch);
    }

    ExprPtr parse_number() {
        std::string digits;
        while (!at_end()) {
            const char c = peek();
            if (is_digit(c)) {
                digits.push_back(c);
                ++pos_;
            } else if (c == ',' && comma_is_thousands()) {
                ++pos_;  // separator stripped
            } else {
                break;
            }
        }
        if (accept('.')) {
            digits.push_back('.');
            while (!at_end() && is_digit(peek())) {
                digits.push_back(peek());
                ++pos_;
            }
        }
        // exponent suffix: 1e6, 2.5e-3
        if (!at_end() && (peek() == 'e' || peek() == 'E')) {
            std::size_t look = pos_ + 1;
            std::size_t digits_at = look;
            if (look < chars_.size() && (chars_[look].ch == '+' || chars_[look].ch == '-')) {
                ++digits_at;
            }
            if (digits_at < chars_.size() && is_digit(chars_[digits_at].ch)) {
                digits.push_back('e');
                ++pos_;
                if (peek() == '+' || peek() == '-') {
                    digits.push_back(peek());
                    ++pos_;
                }
                while (!at_end() && is_digit(peek())) {
                    digits.push_back(peek());
                    ++pos_;
                }
            }
        }
        return Expr::make_number(std::strtod(digits.c_str(), nullptr));
    }

    ExprPtr parse_call() {
        const std::size_t name_at = chars_[pos_].src_offset;
        std::string name;
        while (!at_end() && is_ident(peek())) {
            name.push_back(peek());
            ++pos_;
        }
        const auto it = function_table().find(name);
        if (it == function_table().end()) {
            throw CalcError(CalcErrorKind::unknown_function,
                            "unknown function '" + name + "' at byte " +
                                std::to_string(name_at),
                            name_at);
        }
        expect('(', "'(' after function name");
        std::vector<ExprPtr> args;
        args.push_back(parse_expr_rule());
        while (accept(',')) args.push_back(parse_expr_rule());
        expect(')', "')'");
        const auto [min_arity, max_arity] = it->second;
        if (args.size() < min_arity || args.size() > max_arity) {
            throw CalcError(CalcErrorKind::arity,
                            name + " expects " + std::to_string(min_arity) +
                                (max_arity == SIZE_MAX ? "+"
                                 : max_arity != min_arity
                                     ? ".." + std::to_string(max_arity)
                                     : "") +
                                " arguments, got " + std::to_string(args.size()),
                            name_at);
        }
        return Expr::make_call(std::move(name), std::move(args));
    }
};

int precedence(const Expr& e) {
    switch (e.kind) {
        case NodeKind::binary:
            switch (e.op) {
                case BinaryOp::add:
                case BinaryOp::sub: return 1;
                case BinaryOp::mul:
                case BinaryOp::div: return 2;
                case BinaryOp::pow: return 4;
            }
            return 1;
        case NodeKind::negate: return 3;
        case NodeKind::percent: return 5;
        case NodeKind::number:
        case NodeKind::call: return 6;
    }
    return 6;
}

// Shortest form that reparses to the identical double.
std::string render_number(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void print_expr(const Expr& e, int parent_prec, std::string& out) {
    const int prec = precedence(e);
    const bool parens = prec < parent_prec;
    if (parens) out.push_back('(');
    switch (e.kind) {
        case NodeKind::number: {
            if (e.number < 0) {
                // negative literals only arise from folded input; print as negation
                out.push_back('-');
                out += render_number(-e.number);
            } else {
                out += render_number(e.number);
            }
            break;
        }
        case NodeKind::percent:
            print_expr(*e.lhs, 6, out);
            out.push_back('%');
            break;
        case NodeKind::negate:
            out.push_back('-');
            print_expr(*e.lhs, prec, out);
            break;
        case NodeKind::binary: {
            const char* op_str = "+";
            switch (e.op) {
                case BinaryOp::add: op_str = "+"; break;
                case BinaryOp::sub: op_str = "-"; break;
                case BinaryOp::mul: op_str = "*"; break;
                case BinaryOp::div: op_str = "/"; break;
                case BinaryOp::pow: op_str = "^"; break;
            }
            if (e.op == BinaryOp::pow) {
                // right-associative: parenthesize a pow left child
                print_expr(*e.lhs, prec + 1, out);
                out += op_str;
                print_expr(*e.rhs, prec, out);
            } else {
                print_expr(*e.lhs, prec, out);
                out += op_str;
                print_expr(*e.rhs, prec + 1, out);
            }
            break;
        }
        case NodeKind::call: {
            out += e.func;
            out.push_back('(');
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out.push_back(',');
                print_expr(*e.args[i], 0, out);
            }
            out.push_back(')');
            break;
        }
    }
    if (parens) out.push_back(')');
}

[[noreturn]] void eval_fail(CalcErrorKind kind, const std::string& what, const Expr& node) {
    std::string repr;
    print_expr(node, 0, repr);
    throw CalcError(kind, what + " in " + repr);
}

double eval_node(const Expr& e) {
    switch (e.kind) {
        case NodeKind::number:
            return e.number;
        case NodeKind::percent:
            return eval_node(*e.lhs) / 100.0;
        case NodeKind::negate:
            return -eval_node(*e.lhs);
        case NodeKind::binary: {
            const double a = eval_node(*e.lhs);
            const double b = eval_node(*e.rhs);
            double r = 0.0;
            switch (e.op) {
                case BinaryOp::add: r = a + b; break;
                case BinaryOp::sub: r = a - b; break;
                case BinaryOp::mul: r = a * b; break;
                case BinaryOp::div:
                    if (b == 0.0) eval_fail(CalcErrorKind::div_zero, "division by zero", e);
                    r = a / b;
                    break;
                case BinaryOp::pow:
                    r = std::pow(a, b);
                    break;
            }
            if (std::isnan(r)) eval_fail(CalcErrorKind::domain, "undefined result", e);
            if (!std::isfinite(r)) eval_fail(CalcErrorKind::overflow, "overflow", e);
            return r;
        }
        case NodeKind::call: {
            std::vector<double> args;
            args.reserve(e.args.size());
            for (const auto& a : e.args) args.push_back(eval_node(*a));
            double r = 0.0;
            if (e.func == "sqrt") {
                if (args[0] < 0) eval_fail(CalcErrorKind::domain, "sqrt of negative", e);
                r = std::sqrt(args[0]);
            } else if (e.func == "abs") {
                r = std::fabs(args[0]);
            } else if (e.func == "ln") {
                if (args[0] <= 0) eval_fail(CalcErrorKind::domain, "ln of non-positive", e);
                r = std::log(args[0]);
            } else if (e.func == "log10") {
                if (args[0] <= 0) eval_fail(CalcErrorKind::domain, "log10 of non-positive", e);
                r = std::log10(args[0]);
            } else if (e.func == "exp") {
                r = std::exp(args[0]);
            } else if (e.func == "pow") {
                r = std::pow(args[0], args[1]);
            } else if (e.func == "round") {
                const double d = args[1];
                if (std::fabs(d - std::nearbyint(d)) > 1e-9 || std::fabs(d) > 15) {
                    eval_fail(CalcErrorKind::domain, "round decimals must be an integer in [-15,15]", e);
                }
                const double scale = std::pow(10.0, std::nearbyint(d));
                r = std::round(args[0] * scale) / scale;  // half away from zero
            } else if (e.func == "min") {
                r = args[0];
                for (double a : args) r = std::min(r, a);
            } else if (e.func == "max") {
                r = args[0];
                for (double a : args) r = std::max(r, a);
            }
            if (std::isnan(r)) eval_fail(CalcErrorKind::domain, "undefined result", e);
            if (!std::isfinite(r)) eval_fail(CalcErrorKind::overflow, "overflow", e);
            return r;
        }
    }
    return 0.0;
}

}  // namespace

ExprPtr parse_expr(const std::string& src) {
    return Parser(src).parse();
}

std::string render_value(double v) {
    if (v == 0.0) return "0";
    char buf[64];
    const double mag = std::fabs(v);
    if (mag >= 1e-6 && mag < 1e15) {
        for (int dec = 0; dec <= 17; ++dec) {
            std::snprintf(buf, sizeof(buf), "%.*f", dec, v);
            const double parsed = std::strtod(buf, nullptr);
            if (std::fabs(parsed - v) <= 1e-9 * mag) {
                std::string s(buf);
                if (s.find('.') != std::string::npos) {
                    while (s.back() == '0') s.pop_back();
                    if (s.back() == '.') s.pop_back();
                }
                return s;
            }
        }
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        const double parsed = std::strtod(buf, nullptr);
        if (std::fabs(parsed - v) <= 1e-9 * mag) break;
    }
    return buf;
}

CalcResult eval_expr(const Expr& expr) {
    const double v = eval_node(expr);
    return {v, render_value(v)};
}

CalcResult eval(const std::string& src) {
    return eval_expr(*parse_expr(src));
}

std::string to_string(const Expr& expr) {
    std::string out;
    print_expr(expr, 0, out);
    return out;
}

std::string format_marker(const std::string& expr_src, const CalcResult& result) {
    parse_expr(expr_src);  // validates; throws on failure
    return "[Calculator(" + expr_src + ")->" + result.display + "]";
}

}  // namespace finforge::calc
