#pragma once

#include <memory>
#include <string>
#include <vector>

namespace finforge::calc {

enum class BinaryOp { add, sub, mul, div, pow };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

enum class NodeKind { number, percent, negate, binary, call };

// AST for the calculator expression DSL. Parentheses guide parsing only;
// no group nodes are kept, so structural equality ignores redundant parens.
struct Expr {
    NodeKind kind;
    double number = 0.0;            // number
    BinaryOp op = BinaryOp::add;    // binary
    std::string func;               // call
    ExprPtr lhs, rhs;               // binary; negate/percent use lhs
    std::vector<ExprPtr> args;      // call

    static ExprPtr make_number(double v);
    static ExprPtr make_percent(ExprPtr inner);
    static ExprPtr make_negate(ExprPtr inner);
    static ExprPtr make_binary(BinaryOp op, ExprPtr l, ExprPtr r);
    static ExprPtr make_call(std::string func, std::vector<ExprPtr> args);
};

bool structurally_equal(const Expr& a, const Expr& b);

// Grammar (see docs/grammar.md):
//   expr    := term (('+'|'-') term)*
//   term    := unary (('*'|'/') unary)*
//   unary   := '-' unary | power
//   power   := postfix ('^' unary)?          right-associative
//   postfix := atom '%'*                      x% == x/100
//   atom    := number | func '(' expr (',' expr)* ')' | '(' expr ')'
// Fullwidth digits/operators and ×/÷ are normalized to ASCII before
// parsing; thousands separators inside numbers (1,000) are stripped.
// Throws CalcError with the byte offset into the original source.
ExprPtr parse_expr(const std::string& src);

struct CalcResult {
    double value = 0.0;
    std::string display;
};

// Deterministic double-precision evaluation. round(v, d) rounds half away
// from zero to d decimals. Division by zero, domain violations (sqrt/ln/
// log10 of invalid input) and non-finite results raise CalcError naming
// the offending subexpression.
CalcResult eval_expr(const Expr& expr);

CalcResult eval(const std::string& src);  // parse + eval

// Renders the value with the fewest decimals that parse back within 1e-9
// relative; exponent notation only outside [1e-6, 1e15).
std::string render_value(double v);

// Canonical printable form with minimal precedence parentheses; reparsing
// yields a structurally equal tree.
std::string to_string(const Expr& expr);

// "[Calculator(" + expr_src + ")->" + result.display + "]", byte-exact.
// Validates that expr_src parses.
std::string format_marker(const std::string& expr_src, const CalcResult& result);

}  // namespace finforge::calc
