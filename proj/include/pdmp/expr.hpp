#pragma once

// Arithmetic expression language for model configs.
//
// Grammar (lowest to highest precedence):
//
//   expr    := sum
//   sum     := product (('+' | '-') product)*          left-assoc
//   product := unary (('*' | '/') unary)*              left-assoc
//   unary   := '-' unary | '+' unary | power
//   power   := primary ('^' unary)?                    right-assoc
//   primary := number | name | name '(' args ')' | '(' expr ')'
//
// Unary minus binds looser than '^', so -x^2 is -(x^2). The only free
// variable is `x`; every other name must be a declared parameter. Functions:
// exp, log, sqrt, tanh, abs (one argument), min, max (two arguments).

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "pdmp/error.hpp"

namespace pdmp {

using ParamMap = std::map<std::string, double, std::less<>>;

enum class BinaryOp { add, sub, mul, div, pow };
enum class Func { exp, log, sqrt, tanh, abs, min, max };

struct ExprNode {
    enum class Kind { number, variable, negate, binary, call };

    Kind kind = Kind::number;
    double value = 0.0;         // number
    std::string name;           // variable
    BinaryOp op = BinaryOp::add;
    Func func = Func::exp;
    std::vector<ExprNode> args;  // operands of negate / binary / call
    std::size_t offset = 0;      // byte offset of the node in the source

    /// Structural equality; offsets are ignored.
    friend bool operator==(const ExprNode& a, const ExprNode& b);
};

/// A parsed expression. Immutable after construction.
class Expr {
public:
    Expr() = default;
    Expr(ExprNode root, std::string source) : root_(std::move(root)), source_(std::move(source)) {}

    [[nodiscard]] const ExprNode& root() const noexcept { return root_; }
    [[nodiscard]] const std::string& source() const noexcept { return source_; }

    /// Every distinct variable name referenced, sorted.
    [[nodiscard]] std::vector<std::string> variables() const;

    friend bool operator==(const Expr& a, const Expr& b) { return a.root_ == b.root_; }

private:
    ExprNode root_;
    std::string source_;
};

/// Parses `src`. Throws ParseError (with byte offset) on malformed input,
/// unknown function names and wrong arity.
Expr parse(std::string_view src);

/// Tree-walking evaluation. Throws EvalError for unbound names and for any
/// non-finite intermediate (division by zero, log of a non-positive number).
double eval(const Expr& e, double x, const ParamMap& params);

/// Fully parenthesized rendering; parse(to_string(e)) == e.
std::string to_string(const Expr& e);

int arity(Func f) noexcept;
std::string_view func_name(Func f) noexcept;

/// Expression with parameters bound, flattened to a postfix program for
/// repeated evaluation in the simulators and spectral solvers.
class CompiledExpr {
public:
    CompiledExpr() = default;

    /// Throws EvalError if a name other than `x` is not in `params`.
    static CompiledExpr compile(const Expr& e, const ParamMap& params);

    /// Same error contract as eval().
    [[nodiscard]] double operator()(double x) const;

    [[nodiscard]] const std::string& source() const noexcept { return source_; }

private:
    enum class Code : unsigned char { constant, var_x, neg, add, sub, mul, div, pow, exp, log, sqrt, tanh, abs, min, max };
    struct Instr {
        Code code;
        double value;
        std::size_t offset;
    };

    void emit(const ExprNode& node, const ParamMap& params, int depth);

    std::vector<Instr> program_;
    std::size_t max_stack_ = 0;
    std::string source_;
};

}  // namespace pdmp
