#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mfc/error.hpp"

namespace mfc {

// Arithmetic expressions over occupancy weights m[state], action components
// a / a[k], and named parameters. Grammar (left-associative, usual precedence):
//
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := NUMBER | ref | ("min"|"max"|"exp"|"log") "(" expr ("," expr)* ")"
//           | "(" expr ")" | "-" factor
//   ref    := "m" "[" IDENT "]" | "a" ("[" INT "]")? | IDENT
struct Expr {
    enum class Kind { number, state_ref, action_ref, param_ref, add, sub, mul, div, neg, call };
    enum class Fn { min, max, exp, log };

    Kind kind = Kind::number;
    double number = 0.0;
    std::string name;        // state_ref / param_ref
    int action_index = -1;   // action_ref; -1 means the bare scalar "a"
    Fn fn = Fn::min;
    std::vector<Expr> args;  // operands, in source order

    bool operator==(const Expr& other) const;
};

// Throws Error::parse with a 1-based column on syntax errors.
Expr parse_expr(std::string_view src);

// Canonical printer: parse_expr(expr_to_string(e)) == e.
std::string expr_to_string(const Expr& e);

// Expression bound to a concrete model layout and flattened to a postfix
// program for cheap repeated evaluation.
class CompiledExpr {
public:
    CompiledExpr() = default;

    // m points at state weights, a at action components, p at parameter values
    // (layouts fixed at compile time). Division by zero and log of a
    // non-positive value raise Error::eval.
    double eval(const double* m, const double* a, const double* p) const;

    bool empty() const { return code_.empty(); }

private:
    friend CompiledExpr compile_expr(const Expr&, const std::vector<std::string>&, int,
                                     const std::vector<std::string>&);
    enum class Op : std::uint8_t {
        push_num, push_state, push_action, push_param,
        add, sub, mul, div, neg, min2, max2, exp1, log1
    };
    struct Instr {
        Op op;
        int index = 0;
        double value = 0.0;
    };
    std::vector<Instr> code_;
    int stack_need_ = 0;
};

// Resolves identifiers against the given layout. Unknown states, parameters,
// or out-of-range action indices raise Error::validation.
CompiledExpr compile_expr(const Expr& e, const std::vector<std::string>& state_names,
                          int action_dim, const std::vector<std::string>& param_names);

} // namespace mfc
