// SPDX-License-Identifier: MIT
/// @file claim_expression.hpp
/// @brief Small arithmetic language for claims h(M_T).
///
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?          right associative, binds tighter than unary minus
///   primary := number | identifier | call | '(' expr ')'
///   call    := name '(' expr (',' expr)* ')'
///   name    := max | min | abs | exp | log | sqrt | ind
///   ind(a OP b), OP in < <= > >= == !=, is 1 when the comparison holds and 0 otherwise.
///
/// The identifier `x` is the terminal value M_T; other identifiers must be
/// bound as parameters at parse time.
#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gkwpi {

class ClaimExpression {
public:
    /// Throws ValidationError naming the offending column of `text`.
    static ClaimExpression parse(std::string_view text,
                                 const std::map<std::string, double>& parameters = {});

    double operator()(double x) const;
    const std::string& text() const noexcept { return text_; }

    enum class Op {
        Number, Variable, Add, Sub, Mul, Div, Pow, Neg, Max, Min, Abs, Exp, Log, Sqrt,
        Lt, Le, Gt, Ge, Eq, Ne
    };
    struct Node {
        Op op;
        double value = 0.0;
        std::vector<int> args;
    };

private:
    double eval(int node, double x) const;

    std::string text_;
    std::vector<Node> nodes_;
    int root_ = -1;

    friend class ClaimParser;
};

}  // namespace gkwpi
