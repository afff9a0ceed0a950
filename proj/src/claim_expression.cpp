// SPDX-License-Identifier: MIT
#include "gkwpi/claim_expression.hpp"

#include "gkwpi/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace gkwpi {

class ClaimParser {
public:
    ClaimParser(std::string_view text, const std::map<std::string, double>& parameters,
                ClaimExpression& out)
        : text_(text), params_(parameters), out_(out) {}

    int parse() {
        const int root = expr();
        skip();
        if (pos_ != text_.size()) fail("unexpected character");
        return root;
    }

private:
    using Op = ClaimExpression::Op;

    [[noreturn]] void fail(const std::string& what) const {
        std::ostringstream os;
        os << "claim expression: " << what << " at column " << pos_ + 1 << " in \"" << text_ << "\"";
        throw ValidationError(os.str());
    }

    void skip() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(std::string_view token) {
        skip();
        if (text_.substr(pos_, token.size()) == token) {
            pos_ += token.size();
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(std::string_view(&c, 1))) fail(std::string("expected '") + c + "'");
    }

    int node(Op op, std::vector<int> args = {}, double value = 0.0) {
        out_.nodes_.push_back({op, value, std::move(args)});
        return static_cast<int>(out_.nodes_.size() - 1);
    }

    int expr() {
        int lhs = term();
        for (;;) {
            if (accept("+")) lhs = node(Op::Add, {lhs, term()});
            else if (accept("-")) lhs = node(Op::Sub, {lhs, term()});
            else return lhs;
        }
    }

    int term() {
        int lhs = unary();
        for (;;) {
            if (accept("*")) lhs = node(Op::Mul, {lhs, unary()});
            else if (accept("/")) lhs = node(Op::Div, {lhs, unary()});
            else return lhs;
        }
    }

    int unary() {
        if (accept("-")) return node(Op::Neg, {unary()});
        if (accept("+")) return unary();
        return power();
    }

    int power() {
        const int base = primary();
        if (accept("^")) return node(Op::Pow, {base, unary()});
        return base;
    }

    int primary() {
        skip();
        if (pos_ >= text_.size()) fail("unexpected end of expression");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            const int inner = expr();
            expect(')');
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected character");
    }

    int number() {
        double v = 0.0;
        const char* begin = text_.data() + pos_;
        const auto [end, ec] = std::from_chars(begin, text_.data() + text_.size(), v);
        if (ec != std::errc()) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return node(Op::Number, {}, v);
    }

    int identifier() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
            ++pos_;
        }
        const std::string name(text_.substr(start, pos_ - start));
        skip();
        if (pos_ < text_.size() && text_[pos_] == '(') {
            ++pos_;
            return call(name, start);
        }
        if (name == "x") return node(Op::Variable);
        const auto it = params_.find(name);
        if (it == params_.end()) {
            pos_ = start;
            fail("unknown identifier '" + name + "'");
        }
        return node(Op::Number, {}, it->second);
    }

    int call(const std::string& name, std::size_t start) {
        if (name == "ind") {
            const int lhs = expr();
            Op op;
            if (accept("<=")) op = Op::Le;
            else if (accept(">=")) op = Op::Ge;
            else if (accept("==")) op = Op::Eq;
            else if (accept("!=")) op = Op::Ne;
            else if (accept("<")) op = Op::Lt;
            else if (accept(">")) op = Op::Gt;
            else fail("ind() needs a comparison");
            const int rhs = expr();
            expect(')');
            return node(op, {lhs, rhs});
        }
        std::vector<int> args{expr()};
        while (accept(",")) args.push_back(expr());
        expect(')');
        auto unary_fn = [&](Op op) {
            if (args.size() != 1) {
                pos_ = start;
                fail(name + "() takes one argument");
            }
            return node(op, args);
        };
        if (name == "max" || name == "min") {
            if (args.size() < 2) {
                pos_ = start;
                fail(name + "() takes at least two arguments");
            }
            return node(name == "max" ? Op::Max : Op::Min, args);
        }
        if (name == "abs") return unary_fn(Op::Abs);
        if (name == "exp") return unary_fn(Op::Exp);
        if (name == "log") return unary_fn(Op::Log);
        if (name == "sqrt") return unary_fn(Op::Sqrt);
        pos_ = start;
        fail("unknown function '" + name + "'");
    }

    std::string_view text_;
    const std::map<std::string, double>& params_;
    ClaimExpression& out_;
    std::size_t pos_ = 0;
};

ClaimExpression ClaimExpression::parse(std::string_view text,
                                       const std::map<std::string, double>& parameters) {
    ClaimExpression e;
    e.text_ = std::string(text);
    ClaimParser parser(e.text_, parameters, e);
    e.root_ = parser.parse();
    return e;
}

double ClaimExpression::operator()(double x) const { return eval(root_, x); }

double ClaimExpression::eval(int index, double x) const {
    const Node& n = nodes_[static_cast<std::size_t>(index)];
    auto arg = [&](std::size_t i) { return eval(n.args[i], x); };
    switch (n.op) {
        case Op::Number: return n.value;
        case Op::Variable: return x;
        case Op::Add: return arg(0) + arg(1);
        case Op::Sub: return arg(0) - arg(1);
        case Op::Mul: return arg(0) * arg(1);
        case Op::Div: return arg(0) / arg(1);
        case Op::Pow: {
            const double b = arg(0);
            const double p = arg(1);
            if (p == 2.0) return b * b;
            return std::pow(b, p);
        }
        case Op::Neg: return -arg(0);
        case Op::Max: {
            double v = arg(0);
            for (std::size_t i = 1; i < n.args.size(); ++i) v = std::max(v, arg(i));
            return v;
        }
        case Op::Min: {
            double v = arg(0);
            for (std::size_t i = 1; i < n.args.size(); ++i) v = std::min(v, arg(i));
            return v;
        }
        case Op::Abs: return std::abs(arg(0));
        case Op::Exp: return std::exp(arg(0));
        case Op::Log: return std::log(arg(0));
        case Op::Sqrt: return std::sqrt(arg(0));
        case Op::Lt: return arg(0) < arg(1) ? 1.0 : 0.0;
        case Op::Le: return arg(0) <= arg(1) ? 1.0 : 0.0;
        case Op::Gt: return arg(0) > arg(1) ? 1.0 : 0.0;
        case Op::Ge: return arg(0) >= arg(1) ? 1.0 : 0.0;
        case Op::Eq: return arg(0) == arg(1) ? 1.0 : 0.0;
        case Op::Ne: return arg(0) != arg(1) ? 1.0 : 0.0;
    }
    return 0.0;
}

}  // namespace gkwpi
