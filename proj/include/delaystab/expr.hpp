#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace delaystab {

/// Syntax error raised by Expression::parse. `offset` is the byte position of
/// the offending token in the source string.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : std::runtime_error("parse error at offset " + std::to_string(offset) + ": " + message),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Domain error raised by Expression::eval (square root of a negative number,
/// division by zero). Carries the offending subexpression in printed form.
class EvalError : public std::runtime_error {
public:
    EvalError(const std::string& message, std::string subexpression)
        : std::runtime_error(message + " in `" + subexpression + "`"),
          subexpression_(std::move(subexpression)) {}

    const std::string& subexpression() const noexcept { return subexpression_; }

private:
    std::string subexpression_;
};

/// Immutable scalar function of time. Supports literals, the variable `t`,
/// + - * / with standard precedence, ^ with integer exponents (binding
/// tighter than unary minus), and sin, cos, tan, exp, sqrt, abs, min, max.
/// Angles are radians. Evaluation is pure and safe to call concurrently.
class Expression {
public:
    Expression() = default;

    static Expression parse(std::string_view source);

    double eval(double t) const {
        if (nodes_.empty()) throw std::logic_error("eval of empty expression");
        return eval_node(root_, t);
    }

    /// Minimal-parentheses form; re-parsing yields a structurally identical
    /// tree for any parse-produced expression.
    std::string to_string() const {
        std::string out;
        print_node(root_, 0, out);
        return out;
    }

    bool operator==(const Expression& other) const {
        if (nodes_.empty() || other.nodes_.empty()) return nodes_.empty() == other.nodes_.empty();
        return equal_nodes(*this, root_, other, other.root_);
    }
    bool operator!=(const Expression& other) const { return !(*this == other); }

    bool empty() const noexcept { return nodes_.empty(); }

private:
    enum class Op : unsigned char {
        literal, time_var,
        add, sub, mul, div,
        pow_int, neg,
        fn_sin, fn_cos, fn_tan, fn_exp, fn_sqrt, fn_abs,
        fn_min, fn_max
    };

    struct Node {
        Op op = Op::literal;
        double value = 0.0;  // literal payload
        int lhs = -1;
        int rhs = -1;
        int exponent = 0;    // pow_int payload
    };

    std::vector<Node> nodes_;
    int root_ = -1;

    int add_node(Node n) {
        nodes_.push_back(n);
        return static_cast<int>(nodes_.size()) - 1;
    }

    static double int_pow(double base, int exponent) {
        // exponentiation by squaring on the non-negative exponent
        unsigned n = exponent < 0 ? static_cast<unsigned>(-(long long)exponent)
                                  : static_cast<unsigned>(exponent);
        double result = 1.0, p = base;
        while (n != 0) {
            if (n & 1u) result *= p;
            p *= p;
            n >>= 1u;
        }
        return result;
    }

    double eval_node(int i, double t) const {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        switch (n.op) {
            case Op::literal:  return n.value;
            case Op::time_var: return t;
            case Op::add: return eval_node(n.lhs, t) + eval_node(n.rhs, t);
            case Op::sub: return eval_node(n.lhs, t) - eval_node(n.rhs, t);
            case Op::mul: return eval_node(n.lhs, t) * eval_node(n.rhs, t);
            case Op::div: {
                double num = eval_node(n.lhs, t);
                double den = eval_node(n.rhs, t);
                if (den == 0.0) throw EvalError("division by zero", subexpression(i));
                return num / den;
            }
            case Op::pow_int: {
                double base = eval_node(n.lhs, t);
                if (n.exponent < 0) {
                    if (base == 0.0) throw EvalError("zero raised to a negative power", subexpression(i));
                    return 1.0 / int_pow(base, n.exponent);
                }
                return int_pow(base, n.exponent);
            }
            case Op::neg:     return -eval_node(n.lhs, t);
            case Op::fn_sin:  return std::sin(eval_node(n.lhs, t));
            case Op::fn_cos:  return std::cos(eval_node(n.lhs, t));
            case Op::fn_tan:  return std::tan(eval_node(n.lhs, t));
            case Op::fn_exp:  return std::exp(eval_node(n.lhs, t));
            case Op::fn_sqrt: {
                double v = eval_node(n.lhs, t);
                if (v < 0.0) throw EvalError("square root of a negative number", subexpression(i));
                return std::sqrt(v);
            }
            case Op::fn_abs:  return std::fabs(eval_node(n.lhs, t));
            case Op::fn_min: {
                double a = eval_node(n.lhs, t), b = eval_node(n.rhs, t);
                return a < b ? a : b;
            }
            case Op::fn_max: {
                double a = eval_node(n.lhs, t), b = eval_node(n.rhs, t);
                return a > b ? a : b;
            }
        }
        throw std::logic_error("corrupt expression node");
    }

    std::string subexpression(int i) const {
        std::string out;
        print_node(i, 0, out);
        return out;
    }

    // precedence: + - (1) < * / (2) < unary - (3) < ^ (4) < atoms/calls (5)
    static int precedence(Op op) {
        switch (op) {
            case Op::add: case Op::sub: return 1;
            case Op::mul: case Op::div: return 2;
            case Op::neg: return 3;
            case Op::pow_int: return 4;
            default: return 5;
        }
    }

    static void append_double(double v, std::string& out) {
        char buf[32];
        auto r = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
        out.append(buf, r.ptr);
    }

    static const char* function_name(Op op) {
        switch (op) {
            case Op::fn_sin: return "sin";
            case Op::fn_cos: return "cos";
            case Op::fn_tan: return "tan";
            case Op::fn_exp: return "exp";
            case Op::fn_sqrt: return "sqrt";
            case Op::fn_abs: return "abs";
            case Op::fn_min: return "min";
            case Op::fn_max: return "max";
            default: return nullptr;
        }
    }

    // `min_prec`: parenthesize when this node binds no tighter than required.
    void print_node(int i, int min_prec, std::string& out) const {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        int prec = precedence(n.op);
        // a bare negative literal acts like a unary minus for grouping
        if (n.op == Op::literal && std::signbit(n.value)) prec = precedence(Op::neg);
        const bool parens = prec < min_prec;
        if (parens) out.push_back('(');
        switch (n.op) {
            case Op::literal:  append_double(n.value, out); break;
            case Op::time_var: out.push_back('t'); break;
            case Op::add:
                print_node(n.lhs, 1, out); out.push_back('+'); print_node(n.rhs, 2, out);
                break;
            case Op::sub:
                print_node(n.lhs, 1, out); out.push_back('-'); print_node(n.rhs, 2, out);
                break;
            case Op::mul:
                print_node(n.lhs, 2, out); out.push_back('*'); print_node(n.rhs, 3, out);
                break;
            case Op::div:
                print_node(n.lhs, 2, out); out.push_back('/'); print_node(n.rhs, 3, out);
                break;
            case Op::neg:
                out.push_back('-'); print_node(n.lhs, 3, out);
                break;
            case Op::pow_int: {
                print_node(n.lhs, 4, out);
                out.push_back('^');
                out += std::to_string(n.exponent);
                break;
            }
            default: {
                out += function_name(n.op);
                out.push_back('(');
                print_node(n.lhs, 0, out);
                if (n.rhs >= 0) { out.push_back(','); print_node(n.rhs, 0, out); }
                out.push_back(')');
                break;
            }
        }
        if (parens) out.push_back(')');
    }

    static bool equal_nodes(const Expression& a, int ia, const Expression& b, int ib) {
        const Node& na = a.nodes_[static_cast<std::size_t>(ia)];
        const Node& nb = b.nodes_[static_cast<std::size_t>(ib)];
        if (na.op != nb.op) return false;
        switch (na.op) {
            case Op::literal:  return na.value == nb.value;
            case Op::time_var: return true;
            case Op::pow_int:
                return na.exponent == nb.exponent && equal_nodes(a, na.lhs, b, nb.lhs);
            default:
                if (!equal_nodes(a, na.lhs, b, nb.lhs)) return false;
                if ((na.rhs >= 0) != (nb.rhs >= 0)) return false;
                return na.rhs < 0 || equal_nodes(a, na.rhs, b, nb.rhs);
        }
    }

    class Parser;
    friend class Parser;
};

class Expression::Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expression run() {
        if (src_.empty()) throw ParseError("empty expression", 0);
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("empty expression", 0);
        int root = parse_additive();
        skip_ws();
        if (pos_ < src_.size())
            throw ParseError(std::string("unexpected character `") + src_[pos_] + "`", pos_);
        expr_.root_ = root;
        return std::move(expr_);
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    Expression expr_;

    void skip_ws() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t')) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) { ++pos_; return true; }
        return false;
    }

    void expect(char c, const char* what) {
        if (!accept(c)) throw ParseError(std::string("expected ") + what, pos_);
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    int parse_additive() {
        int lhs = parse_multiplicative();
        for (;;) {
            if (accept('+')) lhs = expr_.add_node({Op::add, 0.0, lhs, parse_multiplicative(), 0});
            else if (accept('-')) lhs = expr_.add_node({Op::sub, 0.0, lhs, parse_multiplicative(), 0});
            else return lhs;
        }
    }

    int parse_multiplicative() {
        int lhs = parse_unary();
        for (;;) {
            if (accept('*')) lhs = expr_.add_node({Op::mul, 0.0, lhs, parse_unary(), 0});
            else if (accept('/')) lhs = expr_.add_node({Op::div, 0.0, lhs, parse_unary(), 0});
            else return lhs;
        }
    }

    int parse_unary() {
        if (accept('-')) return expr_.add_node({Op::neg, 0.0, parse_unary(), -1, 0});
        return parse_power();
    }

    int parse_power() {
        int base = parse_primary();
        while (accept('^')) {
            skip_ws();
            std::size_t at = pos_;
            bool negative = false;
            if (pos_ < src_.size() && src_[pos_] == '-') { negative = true; ++pos_; }
            std::size_t digits_begin = pos_;
            while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
            if (pos_ == digits_begin)
                throw ParseError("integer exponent required after `^`", at);
            if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E'))
                throw ParseError("integer exponent required after `^`", at);
            int exponent = 0;
            auto res = std::from_chars(src_.data() + digits_begin, src_.data() + pos_, exponent);
            if (res.ec != std::errc{})
                throw ParseError("exponent out of range", at);
            if (negative) exponent = -exponent;
            base = expr_.add_node({Op::pow_int, 0.0, base, -1, exponent});
        }
        return base;
    }

    int parse_primary() {
        skip_ws();
        if (pos_ >= src_.size()) throw ParseError("unexpected end of input", pos_);
        char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            int inner = parse_additive();
            expect(')', "`)`");
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_identifier();
        throw ParseError(std::string("unexpected character `") + c + "`", pos_);
    }

    int parse_number() {
        std::size_t at = pos_;
        std::size_t end = pos_;
        bool saw_digit = false;
        while (end < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.')) {
            saw_digit |= std::isdigit(static_cast<unsigned char>(src_[end]));
            ++end;
        }
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t e = end + 1;
            if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
            std::size_t mant = e;
            while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) ++e;
            if (e > mant) end = e;  // exponent only counts with digits after it
        }
        double value = 0.0;
        auto res = std::from_chars(src_.data() + at, src_.data() + end, value);
        if (!saw_digit || res.ec != std::errc{} || res.ptr != src_.data() + end)
            throw ParseError("malformed number", at);
        pos_ = end;
        return expr_.add_node({Op::literal, value, -1, -1, 0});
    }

    int parse_identifier() {
        std::size_t at = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        std::string_view name = src_.substr(at, pos_ - at);
        if (name == "t") {
            if (peek() == '(') throw ParseError("`t` is not a function", at);
            return expr_.add_node({Op::time_var, 0.0, -1, -1, 0});
        }
        Op op;
        bool binary = false;
        if      (name == "sin")  op = Op::fn_sin;
        else if (name == "cos")  op = Op::fn_cos;
        else if (name == "tan")  op = Op::fn_tan;
        else if (name == "exp")  op = Op::fn_exp;
        else if (name == "sqrt") op = Op::fn_sqrt;
        else if (name == "abs")  op = Op::fn_abs;
        else if (name == "min")  { op = Op::fn_min; binary = true; }
        else if (name == "max")  { op = Op::fn_max; binary = true; }
        else throw ParseError("unknown identifier `" + std::string(name) + "`", at);
        expect('(', "`(` after function name");
        int first = parse_additive();
        int second = -1;
        if (binary) {
            expect(',', "`,` between arguments");
            second = parse_additive();
        }
        expect(')', "`)`");
        return expr_.add_node({op, 0.0, first, second, 0});
    }
};

inline Expression Expression::parse(std::string_view source) {
    return Parser(source).run();
}

}  // namespace delaystab
