#include "stfde/expr.hpp"

#include <cctype>
#include <cmath>
#include <vector>

namespace stfde::expr {

struct Expression::Node {
    enum class Kind { constant, variable, add, sub, mul, div, pow, neg, exp, sin, cos };
    Kind kind;
    double value = 0.0;
    std::shared_ptr<const Node> a, b;

    double eval(double v) const {
        switch (kind) {
        case Kind::constant: return value;
        case Kind::variable: return v;
        case Kind::add: return a->eval(v) + b->eval(v);
        case Kind::sub: return a->eval(v) - b->eval(v);
        case Kind::mul: return a->eval(v) * b->eval(v);
        case Kind::div: return a->eval(v) / b->eval(v);
        case Kind::pow: return std::pow(a->eval(v), b->eval(v));
        case Kind::neg: return -a->eval(v);
        case Kind::exp: return std::exp(a->eval(v));
        case Kind::sin: return std::sin(a->eval(v));
        case Kind::cos: return std::cos(a->eval(v));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind k, NodePtr a = nullptr, NodePtr b = nullptr, double v = 0.0) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = v;
    return n;
}

struct Parser {
    const std::string& s;
    const std::string& var;
    std::size_t pos = 0;

    void skip() {
        while (pos < s.size() && std::isspace((unsigned char)s[pos])) ++pos;
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
    [[noreturn]] void fail(const std::string& what) {
        throw domain_error("expression parse error at position " + std::to_string(pos) + ": " +
                           what + " in \"" + s + "\"");
    }

    NodePtr expression() {
        NodePtr n = term();
        for (;;) {
            if (eat('+'))
                n = make(Kind::add, n, term());
            else if (eat('-'))
                n = make(Kind::sub, n, term());
            else
                return n;
        }
    }
    NodePtr term() {
        NodePtr n = unary();
        for (;;) {
            if (eat('*'))
                n = make(Kind::mul, n, unary());
            else if (eat('/'))
                n = make(Kind::div, n, unary());
            else
                return n;
        }
    }
    NodePtr unary() {
        if (eat('-')) return make(Kind::neg, unary());
        return power();
    }
    NodePtr power() {
        NodePtr base = atom();
        if (eat('^')) return make(Kind::pow, base, unary()); // right-associative
        return base;
    }
    NodePtr atom() {
        skip();
        if (pos >= s.size()) fail("unexpected end of input");
        const char c = s[pos];
        if (std::isdigit((unsigned char)c) || c == '.') {
            std::size_t used = 0;
            double v;
            try {
                v = std::stod(s.substr(pos), &used);
            } catch (...) {
                fail("bad number");
            }
            pos += used;
            return make(Kind::constant, nullptr, nullptr, v);
        }
        if (c == '(') {
            ++pos;
            NodePtr n = expression();
            if (!eat(')')) fail("missing ')'");
            return n;
        }
        if (std::isalpha((unsigned char)c)) {
            std::size_t start = pos;
            while (pos < s.size() && std::isalnum((unsigned char)s[pos])) ++pos;
            const std::string id = s.substr(start, pos - start);
            if (id == var) return make(Kind::variable);
            Kind k;
            if (id == "exp")
                k = Kind::exp;
            else if (id == "sin")
                k = Kind::sin;
            else if (id == "cos")
                k = Kind::cos;
            else if (id == "pi")
                return make(Kind::constant, nullptr, nullptr, 3.141592653589793238462643);
            else
                fail("unknown identifier '" + id + "'");
            if (!eat('(')) fail("expected '(' after " + id);
            NodePtr arg = expression();
            if (!eat(')')) fail("missing ')'");
            return make(k, arg);
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

} // namespace

Expression Expression::parse(const std::string& text, const std::string& var_name) {
    Parser p{text, var_name};
    Expression e;
    e.root_ = p.expression();
    p.skip();
    if (p.pos != text.size()) p.fail("trailing input");
    e.text_ = text;
    return e;
}

double Expression::eval(double v) const {
    if (!root_) throw domain_error("Expression: empty");
    const double r = root_->eval(v);
    if (!std::isfinite(r)) throw domain_error("Expression: non-finite value from \"" + text_ + "\"");
    return r;
}

} // namespace stfde::expr
