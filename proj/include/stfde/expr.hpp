#ifndef STFDE_EXPR_HPP
#define STFDE_EXPR_HPP

#include <memory>
#include <string>

#include "stfde/errors.hpp"

namespace stfde::expr {

/// Closed arithmetic grammar over one variable: + - * / ^, exp, sin, cos,
/// numeric constants, parentheses. Used for the g_i(t) factors and the
/// spatial coefficients a(x), c(x) in scenario files.
class Expression {
public:
    static Expression parse(const std::string& text, const std::string& var_name);
    double eval(double v) const;
    const std::string& text() const { return text_; }

    struct Node;
    Expression() = default;

private:
    std::shared_ptr<const Node> root_;
    std::string text_;
};

} // namespace stfde::expr

#endif
