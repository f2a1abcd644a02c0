#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace homog {

/// Tiny arithmetic expression: literals, + - * /, unary minus, sin, cos,
/// pi, and the variables x1, x2 (macro point) and y1, y2 (cell point).
/// Compiled once to postfix form; evaluation is allocation-free.
class Expression {
public:
    /// Bitmask naming which variables an expression may reference.
    enum VarMask : unsigned {
        kNone = 0,
        kMacro = 1, ///< x1, x2
        kCell = 2,  ///< y1, y2
        kBoth = 3,
    };

    Expression() = default;

    /// Parses `text`; throws ConfigError with a character offset on bad input
    /// or when a variable outside `allowed` appears.
    static Expression parse(const std::string& text, VarMask allowed);

    double eval(const double* x, const double* y) const;

    double eval_cell(const std::array<double, 2>& y) const { return eval(nullptr, y.data()); }
    double eval_macro(const std::array<double, 2>& x) const { return eval(x.data(), nullptr); }

    bool empty() const { return ops_.empty(); }
    const std::string& text() const { return text_; }

private:
    enum class Op : std::uint8_t {
        push_const,
        push_x1,
        push_x2,
        push_y1,
        push_y2,
        add,
        sub,
        mul,
        div,
        neg,
        sin,
        cos,
    };

    std::vector<Op> ops_;
    std::vector<double> consts_;
    std::string text_;

    friend class ExpressionParser;
};

} // namespace homog
