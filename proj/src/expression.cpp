#include "homog/expression.hpp"

#include "homog/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace homog {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

class ExpressionParser {
public:
    ExpressionParser(const std::string& text, Expression::VarMask allowed)
        : text_(text), allowed_(allowed) {}

    Expression run() {
        Expression e;
        e.text_ = text_;
        out_ = &e;
        parse_sum();
        skip_ws();
        if (pos_ != text_.size()) fail("trailing characters");
        if (e.ops_.empty()) fail("empty expression");
        return e;
    }

private:
    const std::string& text_;
    Expression::VarMask allowed_;
    std::size_t pos_ = 0;
    Expression* out_ = nullptr;

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("expression error at offset " + std::to_string(pos_) + " in \"" + text_
                          + "\": " + what);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    void emit(Expression::Op op) { out_->ops_.push_back(op); }

    void emit_const(double c) {
        out_->ops_.push_back(Expression::Op::push_const);
        out_->consts_.push_back(c);
    }

    void parse_sum() {
        parse_product();
        while (true) {
            if (consume('+')) {
                parse_product();
                emit(Expression::Op::add);
            } else if (consume('-')) {
                parse_product();
                emit(Expression::Op::sub);
            } else {
                return;
            }
        }
    }

    void parse_product() {
        parse_unary();
        while (true) {
            if (consume('*')) {
                parse_unary();
                emit(Expression::Op::mul);
            } else if (consume('/')) {
                parse_unary();
                emit(Expression::Op::div);
            } else {
                return;
            }
        }
    }

    void parse_unary() {
        if (consume('-')) {
            parse_unary();
            emit(Expression::Op::neg);
            return;
        }
        parse_atom();
    }

    void parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) fail("unexpected end of input");
        char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            parse_sum();
            if (!consume(')')) fail("expected ')'");
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            parse_number();
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c))) {
            parse_ident();
            return;
        }
        fail(std::string("unexpected character '") + c + "'");
    }

    void parse_number() {
        const char* begin = text_.c_str() + pos_;
        char* end = nullptr;
        double v = std::strtod(begin, &end);
        if (end == begin) fail("bad numeric literal");
        pos_ += static_cast<std::size_t>(end - begin);
        emit_const(v);
    }

    void parse_ident() {
        std::size_t start = pos_;
        while (pos_ < text_.size()
               && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
            ++pos_;
        std::string name = text_.substr(start, pos_ - start);
        if (name == "pi") {
            emit_const(kPi);
            return;
        }
        if (name == "sin" || name == "cos") {
            if (!consume('(')) fail("expected '(' after " + name);
            parse_sum();
            if (!consume(')')) fail("expected ')'");
            emit(name == "sin" ? Expression::Op::sin : Expression::Op::cos);
            return;
        }
        if (name == "x1" || name == "x2") {
            if (!(allowed_ & Expression::kMacro)) fail("variable " + name + " not allowed here");
            emit(name == "x1" ? Expression::Op::push_x1 : Expression::Op::push_x2);
            return;
        }
        if (name == "y1" || name == "y2") {
            if (!(allowed_ & Expression::kCell)) fail("variable " + name + " not allowed here");
            emit(name == "y1" ? Expression::Op::push_y1 : Expression::Op::push_y2);
            return;
        }
        fail("unknown identifier '" + name + "'");
    }
};

Expression Expression::parse(const std::string& text, VarMask allowed) {
    return ExpressionParser(text, allowed).run();
}

double Expression::eval(const double* x, const double* y) const {
    // Stack depth is bounded by expression nesting; 64 covers anything sane.
    double stack[64];
    int top = -1;
    std::size_t ci = 0;
    for (Op op : ops_) {
        switch (op) {
        case Op::push_const: stack[++top] = consts_[ci++]; break;
        case Op::push_x1: stack[++top] = x[0]; break;
        case Op::push_x2: stack[++top] = x[1]; break;
        case Op::push_y1: stack[++top] = y[0]; break;
        case Op::push_y2: stack[++top] = y[1]; break;
        case Op::add: stack[top - 1] += stack[top]; --top; break;
        case Op::sub: stack[top - 1] -= stack[top]; --top; break;
        case Op::mul: stack[top - 1] *= stack[top]; --top; break;
        case Op::div: stack[top - 1] /= stack[top]; --top; break;
        case Op::neg: stack[top] = -stack[top]; break;
        case Op::sin: stack[top] = std::sin(stack[top]); break;
        case Op::cos: stack[top] = std::cos(stack[top]); break;
        }
    }
    return stack[0];
}

} // namespace homog
