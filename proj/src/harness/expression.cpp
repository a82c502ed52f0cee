#include "wdl/harness/expression.hpp"

#include "wdl/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>
#include <vector>

namespace wdl::harness {

struct Expression::Node {
    enum class Kind { Constant, X, Y, R, Negate, Add, Sub, Mul, Div, Pow, Call };
    Kind kind = Kind::Constant;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> lhs;
    std::shared_ptr<const Node> rhs;

    [[nodiscard]] double eval(double x, double y) const
    {
        switch (kind) {
        case Kind::Constant: return value;
        case Kind::X: return x;
        case Kind::Y: return y;
        case Kind::R: return std::hypot(x, y);
        case Kind::Negate: return -lhs->eval(x, y);
        case Kind::Add: return lhs->eval(x, y) + rhs->eval(x, y);
        case Kind::Sub: return lhs->eval(x, y) - rhs->eval(x, y);
        case Kind::Mul: return lhs->eval(x, y) * rhs->eval(x, y);
        case Kind::Div: return lhs->eval(x, y) / rhs->eval(x, y);
        case Kind::Pow: return std::pow(lhs->eval(x, y), rhs->eval(x, y));
        case Kind::Call: return fn(lhs->eval(x, y));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

NodePtr make(Kind kind, NodePtr lhs = nullptr, NodePtr rhs = nullptr)
{
    auto node = std::make_shared<Expression::Node>();
    node->kind = kind;
    node->lhs = std::move(lhs);
    node->rhs = std::move(rhs);
    return node;
}

NodePtr constant(double v)
{
    auto node = std::make_shared<Expression::Node>();
    node->value = v;
    return node;
}

const std::map<std::string, double (*)(double)>& functions()
{
    static const std::map<std::string, double (*)(double)> table = {
        {"sin", [](double v) { return std::sin(v); }},
        {"cos", [](double v) { return std::cos(v); }},
        {"tan", [](double v) { return std::tan(v); }},
        {"exp", [](double v) { return std::exp(v); }},
        {"log", [](double v) { return std::log(v); }},
        {"sqrt", [](double v) { return std::sqrt(v); }},
        {"abs", [](double v) { return std::abs(v); }},
        {"tanh", [](double v) { return std::tanh(v); }},
    };
    return table;
}

// expr   := term (('+' | '-') term)*
// term   := unary (('*' | '/') unary)*
// unary  := '-' unary | '+' unary | power
// power  := atom ('^' unary)?
// atom   := number | name | name '(' expr ')' | '(' expr ')'
class Parser {
public:
    explicit Parser(const std::string& text) : text_(text) {}

    NodePtr parse()
    {
        NodePtr node = expr();
        skip();
        if (pos_ != text_.size()) {
            fail("unexpected character");
        }
        return node;
    }

private:
    const std::string& text_;
    std::size_t pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const
    {
        std::ostringstream os;
        os << "expression: " << what << " at position " << pos_ << " in '" << text_ << "'";
        throw InvalidArgument(os.str());
    }

    void skip()
    {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    bool accept(char c)
    {
        skip();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NodePtr expr()
    {
        NodePtr node = term();
        for (;;) {
            if (accept('+')) {
                node = make(Kind::Add, node, term());
            } else if (accept('-')) {
                node = make(Kind::Sub, node, term());
            } else {
                return node;
            }
        }
    }

    NodePtr term()
    {
        NodePtr node = unary();
        for (;;) {
            if (accept('*')) {
                node = make(Kind::Mul, node, unary());
            } else if (accept('/')) {
                node = make(Kind::Div, node, unary());
            } else {
                return node;
            }
        }
    }

    NodePtr unary()
    {
        if (accept('-')) {
            return make(Kind::Negate, unary());
        }
        if (accept('+')) {
            return unary();
        }
        return power();
    }

    NodePtr power()
    {
        NodePtr base = atom();
        if (accept('^')) {
            return make(Kind::Pow, base, unary());
        }
        return base;
    }

    NodePtr atom()
    {
        skip();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        const char c = text_[pos_];
        if (accept('(')) {
            NodePtr node = expr();
            if (!accept(')')) {
                fail("expected ')'");
            }
            return node;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = text_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) {
                fail("malformed number");
            }
            pos_ += static_cast<std::size_t>(end - begin);
            return constant(v);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
                ++pos_;
            }
            const std::string name = text_.substr(start, pos_ - start);
            if (name == "x") {
                return make(Kind::X);
            }
            if (name == "y") {
                return make(Kind::Y);
            }
            if (name == "r") {
                return make(Kind::R);
            }
            if (name == "pi") {
                return constant(M_PI);
            }
            if (name == "e") {
                return constant(M_E);
            }
            const auto it = functions().find(name);
            if (it == functions().end()) {
                pos_ = start;
                fail("unknown identifier '" + name + "'");
            }
            if (!accept('(')) {
                fail("expected '(' after " + name);
            }
            auto node = std::make_shared<Expression::Node>();
            node->kind = Kind::Call;
            node->fn = it->second;
            node->lhs = expr();
            if (!accept(')')) {
                fail("expected ')'");
            }
            return node;
        }
        fail("unexpected character");
    }
};

} // namespace

Expression Expression::parse(const std::string& text)
{
    Expression e;
    e.text_ = text;
    e.root_ = Parser(text).parse();
    return e;
}

double Expression::operator()(double x, double y) const
{
    return root_->eval(x, y);
}

} // namespace wdl::harness
