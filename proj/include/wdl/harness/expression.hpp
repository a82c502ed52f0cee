#pragma once

#include <memory>
#include <string>

namespace wdl::harness {

/// Arithmetic expression over the variables x, y and r = sqrt(x^2 + y^2).
///
/// Grammar: + - * / ^ (right associative, binds tighter than unary minus),
/// parentheses, numeric literals, the constants pi and e, and the functions
/// sin cos tan exp log sqrt abs tanh. Parse errors throw InvalidArgument with
/// the offending position.
class Expression {
public:
    static Expression parse(const std::string& text);

    [[nodiscard]] double operator()(double x, double y) const;
    [[nodiscard]] const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

} // namespace wdl::harness
