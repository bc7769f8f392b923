#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "blochhom/types.hpp"

namespace blochhom {

/// Arguments available to a coefficient expression.
struct ExprArgs {
  Point x = Point::zero(2);
  Point y = Point::zero(2);
};

/// A parsed closed-form coefficient rule such as "2 + cos(2*pi*y1)".
///
/// Grammar: numbers, `pi`, variables `x1 x2 y1 y2` (`x`, `y` alias the first
/// component), binary `+ - * / ^`, unary minus, and the functions
/// `sin cos tan exp log sqrt abs tanh`.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text);
  static Expression constant(double value);

  double operator()(const ExprArgs& args) const;
  double at_y(const Point& y) const;
  double at_x(const Point& x) const;

  const std::string& text() const { return text_; }
  bool depends_on_x() const { return uses_x_; }
  bool depends_on_y() const { return uses_y_; }
  /// Highest variable index referenced (0 when none).
  int max_axis() const { return max_axis_; }

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  bool uses_x_ = false;
  bool uses_y_ = false;
  int max_axis_ = 0;
};

}  // namespace blochhom
