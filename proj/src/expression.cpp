#include "blochhom/expression.hpp"

#include <cctype>
#include <charconv>
#include <functional>
#include <map>

#include "blochhom/error.hpp"

namespace blochhom {

struct Expression::Node {
  enum class Kind { number, variable, unary_minus, binary, call };
  Kind kind = Kind::number;
  double value = 0.0;
  bool is_x = false;
  int axis = 0;
  char op = '+';
  double (*fn)(double) = nullptr;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(const ExprArgs& a) const {
    switch (kind) {
      case Kind::number:
        return value;
      case Kind::variable:
        return is_x ? a.x[axis] : a.y[axis];
      case Kind::unary_minus:
        return -lhs->eval(a);
      case Kind::call:
        return fn(lhs->eval(a));
      case Kind::binary: {
        const double l = lhs->eval(a);
        const double r = rhs->eval(a);
        switch (op) {
          case '+': return l + r;
          case '-': return l - r;
          case '*': return l * r;
          case '/': return l / r;
          default: return std::pow(l, r);
        }
      }
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

  bool uses_x = false, uses_y = false;
  int max_axis = 0;

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("expression \"" + std::string(s_) + "\": " + msg + " at offset " +
                     std::to_string(pos_));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(char op, NodePtr l, NodePtr r) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::binary;
    n->op = op;
    n->lhs = std::move(l);
    n->rhs = std::move(r);
    return n;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) n = binary('+', n, term());
      else if (accept('-')) n = binary('-', n, term());
      else return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) n = binary('*', n, unary());
      else if (accept('/')) n = binary('/', n, unary());
      else return n;
    }
  }

  NodePtr unary() {
    if (accept('-')) {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::unary_minus;
      n->lhs = unary();
      return n;
    }
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return binary('^', base, unary());  // right associative
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char ch = s_[pos_];
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(ch))) return identifier();
    fail("unexpected character '" + std::string(1, ch) + "'");
  }

  NodePtr number() {
    double v = 0.0;
    const char* begin = s_.data() + pos_;
    const auto [end, ec] = std::from_chars(begin, s_.data() + s_.size(), v);
    if (ec != std::errc{}) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    auto n = std::make_shared<Node>();
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    const std::string name(s_.substr(start, pos_ - start));

    static const std::map<std::string, double (*)(double)> functions = {
        {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
        {"tan", [](double v) { return std::tan(v); }},   {"exp", [](double v) { return std::exp(v); }},
        {"log", [](double v) { return std::log(v); }},   {"sqrt", [](double v) { return std::sqrt(v); }},
        {"abs", [](double v) { return std::abs(v); }},   {"tanh", [](double v) { return std::tanh(v); }},
    };

    if (auto it = functions.find(name); it != functions.end()) {
      if (!accept('(')) fail("expected '(' after " + name);
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::call;
      n->fn = it->second;
      n->lhs = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (name == "pi") {
      auto n = std::make_shared<Node>();
      n->value = kPi;
      return n;
    }
    if (name == "x" || name == "y" || name == "x1" || name == "x2" || name == "y1" || name == "y2") {
      auto n = std::make_shared<Node>();
      n->kind = Node::Kind::variable;
      n->is_x = name[0] == 'x';
      n->axis = (name.size() == 2 && name[1] == '2') ? 1 : 0;
      (n->is_x ? uses_x : uses_y) = true;
      max_axis = std::max(max_axis, n->axis + 1);
      return n;
    }
    fail("unknown identifier '" + name + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
  Parser p(text);
  Expression e;
  e.root_ = p.parse();
  e.text_ = std::string(text);
  e.uses_x_ = p.uses_x;
  e.uses_y_ = p.uses_y;
  e.max_axis_ = p.max_axis;
  return e;
}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->value = value;
  Expression e;
  e.root_ = n;
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  e.text_.assign(buf, end);
  return e;
}

double Expression::operator()(const ExprArgs& args) const { return root_->eval(args); }

double Expression::at_y(const Point& y) const {
  ExprArgs a;
  a.y = y;
  return root_->eval(a);
}

double Expression::at_x(const Point& x) const {
  ExprArgs a;
  a.x = x;
  return root_->eval(a);
}

}  // namespace blochhom
