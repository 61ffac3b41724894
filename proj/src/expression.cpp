#include "gibbslab/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <numbers>

#include "gibbslab/error.hpp"

namespace gibbs {

struct Expression::Node {
  enum class Op { Number, Variable, Neg, Add, Sub, Mul, Div, Pow, Call } op;
  double number = 0.0;
  std::size_t slot = 0;
  std::string function;
  std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, std::vector<NodePtr> args = {}) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->args = std::move(args);
  return n;
}

int function_arity(const std::string& name) {
  if (name == "exp" || name == "log" || name == "sqrt" || name == "abs" || name == "cos" ||
      name == "sin" || name == "tan")
    return 1;
  if (name == "pow" || name == "min" || name == "max") return 2;
  return -1;
}

class Parser {
 public:
  Parser(const std::string& src, const std::vector<std::string>& vars)
      : src_(src), vars_(vars) {}

  NodePtr parse() {
    auto n = sum();
    skip_space();
    if (pos_ != src_.size()) error("unexpected '" + std::string(1, src_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::Format, "expression '" + src_ + "' column " + std::to_string(pos_ + 1) +
                                ": " + what);
  }

  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr sum() {
    auto left = product();
    while (true) {
      if (accept('+')) left = make(Op::Add, {left, product()});
      else if (accept('-')) left = make(Op::Sub, {left, product()});
      else return left;
    }
  }

  NodePtr product() {
    auto left = unary();
    while (true) {
      if (accept('*')) left = make(Op::Mul, {left, unary()});
      else if (accept('/')) left = make(Op::Div, {left, unary()});
      else return left;
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, {unary()});
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    auto base = atom();
    // Right associative; binds tighter than unary minus on the left.
    if (accept('^')) return make(Op::Pow, {base, unary()});
    return base;
  }

  NodePtr atom() {
    skip_space();
    if (pos_ >= src_.size()) error("unexpected end of expression");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) error("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      auto n = std::make_shared<Expression::Node>();
      n->op = Op::Number;
      n->number = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      const std::string name = src_.substr(start, pos_ - start);
      if (accept('(')) {
        const int arity = function_arity(name);
        if (arity < 0) {
          pos_ = start;
          error("unknown function '" + name + "'");
        }
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Call;
        n->function = name;
        n->args.push_back(sum());
        for (int a = 1; a < arity; ++a) {
          if (!accept(',')) error("'" + name + "' takes " + std::to_string(arity) + " arguments");
          n->args.push_back(sum());
        }
        if (!accept(')')) error("expected ')'");
        return n;
      }
      for (std::size_t i = 0; i < vars_.size(); ++i)
        if (vars_[i] == name) {
          auto n = std::make_shared<Expression::Node>();
          n->op = Op::Variable;
          n->slot = i;
          return n;
        }
      auto constant = std::make_shared<Expression::Node>();
      constant->op = Op::Number;
      if (name == "pi") constant->number = std::numbers::pi;
      else if (name == "e") constant->number = std::numbers::e;
      else {
        pos_ = start;
        error("unknown symbol '" + name + "'");
      }
      return constant;
    }
    if (accept('(')) {
      auto n = sum();
      if (!accept(')')) error("expected ')'");
      return n;
    }
    error("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

double eval(const Expression::Node& n, std::span<const double> args) {
  switch (n.op) {
    case Op::Number: return n.number;
    case Op::Variable: return args[n.slot];
    case Op::Neg: return -eval(*n.args[0], args);
    case Op::Add: return eval(*n.args[0], args) + eval(*n.args[1], args);
    case Op::Sub: return eval(*n.args[0], args) - eval(*n.args[1], args);
    case Op::Mul: return eval(*n.args[0], args) * eval(*n.args[1], args);
    case Op::Div: return eval(*n.args[0], args) / eval(*n.args[1], args);
    case Op::Pow: return std::pow(eval(*n.args[0], args), eval(*n.args[1], args));
    case Op::Call: {
      const double a = eval(*n.args[0], args);
      const std::string& f = n.function;
      if (f == "exp") return std::exp(a);
      if (f == "log") return std::log(a);
      if (f == "sqrt") return std::sqrt(a);
      if (f == "abs") return std::fabs(a);
      if (f == "cos") return std::cos(a);
      if (f == "sin") return std::sin(a);
      if (f == "tan") return std::tan(a);
      const double b = eval(*n.args[1], args);
      if (f == "pow") return std::pow(a, b);
      if (f == "min") return std::fmin(a, b);
      return std::fmax(a, b);
    }
  }
  return 0.0;
}

bool mentions(const Expression::Node& n, std::size_t slot) {
  if (n.op == Op::Variable) return n.slot == slot;
  for (const auto& a : n.args)
    if (mentions(*a, slot)) return true;
  return false;
}

}  // namespace

Expression::Expression(const std::string& source, std::vector<std::string> variables)
    : source_(source), variables_(std::move(variables)) {
  Parser p(source_, variables_);
  root_ = p.parse();
}

double Expression::operator()(std::span<const double> args) const {
  if (!root_) fail(ErrorCode::InvalidArgument, "empty expression evaluated");
  if (args.size() < variables_.size())
    fail(ErrorCode::InvalidArgument, "expression '" + source_ + "' needs " +
                                         std::to_string(variables_.size()) + " arguments");
  return eval(*root_, args);
}

bool Expression::independent_of(const std::string& variable) const {
  for (std::size_t i = 0; i < variables_.size(); ++i)
    if (variables_[i] == variable) return !root_ || !mentions(*root_, i);
  return true;
}

}  // namespace gibbs
