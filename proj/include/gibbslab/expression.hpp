#pragma once

// Small arithmetic-expression language used by configuration files for
// potentials, densities, kernels and beta schedules.
//
//   numbers, variables, + - * / ^, unary minus, parentheses
//   functions: exp log sqrt abs cos sin tan pow(a, b) min(a, b) max(a, b)
//   constants: pi, e
//
// Variables are bound by name at compile time to slots of an argument array.

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace gibbs {

class Expression {
 public:
  Expression() = default;
  /// Throws Error(Format) with the column of the offending token.
  Expression(const std::string& source, std::vector<std::string> variables);

  double operator()(std::span<const double> args) const;
  double operator()(std::initializer_list<double> args) const {
    return (*this)(std::span<const double>(args.begin(), args.size()));
  }

  const std::string& source() const { return source_; }
  const std::vector<std::string>& variables() const { return variables_; }
  bool empty() const { return !root_; }
  /// True when the expression does not mention the given variable.
  bool independent_of(const std::string& variable) const;

  struct Node;

 private:
  std::string source_;
  std::vector<std::string> variables_;
  std::shared_ptr<const Node> root_;
};

}  // namespace gibbs
