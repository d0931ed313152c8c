#pragma once

#include <string>
#include <vector>

namespace reiterate {

/// Compiled arithmetic expression over named variables.
///
/// Grammar: `+ - * / ^`, unary minus, parentheses, the functions
/// `sin cos exp sqrt abs`, the constants `pi` and `e`, decimal literals and
/// identifiers drawn from the variable list given at parse time. Parse errors
/// name the offending position.
class Expression {
public:
  Expression() = default;
  static Expression parse(const std::string& text, const std::vector<std::string>& variables);

  /// `values[i]` binds the i-th variable of the parse-time list.
  double operator()(const double* values) const;
  double operator()(const std::vector<double>& values) const { return (*this)(values.data()); }

  /// True if the expression references variable `index`.
  bool uses(int index) const;
  bool is_constant() const;

  /// Whitespace-free source text, stable across parse/serialize round trips.
  const std::string& text() const { return text_; }

private:
  enum class Op : unsigned char { number, variable, add, sub, mul, div, pow, neg, sin, cos, exp, sqrt, abs };
  struct Instr {
    Op op;
    double value = 0.0;
    int var = -1;
  };
  friend class ExpressionParser;

  std::vector<Instr> code_;  // postfix
  std::string text_;
  int depth_ = 0;
};

}  // namespace reiterate
