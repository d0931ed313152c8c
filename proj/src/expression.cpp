#include "reiterate/expression.hpp"

#include "reiterate/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>

namespace reiterate {

class ExpressionParser {
public:
  ExpressionParser(const std::string& src, const std::vector<std::string>& vars) : src_(src), vars_(vars) {}

  Expression run() {
    Expression e;
    out_ = &e.code_;
    expr();
    skip();
    if (pos_ != src_.size()) fail("unexpected character");
    if (out_->empty()) fail("empty expression");
    // Stack depth for the evaluator.
    int depth = 0, peak = 0;
    for (const auto& in : e.code_) {
      switch (in.op) {
        case Expression::Op::number:
        case Expression::Op::variable: ++depth; break;
        case Expression::Op::add:
        case Expression::Op::sub:
        case Expression::Op::mul:
        case Expression::Op::div:
        case Expression::Op::pow: --depth; break;
        default: break;
      }
      peak = std::max(peak, depth);
    }
    e.depth_ = peak;
    for (char c : src_)
      if (!std::isspace(static_cast<unsigned char>(c))) e.text_.push_back(c);
    return e;
  }

private:
  using Op = Expression::Op;

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("expression '" + src_ + "': " + what + " at position " + std::to_string(pos_));
  }
  void skip() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void emit(Op op, double v = 0.0, int var = -1) { out_->push_back({op, v, var}); }

  void expr() {
    term();
    for (;;) {
      if (accept('+')) {
        term();
        emit(Op::add);
      } else if (accept('-')) {
        term();
        emit(Op::sub);
      } else {
        return;
      }
    }
  }
  void term() {
    unary();
    for (;;) {
      if (accept('*')) {
        unary();
        emit(Op::mul);
      } else if (accept('/')) {
        unary();
        emit(Op::div);
      } else {
        return;
      }
    }
  }
  void unary() {
    if (accept('-')) {
      unary();
      emit(Op::neg);
    } else if (accept('+')) {
      unary();
    } else {
      power();
    }
  }
  void power() {
    primary();
    if (accept('^')) {
      unary();
      emit(Op::pow);
    }
  }
  void primary() {
    skip();
    if (pos_ >= src_.size()) fail("unexpected end");
    const char c = src_[pos_];
    if (accept('(')) {
      expr();
      if (!accept(')')) fail("missing ')'");
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(src_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("malformed number");
      }
      pos_ += used;
      emit(Op::number, v);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) ++pos_;
      const std::string name = src_.substr(start, pos_ - start);
      static const std::pair<const char*, Op> funcs[] = {
          {"sin", Op::sin}, {"cos", Op::cos}, {"exp", Op::exp}, {"sqrt", Op::sqrt}, {"abs", Op::abs}};
      for (const auto& [fname, op] : funcs) {
        if (name == fname) {
          if (!accept('(')) fail("expected '(' after " + name);
          expr();
          if (!accept(')')) fail("missing ')'");
          emit(op);
          return;
        }
      }
      const auto it = std::find(vars_.begin(), vars_.end(), name);
      if (it != vars_.end()) {
        emit(Op::variable, 0.0, static_cast<int>(it - vars_.begin()));
        return;
      }
      if (name == "pi") {
        emit(Op::number, std::numbers::pi);
        return;
      }
      if (name == "e") {
        emit(Op::number, std::numbers::e);
        return;
      }
      pos_ = start;
      std::string allowed;
      for (const auto& v : vars_) allowed += (allowed.empty() ? "" : ", ") + v;
      fail("unknown identifier '" + name + "' (variables: " + (allowed.empty() ? "none" : allowed) + ")");
    }
    fail("unexpected character");
  }

  const std::string& src_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
  std::vector<Expression::Instr>* out_ = nullptr;
};

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables) {
  return ExpressionParser(text, variables).run();
}

double Expression::operator()(const double* values) const {
  double stack_small[32] = {};
  std::vector<double> stack_large;
  double* st = stack_small;
  if (depth_ > 32) {
    stack_large.resize(depth_);
    st = stack_large.data();
  }
  int top = -1;
  for (const auto& in : code_) {
    switch (in.op) {
      case Op::number: st[++top] = in.value; break;
      case Op::variable: st[++top] = values[in.var]; break;
      case Op::add: st[top - 1] += st[top]; --top; break;
      case Op::sub: st[top - 1] -= st[top]; --top; break;
      case Op::mul: st[top - 1] *= st[top]; --top; break;
      case Op::div: st[top - 1] /= st[top]; --top; break;
      case Op::pow: st[top - 1] = std::pow(st[top - 1], st[top]); --top; break;
      case Op::neg: st[top] = -st[top]; break;
      case Op::sin: st[top] = std::sin(st[top]); break;
      case Op::cos: st[top] = std::cos(st[top]); break;
      case Op::exp: st[top] = std::exp(st[top]); break;
      case Op::sqrt: st[top] = std::sqrt(st[top]); break;
      case Op::abs: st[top] = std::abs(st[top]); break;
    }
  }
  return st[0];
}

bool Expression::uses(int index) const {
  return std::any_of(code_.begin(), code_.end(), [&](const Instr& in) { return in.op == Op::variable && in.var == index; });
}

bool Expression::is_constant() const {
  return std::none_of(code_.begin(), code_.end(), [](const Instr& in) { return in.op == Op::variable; });
}

}  // namespace reiterate
