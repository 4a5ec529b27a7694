#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "magwell/errors.hpp"
#include "magwell/vec3.hpp"

namespace magwell {

// Syntax problem in an expression string; `offset` is the byte position.
struct ParseError : ConfigError {
  std::size_t offset;
  ParseError(const std::string& what, std::size_t off)
      : ConfigError(what + " at offset " + std::to_string(off)), offset(off) {}
};

// Evaluation left the domain of sqrt/log/division; carries the printed
// offending subexpression in the message.
struct EvalDomainError : NumericalError {
  explicit EvalDomainError(const std::string& what) : NumericalError(what) {}
};

namespace detail {
struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;
}  // namespace detail

// Immutable symbolic scalar field over the configuration variables q1,q2,q3.
// Supports exact differentiation; evaluation is deterministic (same AST and
// point give the bitwise-identical IEEE result).
class Expr {
 public:
  Expr();  // the constant 0

  static Expr constant(double v);
  static Expr var(int index);  // 0 -> q1, 1 -> q2, 2 -> q3

  // Parses the calculator grammar:
  //   expr   := term (('+'|'-') term)*
  //   term   := factor (('*'|'/') factor)*
  //   factor := base ('^' integer)?
  //   base   := number | var | func '(' expr ')' | '(' expr ')' | '-' base
  // with func in {sqrt,sin,cos,exp,log} and var in {q1,q2,q3}.
  static Expr parse(std::string_view text);

  // Exact symbolic derivative with respect to q{var+1}. Results are folded
  // only through constants and 0/1 identities.
  Expr diff(int var) const;

  double eval(const Vec3& q) const;

  // Canonical printer; parse(str()) reproduces the AST for parse-built trees.
  std::string str() const;

  bool same_structure(const Expr& o) const;
  bool is_constant_zero() const;

  const detail::NodePtr& node() const { return node_; }
  explicit Expr(detail::NodePtr n) : node_(std::move(n)) {}

 private:
  detail::NodePtr node_;
};

// Arithmetic builders with constant folding and 0/1 identities.
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, int n);
Expr sqrt(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);

// Deterministic integer power by binary exponentiation; shared by the AST
// walker and the compiled tape so both produce identical bits.
double powi(double base, int n);

// Flat postfix program compiled from an Expr for hot loops (trajectory
// forces, lattice link phases). Performs the same operations in the same
// order as Expr::eval but without domain checks: out-of-domain input yields
// NaN/Inf which callers detect via finiteness guards.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  double eval(const Vec3& q) const;

 private:
  enum class Op : std::uint8_t {
    kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kSqrt, kSin, kCos, kExp, kLog
  };
  struct Instr {
    Op op;
    std::int32_t iarg = 0;
    double darg = 0.0;
  };
  std::vector<Instr> tape_;
  int stack_need_ = 0;
};

}  // namespace magwell
