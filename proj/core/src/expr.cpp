#include "magwell/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace magwell {
namespace detail {

enum class Kind : std::uint8_t { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kFunc };
enum class Fn : std::uint8_t { kSqrt, kSin, kCos, kExp, kLog };

struct ExprNode {
  Kind kind;
  double value = 0.0;     // kConst
  int var = 0;            // kVar
  int exponent = 0;       // kPow
  Fn fn = Fn::kSqrt;      // kFunc
  NodePtr a, b;
};

namespace {

NodePtr make_const(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::kConst;
  n->value = v;
  return n;
}

NodePtr make_var(int idx) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::kVar;
  n->var = idx;
  return n;
}

NodePtr make_binary(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_pow(NodePtr a, int e) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::kPow;
  n->a = std::move(a);
  n->exponent = e;
  return n;
}

NodePtr make_neg(NodePtr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::kNeg;
  n->a = std::move(a);
  return n;
}

NodePtr make_func(Fn f, NodePtr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::kFunc;
  n->fn = f;
  n->a = std::move(a);
  return n;
}

bool is_const(const NodePtr& n, double v) { return n->kind == Kind::kConst && n->value == v; }
bool is_const(const NodePtr& n) { return n->kind == Kind::kConst; }

// Folding builders used by diff: constants and 0/1 identities only,
// correctness over beauty.
NodePtr fadd(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return b;
  if (is_const(b, 0.0)) return a;
  if (is_const(a) && is_const(b)) return make_const(a->value + b->value);
  return make_binary(Kind::kAdd, std::move(a), std::move(b));
}

NodePtr fsub(NodePtr a, NodePtr b) {
  if (is_const(b, 0.0)) return a;
  if (is_const(a) && is_const(b)) return make_const(a->value - b->value);
  if (is_const(a, 0.0)) return make_neg(std::move(b));
  return make_binary(Kind::kSub, std::move(a), std::move(b));
}

NodePtr fmul(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
  if (is_const(a, 1.0)) return b;
  if (is_const(b, 1.0)) return a;
  if (is_const(a) && is_const(b)) return make_const(a->value * b->value);
  return make_binary(Kind::kMul, std::move(a), std::move(b));
}

NodePtr fdiv(NodePtr a, NodePtr b) {
  if (is_const(a, 0.0)) return make_const(0.0);
  if (is_const(b, 1.0)) return a;
  if (is_const(a) && is_const(b) && b->value != 0.0) return make_const(a->value / b->value);
  return make_binary(Kind::kDiv, std::move(a), std::move(b));
}

NodePtr fneg(NodePtr a) {
  if (is_const(a)) return make_const(-a->value);
  if (a->kind == Kind::kNeg) return a->a;
  return make_neg(std::move(a));
}

NodePtr fpow(NodePtr a, int e) {
  if (e == 0) return make_const(1.0);
  if (e == 1) return a;
  if (is_const(a)) return make_const(powi(a->value, e));
  return make_pow(std::move(a), e);
}

const char* fn_name(Fn f) {
  switch (f) {
    case Fn::kSqrt: return "sqrt";
    case Fn::kSin: return "sin";
    case Fn::kCos: return "cos";
    case Fn::kExp: return "exp";
    case Fn::kLog: return "log";
  }
  return "?";
}

NodePtr diff_node(const NodePtr& n, int v) {
  switch (n->kind) {
    case Kind::kConst: return make_const(0.0);
    case Kind::kVar: return make_const(n->var == v ? 1.0 : 0.0);
    case Kind::kAdd: return fadd(diff_node(n->a, v), diff_node(n->b, v));
    case Kind::kSub: return fsub(diff_node(n->a, v), diff_node(n->b, v));
    case Kind::kMul:
      return fadd(fmul(diff_node(n->a, v), n->b), fmul(n->a, diff_node(n->b, v)));
    case Kind::kDiv:
      return fdiv(fsub(fmul(diff_node(n->a, v), n->b), fmul(n->a, diff_node(n->b, v))),
                  fpow(n->b, 2));
    case Kind::kPow:
      return fmul(fmul(make_const(static_cast<double>(n->exponent)), fpow(n->a, n->exponent - 1)),
                  diff_node(n->a, v));
    case Kind::kNeg: return fneg(diff_node(n->a, v));
    case Kind::kFunc: {
      NodePtr inner = diff_node(n->a, v);
      switch (n->fn) {
        case Fn::kSqrt:
          return fdiv(inner, fmul(make_const(2.0), make_func(Fn::kSqrt, n->a)));
        case Fn::kSin: return fmul(make_func(Fn::kCos, n->a), inner);
        case Fn::kCos: return fneg(fmul(make_func(Fn::kSin, n->a), inner));
        case Fn::kExp: return fmul(make_func(Fn::kExp, n->a), inner);
        case Fn::kLog: return fdiv(inner, n->a);
      }
      return make_const(0.0);
    }
  }
  return make_const(0.0);
}

std::string print_node(const NodePtr& n);

// Precedence: add/sub 1, mul/div 2, pow 3, atoms 4.
int precedence(const NodePtr& n) {
  switch (n->kind) {
    case Kind::kAdd:
    case Kind::kSub: return 1;
    case Kind::kMul:
    case Kind::kDiv: return 2;
    case Kind::kNeg: return 1;  // prints as leading '-'
    case Kind::kPow: return 3;
    default: return 4;
  }
}

std::string print_child(const NodePtr& c, int min_prec) {
  std::string s = print_node(c);
  bool paren = precedence(c) < min_prec;
  if (c->kind == Kind::kConst && c->value < 0) paren = true;
  return paren ? "(" + s + ")" : s;
}

std::string print_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string print_node(const NodePtr& n) {
  switch (n->kind) {
    case Kind::kConst: return print_double(n->value);
    case Kind::kVar: return n->var == 0 ? "q1" : (n->var == 1 ? "q2" : "q3");
    case Kind::kAdd: return print_child(n->a, 1) + "+" + print_child(n->b, 2);
    case Kind::kSub: return print_child(n->a, 1) + "-" + print_child(n->b, 2);
    case Kind::kMul: return print_child(n->a, 2) + "*" + print_child(n->b, 3);
    case Kind::kDiv: return print_child(n->a, 2) + "/" + print_child(n->b, 3);
    case Kind::kPow: return print_child(n->a, 4) + "^" + std::to_string(n->exponent);
    case Kind::kNeg: return "-" + print_child(n->a, 2);
    case Kind::kFunc: return std::string(fn_name(n->fn)) + "(" + print_node(n->a) + ")";
  }
  return "?";
}

double eval_node(const ExprNode* n, const Vec3& q) {
  switch (n->kind) {
    case Kind::kConst: return n->value;
    case Kind::kVar: return q[n->var];
    case Kind::kAdd: return eval_node(n->a.get(), q) + eval_node(n->b.get(), q);
    case Kind::kSub: return eval_node(n->a.get(), q) - eval_node(n->b.get(), q);
    case Kind::kMul: return eval_node(n->a.get(), q) * eval_node(n->b.get(), q);
    case Kind::kDiv: {
      double num = eval_node(n->a.get(), q);
      double den = eval_node(n->b.get(), q);
      if (den == 0.0) {
        NodePtr hold(n->b);
        throw EvalDomainError("division by zero in '" + print_node(hold) + "'");
      }
      return num / den;
    }
    case Kind::kPow: {
      double base = eval_node(n->a.get(), q);
      if (base == 0.0 && n->exponent < 0) {
        NodePtr hold(n->a);
        throw EvalDomainError("zero base with negative power in '" + print_node(hold) + "'");
      }
      return powi(base, n->exponent);
    }
    case Kind::kNeg: return -eval_node(n->a.get(), q);
    case Kind::kFunc: {
      double x = eval_node(n->a.get(), q);
      switch (n->fn) {
        case Fn::kSqrt:
          if (x < 0.0) {
            NodePtr hold(n->a);
            throw EvalDomainError("sqrt of negative argument in 'sqrt(" + print_node(hold) + ")'");
          }
          return std::sqrt(x);
        case Fn::kSin: return std::sin(x);
        case Fn::kCos: return std::cos(x);
        case Fn::kExp: return std::exp(x);
        case Fn::kLog:
          if (x <= 0.0) {
            NodePtr hold(n->a);
            throw EvalDomainError("log of non-positive argument in 'log(" + print_node(hold) +
                                  ")'");
          }
          return std::log(x);
      }
      return 0.0;
    }
  }
  return 0.0;
}

bool same_node(const ExprNode* x, const ExprNode* y) {
  if (x == y) return true;
  if (x->kind != y->kind) return false;
  switch (x->kind) {
    case Kind::kConst: return x->value == y->value;
    case Kind::kVar: return x->var == y->var;
    case Kind::kPow: return x->exponent == y->exponent && same_node(x->a.get(), y->a.get());
    case Kind::kNeg: return same_node(x->a.get(), y->a.get());
    case Kind::kFunc: return x->fn == y->fn && same_node(x->a.get(), y->a.get());
    default: return same_node(x->a.get(), y->a.get()) && same_node(x->b.get(), y->b.get());
  }
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr run() {
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) { throw ParseError("syntax error: " + msg, pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr e = parse_term();
    while (true) {
      if (eat('+')) e = make_binary(Kind::kAdd, e, parse_term());
      else if (eat('-')) e = make_binary(Kind::kSub, e, parse_term());
      else return e;
    }
  }

  NodePtr parse_term() {
    NodePtr e = parse_factor();
    while (true) {
      if (eat('*')) e = make_binary(Kind::kMul, e, parse_factor());
      else if (eat('/')) e = make_binary(Kind::kDiv, e, parse_factor());
      else return e;
    }
  }

  NodePtr parse_factor() {
    NodePtr b = parse_base();
    if (eat('^')) return make_pow(b, parse_int());
    return b;
  }

  int parse_int() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < s_.size() && s_[pos_] == '-') ++pos_;
    std::size_t digits = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == digits) {
      pos_ = start;
      fail("expected integer exponent");
    }
    return std::atoi(std::string(s_.substr(start, pos_ - start)).c_str());
  }

  NodePtr parse_base() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '-') {
      ++pos_;
      return make_neg(parse_base());
    }
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t mark = pos_;
      ++pos_;
      if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
      if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      } else {
        pos_ = mark;  // 'e' belongs to something else; not part of the number
      }
    }
    std::string tok(s_.substr(start, pos_ - start));
    return make_const(std::strtod(tok.c_str(), nullptr));
  }

  NodePtr parse_ident() {
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    std::string id(s_.substr(start, pos_ - start));
    if (id == "q1") return make_var(0);
    if (id == "q2") return make_var(1);
    if (id == "q3") return make_var(2);
    Fn fn;
    if (id == "sqrt") fn = Fn::kSqrt;
    else if (id == "sin") fn = Fn::kSin;
    else if (id == "cos") fn = Fn::kCos;
    else if (id == "exp") fn = Fn::kExp;
    else if (id == "log") fn = Fn::kLog;
    else {
      pos_ = start;
      throw ParseError("unknown identifier '" + id + "'", start);
    }
    if (!eat('(')) fail("expected '(' after function name");
    NodePtr arg = parse_expr();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ',')
      throw ParseError("arity mismatch: '" + id + "' takes one argument", pos_);
    if (!eat(')')) fail("expected ')'");
    return make_func(fn, arg);
  }
};

}  // namespace
}  // namespace detail

using detail::ExprNode;
using detail::Kind;

double powi(double base, int n) {
  if (n < 0) return 1.0 / powi(base, -n);
  double result = 1.0, p = base;
  while (n > 0) {
    if (n & 1) result *= p;
    p *= p;
    n >>= 1;
  }
  return result;
}

Expr::Expr() : node_(detail::make_const(0.0)) {}
Expr Expr::constant(double v) { return Expr(detail::make_const(v)); }
Expr Expr::var(int index) { return Expr(detail::make_var(index)); }
Expr Expr::parse(std::string_view text) { return Expr(detail::Parser(text).run()); }
Expr Expr::diff(int var) const { return Expr(detail::diff_node(node_, var)); }
double Expr::eval(const Vec3& q) const { return detail::eval_node(node_.get(), q); }
std::string Expr::str() const { return detail::print_node(node_); }
bool Expr::same_structure(const Expr& o) const {
  return detail::same_node(node_.get(), o.node_.get());
}
bool Expr::is_constant_zero() const {
  return node_->kind == Kind::kConst && node_->value == 0.0;
}

Expr operator+(const Expr& a, const Expr& b) { return Expr(detail::fadd(a.node(), b.node())); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(detail::fsub(a.node(), b.node())); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(detail::fmul(a.node(), b.node())); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(detail::fdiv(a.node(), b.node())); }
Expr operator-(const Expr& a) { return Expr(detail::fneg(a.node())); }
Expr pow(const Expr& a, int n) { return Expr(detail::fpow(a.node(), n)); }
Expr sqrt(const Expr& a) { return Expr(detail::make_func(detail::Fn::kSqrt, a.node())); }
Expr sin(const Expr& a) { return Expr(detail::make_func(detail::Fn::kSin, a.node())); }
Expr cos(const Expr& a) { return Expr(detail::make_func(detail::Fn::kCos, a.node())); }
Expr exp(const Expr& a) { return Expr(detail::make_func(detail::Fn::kExp, a.node())); }
Expr log(const Expr& a) { return Expr(detail::make_func(detail::Fn::kLog, a.node())); }

CompiledExpr::CompiledExpr(const Expr& e) {
  // Postfix emission mirroring eval_node's operand order.
  struct Emit {
    std::vector<Instr>* tape;
    int depth = 0, max_depth = 0;
    void push() { max_depth = std::max(max_depth, ++depth); }
    void pop(int n) { depth -= n; }
    void walk(const ExprNode* n) {
      switch (n->kind) {
        case Kind::kConst:
          tape->push_back({Op::kConst, 0, n->value});
          push();
          return;
        case Kind::kVar:
          tape->push_back({Op::kVar, n->var, 0.0});
          push();
          return;
        case Kind::kPow:
          walk(n->a.get());
          tape->push_back({Op::kPow, n->exponent, 0.0});
          return;
        case Kind::kNeg:
          walk(n->a.get());
          tape->push_back({Op::kNeg, 0, 0.0});
          return;
        case Kind::kFunc: {
          walk(n->a.get());
          Op op;
          switch (n->fn) {
            case detail::Fn::kSqrt: op = Op::kSqrt; break;
            case detail::Fn::kSin: op = Op::kSin; break;
            case detail::Fn::kCos: op = Op::kCos; break;
            case detail::Fn::kExp: op = Op::kExp; break;
            default: op = Op::kLog; break;
          }
          tape->push_back({op, 0, 0.0});
          return;
        }
        default: {
          walk(n->a.get());
          walk(n->b.get());
          Op op;
          switch (n->kind) {
            case Kind::kAdd: op = Op::kAdd; break;
            case Kind::kSub: op = Op::kSub; break;
            case Kind::kMul: op = Op::kMul; break;
            default: op = Op::kDiv; break;
          }
          tape->push_back({op, 0, 0.0});
          pop(1);
          return;
        }
      }
    }
  };
  Emit em{&tape_};
  em.walk(e.node().get());
  stack_need_ = em.max_depth;
}

double CompiledExpr::eval(const Vec3& q) const {
  double local[64];
  std::vector<double> heap;
  double* st = local;
  if (stack_need_ > 64) {
    heap.resize(static_cast<std::size_t>(stack_need_));
    st = heap.data();
  }
  int top = -1;
  for (const Instr& in : tape_) {
    switch (in.op) {
      case Op::kConst: st[++top] = in.darg; break;
      case Op::kVar: st[++top] = q[in.iarg]; break;
      case Op::kAdd: st[top - 1] = st[top - 1] + st[top]; --top; break;
      case Op::kSub: st[top - 1] = st[top - 1] - st[top]; --top; break;
      case Op::kMul: st[top - 1] = st[top - 1] * st[top]; --top; break;
      case Op::kDiv: st[top - 1] = st[top - 1] / st[top]; --top; break;
      case Op::kPow: st[top] = powi(st[top], in.iarg); break;
      case Op::kNeg: st[top] = -st[top]; break;
      case Op::kSqrt: st[top] = std::sqrt(st[top]); break;
      case Op::kSin: st[top] = std::sin(st[top]); break;
      case Op::kCos: st[top] = std::cos(st[top]); break;
      case Op::kExp: st[top] = std::exp(st[top]); break;
      case Op::kLog: st[top] = std::log(st[top]); break;
    }
  }
  return st[0];
}

Mat3 rotation_between(const Vec3& from, const Vec3& to) {
  Vec3 axis = cross(from, to);
  double s = norm(axis);
  double c = dot(from, to);
  if (s < 1e-14) {
    if (c > 0.0) return Mat3::identity();
    // Antiparallel: half turn about a fixed axis orthogonal to `from`
    // (deterministic pivot: the coordinate axis least aligned with it).
    int k = 0;
    double best = std::abs(from[0]);
    for (int i = 1; i < 3; ++i)
      if (std::abs(from[i]) < best) best = std::abs(from[i]), k = i;
    Vec3 e{};
    e[k] = 1.0;
    Vec3 u = e - from * dot(e, from);
    u = u / norm(u);
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r.m[i][j] = 2.0 * u[i] * u[j] - (i == j ? 1.0 : 0.0);
    return r;
  }
  Vec3 u = axis / s;
  // Rodrigues with cos = c, sin = s.
  Mat3 r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.m[i][j] = c * (i == j ? 1.0 : 0.0) + (1.0 - c) * u[i] * u[j];
  r.m[0][1] -= s * u.z; r.m[0][2] += s * u.y;
  r.m[1][0] += s * u.z; r.m[1][2] -= s * u.x;
  r.m[2][0] -= s * u.y; r.m[2][1] += s * u.x;
  return r;
}

}  // namespace magwell
