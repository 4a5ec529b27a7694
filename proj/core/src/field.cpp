#include "magwell/field.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace magwell {

Vec3 VectorPotential::eval(const Vec3& q) const {
  return {A[0].eval(q), A[1].eval(q), A[2].eval(q)};
}

Mat3 VectorPotential::jacobian(const Vec3& q) const {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.m[i][j] = A[i].diff(j).eval(q);
  return m;
}

VectorPotential VectorPotential::normalized_at(const Vec3& q0) const {
  VectorPotential r;
  for (int i = 0; i < 3; ++i) r.A[i] = A[i] - Expr::constant(A[i].eval(q0));
  return r;
}

Vec3 MagneticField::eval(const Vec3& q) const {
  return {B[0].eval(q), B[1].eval(q), B[2].eval(q)};
}

Expr MagneticField::strength() const {
  return sqrt(B[0] * B[0] + B[1] * B[1] + B[2] * B[2]);
}

Expr MagneticField::divergence() const {
  return B[0].diff(0) + B[1].diff(1) + B[2].diff(2);
}

double MagneticField::max_divergence_sample(const Vec3& q0, double r, int count) const {
  Expr div = divergence();
  // Deterministic LCG sample of the box q0 +/- r.
  std::uint64_t state = 0x9e3779b97f4a7c15ull;
  auto next01 = [&state]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(state >> 11) * (1.0 / 9007199254740992.0);
  };
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    Vec3 p{q0.x + r * (2.0 * next01() - 1.0), q0.y + r * (2.0 * next01() - 1.0),
           q0.z + r * (2.0 * next01() - 1.0)};
    worst = std::max(worst, std::abs(div.eval(p)));
  }
  return worst;
}

MagneticField curl(const VectorPotential& A) {
  MagneticField B;
  B.B[0] = A.A[2].diff(1) - A.A[1].diff(2);
  B.B[1] = A.A[0].diff(2) - A.A[2].diff(0);
  B.B[2] = A.A[1].diff(0) - A.A[0].diff(1);
  return B;
}

SymbolicPotential::SymbolicPotential(const VectorPotential& A) {
  for (int i = 0; i < 3; ++i) {
    a_[i] = CompiledExpr(A.A[i]);
    for (int j = 0; j < 3; ++j) da_[i][j] = CompiledExpr(A.A[i].diff(j));
  }
}

Vec3 SymbolicPotential::eval(const Vec3& q) const {
  return {a_[0].eval(q), a_[1].eval(q), a_[2].eval(q)};
}

Mat3 SymbolicPotential::jacobian(const Vec3& q) const {
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.m[i][j] = da_[i][j].eval(q);
  return m;
}

// ---------------------------------------------------------------------------
// Adaptive Gauss-Legendre quadrature on [0,1] for a handful of simultaneous
// smooth integrands. Error estimated by an embedded lower-order rule.

namespace {

struct GaussRule {
  std::vector<double> nodes;    // on (-1,1)
  std::vector<double> weights;
};

GaussRule legendre_rule(int n) {
  // Roots of P_n by Newton from the Chebyshev initial guess.
  GaussRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pd = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      pd = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pd;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    r.nodes[i] = x;
    r.weights[i] = 2.0 / ((1.0 - x * x) * pd * pd);
  }
  return r;
}

const GaussRule& rule7() {
  static const GaussRule r = legendre_rule(7);
  return r;
}
const GaussRule& rule15() {
  static const GaussRule r = legendre_rule(15);
  return r;
}

constexpr int kMaxIntegrands = 12;

struct Panel {
  double a, b;
};

// Integrates f over [0,1] componentwise to absolute tolerance tol.
template <class F>
void adaptive_gl(const F& f, int m, double tol, double* out) {
  for (int i = 0; i < m; ++i) out[i] = 0.0;
  std::vector<Panel> stack{{0.0, 1.0}};
  int evals = 0;
  double vals15[kMaxIntegrands], vals7[kMaxIntegrands], tmp[kMaxIntegrands];
  while (!stack.empty()) {
    Panel p = stack.back();
    stack.pop_back();
    double h = 0.5 * (p.b - p.a), c = 0.5 * (p.a + p.b);
    for (int i = 0; i < m; ++i) vals15[i] = vals7[i] = 0.0;
    for (std::size_t k = 0; k < rule15().nodes.size(); ++k) {
      f(c + h * rule15().nodes[k], tmp);
      for (int i = 0; i < m; ++i) vals15[i] += rule15().weights[k] * tmp[i];
    }
    for (std::size_t k = 0; k < rule7().nodes.size(); ++k) {
      f(c + h * rule7().nodes[k], tmp);
      for (int i = 0; i < m; ++i) vals7[i] += rule7().weights[k] * tmp[i];
    }
    evals += 22;
    double err = 0.0;
    for (int i = 0; i < m; ++i) err = std::max(err, std::abs(vals15[i] - vals7[i]) * h);
    if (err <= tol * std::max(1e-3, p.b - p.a) || (p.b - p.a) < 1e-7) {
      for (int i = 0; i < m; ++i) out[i] += h * vals15[i];
    } else {
      stack.push_back({p.a, c});
      stack.push_back({c, p.b});
    }
    if (evals > 2000000) throw NumericalError("poincare_potential: quadrature non-convergence");
  }
}

}  // namespace

PoincarePotential::PoincarePotential(const MagneticField& B, Vec3 center, double tol)
    : center_(center), tol_(tol) {
  double div = B.max_divergence_sample(center, 1.0, 100);
  if (div > 1e-8)
    throw NumericalError("poincare_potential: field is not solenoidal (max |div B| = " +
                         std::to_string(div) + ")");
  for (int i = 0; i < 3; ++i) {
    b_[i] = CompiledExpr(B.B[i]);
    for (int j = 0; j < 3; ++j) db_[i][j] = CompiledExpr(B.B[i].diff(j));
  }
}

Vec3 PoincarePotential::eval(const Vec3& q) const {
  Vec3 d = q - center_;
  auto f = [&](double t, double* out) {
    Vec3 p = center_ + d * t;
    Vec3 b{b_[0].eval(p), b_[1].eval(p), b_[2].eval(p)};
    Vec3 v = cross(b, d) * t;
    out[0] = v.x;
    out[1] = v.y;
    out[2] = v.z;
  };
  double out[3];
  adaptive_gl(f, 3, tol_, out);
  return {out[0], out[1], out[2]};
}

Mat3 PoincarePotential::jacobian(const Vec3& q) const {
  Vec3 d = q - center_;
  auto f = [&](double t, double* out) {
    Vec3 p = center_ + d * t;
    Vec3 b{b_[0].eval(p), b_[1].eval(p), b_[2].eval(p)};
    for (int j = 0; j < 3; ++j) {
      Vec3 dbj{db_[0][j].eval(p), db_[1][j].eval(p), db_[2][j].eval(p)};
      Vec3 ej{};
      ej[j] = 1.0;
      Vec3 v = (cross(dbj, d) * t + cross(b, ej)) * t;
      out[3 * j + 0] = v.x;
      out[3 * j + 1] = v.y;
      out[3 * j + 2] = v.z;
    }
  };
  double out[9];
  adaptive_gl(f, 9, tol_, out);
  Mat3 m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.m[i][j] = out[3 * j + i];
  return m;
}

// ---------------------------------------------------------------------------

FieldMinimum minimize_b(const MagneticField& B, const Vec3& seed, const MinimizeOptions& opts) {
  Expr b = B.strength();
  std::array<Expr, 3> grad;
  std::array<std::array<Expr, 3>, 3> hess;
  for (int i = 0; i < 3; ++i) grad[i] = b.diff(i);
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) hess[i][j] = grad[i].diff(j);

  auto grad_at = [&](const Vec3& q) {
    return Vec3{grad[0].eval(q), grad[1].eval(q), grad[2].eval(q)};
  };
  auto hess_at = [&](const Vec3& q) {
    Mat3 h;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) h.m[i][j] = h.m[j][i] = hess[i][j].eval(q);
    return h;
  };

  Vec3 q = seed;
  if (opts.grid_fallback) {
    double best = b.eval(q);
    int n = static_cast<int>(opts.grid_radius / opts.grid_step);
    for (int i = -n; i <= n; ++i)
      for (int j = -n; j <= n; ++j)
        for (int k = -n; k <= n; ++k) {
          Vec3 p = seed + Vec3{i * opts.grid_step, j * opts.grid_step, k * opts.grid_step};
          double v = b.eval(p);
          if (v < best) {
            best = v;
            q = p;
          }
        }
  }

  bool converged = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    Vec3 g = grad_at(q);
    double gn = norm(g);
    if (gn < opts.grad_tolerance) {
      converged = true;
      break;
    }
    Mat3 h = hess_at(q);
    Eigen::Matrix3d H;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) H(i, j) = h.m[i][j];
    Eigen::Vector3d gv(g.x, g.y, g.z);
    Eigen::Vector3d pv = H.fullPivLu().solve(-gv);
    Vec3 p{pv(0), pv(1), pv(2)};
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) ||
        norm(p) == 0.0)
      p = -g;  // singular Hessian: fall back to steepest descent
    // Backtracking on |grad|.
    double t = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      Vec3 cand = q + p * t;
      double gc;
      try {
        gc = norm(grad_at(cand));
      } catch (const NumericalError&) {
        t *= 0.5;
        continue;
      }
      if (gc < gn) {
        q = cand;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted)
      throw NumericalError("minimize_b: line search stalled at |grad b| = " +
                           std::to_string(gn));
  }
  if (!converged && norm(grad_at(q)) >= opts.grad_tolerance)
    throw NumericalError("minimize_b: no convergence in " +
                         std::to_string(opts.max_iterations) + " iterations");

  FieldMinimum result;
  result.q0 = q;
  result.b0 = b.eval(q);
  result.hessian = hess_at(q);
  if (!(result.b0 > 0.0)) throw NumericalError("minimize_b: minimum of b is not positive");

  Eigen::Matrix3d H;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) H(i, j) = result.hessian.m[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(H);
  if (es.eigenvalues().minCoeff() <= 1e-10 * result.b0)
    throw NumericalError(
        "minimize_b: degenerate Hessian at the minimum (nondegeneracy assumption violated)");
  return result;
}

InvariantConstants invariant_constants(const MagneticField& B, const Vec3& q0) {
  Expr b = B.strength();
  Mat3 h;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) h.m[i][j] = h.m[j][i] = b.diff(i).diff(j).eval(q0);
  Vec3 Bv = B.eval(q0);
  double b0 = norm(Bv);
  double hbb = dot(Bv, h * Bv);
  if (!(hbb > 0.0))
    throw NumericalError("invariant_constants: Hess b (B,B) is not positive");
  InvariantConstants c;
  c.sigma = hbb / (2.0 * b0 * b0);
  c.theta = std::sqrt(h.det() / hbb);
  return c;
}

Frame frame_at(const VectorPotential& A, const Vec3& q) {
  MagneticField B = curl(A);
  Vec3 Bv = B.eval(q);
  double bn = norm(Bv);
  if (bn < 1e-14) throw NumericalError("frame_at: B vanishes at the query point");

  Frame fr;
  fr.q = q;
  fr.bnorm = bn;
  fr.b = Bv / bn;
  // Gram-Schmidt against the coordinate axis least aligned with b
  // (deterministic tie-break: lowest index).
  int k = 0;
  double best = std::abs(fr.b[0]);
  for (int i = 1; i < 3; ++i)
    if (std::abs(fr.b[i]) < best) {
      best = std::abs(fr.b[i]);
      k = i;
    }
  Vec3 e{};
  e[k] = 1.0;
  Vec3 c = e - fr.b * dot(e, fr.b);
  fr.c = c / norm(c);
  fr.d = cross(fr.b, fr.c);

  fr.ta = A.jacobian(q);
  Mat3 tat = fr.ta.transposed();
  double s = 1.0 / std::sqrt(bn);
  fr.f[0] = {fr.c, fr.ta * fr.c};
  fr.f[1] = {fr.d, fr.ta * fr.d};
  fr.f[2] = {fr.b, fr.ta * fr.b};
  fr.f[3] = {fr.c * s, (tat * fr.c) * s};
  fr.f[4] = {fr.d * s, (tat * fr.d) * s};
  PhaseVec g{Vec3{}, fr.b};
  double w12 = omega0(fr.f[0], fr.f[1]);
  // rho solves omega0(f_j, f6) = 0 for j = 1,2.
  double rho2 = -omega0(fr.f[0], g) / w12;
  double rho1 = omega0(fr.f[1], g) / w12;
  fr.f[5] = {g.u + fr.f[0].u * rho1 + fr.f[1].u * rho2,
             g.v + fr.f[0].v * rho1 + fr.f[1].v * rho2};
  return fr;
}

double frame_t2h(const Frame& fr, const PhaseVec& u, const PhaseVec& v) {
  Vec3 du = u.v - fr.ta * u.u;
  Vec3 dv = v.v - fr.ta * v.u;
  return 2.0 * dot(du, dv);
}

}  // namespace magwell
