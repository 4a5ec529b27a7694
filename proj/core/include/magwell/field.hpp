#pragma once

#include <array>
#include <memory>

#include "magwell/expr.hpp"
#include "magwell/jet.hpp"
#include "magwell/vec3.hpp"

namespace magwell {

// Smooth vector potential A with symbolic components.
struct VectorPotential {
  std::array<Expr, 3> A;

  Vec3 eval(const Vec3& q) const;
  // Tangent map (T_q A)_{ij} = dA_i/dq_j, from exact symbolic derivatives.
  Mat3 jacobian(const Vec3& q) const;
  // Gauge normalization A(q0) = 0, obtained by subtracting the constant A(q0).
  VectorPotential normalized_at(const Vec3& q0) const;
};

// Magnetic field B with field strength b = |B|.
struct MagneticField {
  std::array<Expr, 3> B;

  Vec3 eval(const Vec3& q) const;
  Expr strength() const;  // b = sqrt(B1^2 + B2^2 + B3^2)
  Expr divergence() const;
  // Max |div B| over a deterministic sample of `count` points in q0 +/- r.
  double max_divergence_sample(const Vec3& q0, double r, int count) const;
};

MagneticField curl(const VectorPotential& A);

// Vector potentials consumed point-wise by the discretizer and integrator.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual Vec3 eval(const Vec3& q) const = 0;
  virtual Mat3 jacobian(const Vec3& q) const = 0;
};

class SymbolicPotential final : public Potential {
 public:
  explicit SymbolicPotential(const VectorPotential& A);
  Vec3 eval(const Vec3& q) const override;
  Mat3 jacobian(const Vec3& q) const override;

 private:
  std::array<CompiledExpr, 3> a_;
  std::array<std::array<CompiledExpr, 3>, 3> da_;
};

// Gauge A(q) = Int_0^1 t B(c + t(q-c)) x (q-c) dt for a solenoidal B,
// evaluated by adaptive Gauss-Legendre quadrature (absolute tolerance `tol`).
// Satisfies A(c) = 0 by construction and curl A = B.
class PoincarePotential final : public Potential {
 public:
  explicit PoincarePotential(const MagneticField& B, Vec3 center = {}, double tol = 1e-10);
  Vec3 eval(const Vec3& q) const override;
  Mat3 jacobian(const Vec3& q) const override;

 private:
  Vec3 center_;
  double tol_;
  std::array<CompiledExpr, 3> b_;
  std::array<std::array<CompiledExpr, 3>, 3> db_;  // db_[i][j] = dB_i/dq_j
};

struct MinimizeOptions {
  int max_iterations = 100;
  double grad_tolerance = 1e-12;
  bool grid_fallback = false;   // coarse scan around the seed before Newton
  double grid_radius = 1.0;
  double grid_step = 0.05;
};

struct FieldMinimum {
  Vec3 q0;
  double b0 = 0.0;
  Mat3 hessian;  // of b at q0, symbolic second derivatives
};

// Newton iteration with backtracking on |grad b|; validates that the minimum
// is positive and nondegenerate (Hessian eigenvalues > 1e-10 b0).
FieldMinimum minimize_b(const MagneticField& B, const Vec3& seed,
                        const MinimizeOptions& opts = {});

struct InvariantConstants {
  double sigma = 0.0;  // Hess b (B,B) / (2 b0^2)
  double theta = 0.0;  // sqrt(det Hess b / Hess b (B,B))
};

InvariantConstants invariant_constants(const MagneticField& B, const Vec3& q0);

// Point-wise symplectic frame on the characteristic manifold.
// (b,c,d) is a direct orthonormal basis with b = B/|B|; f1..f3 span the
// tangent of Sigma, f4..f6 its symplectic complement.
struct Frame {
  Vec3 q;
  Vec3 b, c, d;
  std::array<PhaseVec, 6> f;  // f[0] = f1, ..., f[5] = f6
  Mat3 ta;                    // T_q A
  double bnorm = 0.0;
};

Frame frame_at(const VectorPotential& A, const Vec3& q);

// Hessian of H at a critical point of Sigma applied to frame vectors:
// T^2H(u,v) = 2 <V1 - TA U1, V2 - TA U2>.
double frame_t2h(const Frame& fr, const PhaseVec& u, const PhaseVec& v);

// Model constants feeding the eigenvalue expansion.
struct ModelConstants {
  Vec3 q0;
  double b0 = 0.0;
  double sigma = 0.0;
  double theta = 0.0;
  double zeta = 0.0;
  double nu2_0 = 0.0;  // nu^2(0,0); sigma = nu2_0^2 up to cross-check tolerance
};

}  // namespace magwell
