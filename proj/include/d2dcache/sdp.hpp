#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "d2dcache/errors.hpp"
#include "d2dcache/geometry.hpp"

namespace d2dcache {

/**
 * Lovász-theta style SDP over a conflict graph:
 *
 *   maximize  mu^T S mu
 *   s.t.      tr(S) = 1,  S(i, j) = 0 for every conflict edge (i, j),  S >= 0,
 *
 * with mu = sqrt(values). The dual is
 *
 *   minimize  t   s.t.  t I + sum_e y_e (e_i e_j^T + e_j e_i^T) - mu mu^T >= 0,
 *
 * so any dual-feasible t bounds the primal optimum from above.
 */
struct SdpSolution
{
  Matrix S;
  double primal_value = 0.0;  ///< mu^T S mu
  double dual_value = 0.0;    ///< dual objective, an upper bound on the optimum
  double dual_gap = 0.0;      ///< relative primal-dual gap at exit
  int iterations = 0;
};

struct SdpOptions
{
  double gap_tol = 1.49e-8;
  int max_iterations = 200;
  double feasibility_tol = 1e-9;
  /// Dense Schur complements beyond this many constraints are refused.
  int max_constraints = 6000;
};

/// Thrown when the iteration cap is reached with the gap above 100 * tol.
struct SdpNonconvergence : Error
{
  SdpNonconvergence(const std::string& what, SdpSolution best_iterate)
    : Error(what), best(std::move(best_iterate))
  {}
  SdpSolution best;
};

namespace detail {

struct Edge
{
  int i;
  int j;
};

/**
 * Infeasible-start primal-dual path following with the HKM search direction
 * and a Mehrotra predictor-corrector step, on dense matrices.
 */
class ThetaSdpSolver
{
public:
  ThetaSdpSolver(const Vector& mu, std::vector<Edge> edges, SdpOptions opt)
    : mu_(mu), edges_(std::move(edges)), opt_(opt), n_(static_cast<int>(mu.size())),
      m_(1 + static_cast<int>(edges_.size()))
  {
    C_ = mu_ * mu_.transpose();
  }

  SdpSolution solve()
  {
    // Start: X = I/n is primal feasible, Z = t I - C is dual feasible for t > lambda_max(C).
    Matrix X = Matrix::Identity(n_, n_) / n_;
    Vector y = Vector::Zero(m_);
    y[0] = 1.5 * C_.trace() + 1.0;
    Matrix Z = apply_adjoint(y) - C_;

    SdpSolution best;
    double best_gap = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it <= opt_.max_iterations; ++it) {
      const Vector rp = b() - apply(X);
      const Matrix Rd = C_ - apply_adjoint(y) + Z;
      const double pobj = (C_.cwiseProduct(X)).sum();
      const double dobj = y[0];
      const double xz = (X.cwiseProduct(Z)).sum();
      const double gap = std::max(std::abs(dobj - pobj), xz) / std::max(1.0, std::abs(pobj));
      const double pinf = rp.norm();
      const double dinf = Rd.norm() / (1.0 + C_.norm());

      if (gap < best_gap && pinf <= 1e-6 && dinf <= 1e-6) {
        best_gap = gap;
        best = {X, pobj, dobj, gap, it};
      }
      if (gap <= opt_.gap_tol && pinf <= opt_.feasibility_tol && dinf <= opt_.feasibility_tol) {
        return {X, pobj, dobj, gap, it};
      }
      if (it == opt_.max_iterations) break;

      Eigen::LLT<Matrix> zchol(Z);
      Eigen::LLT<Matrix> xchol(X);
      if (zchol.info() != Eigen::Success || xchol.info() != Eigen::Success) break;
      const Matrix W = zchol.solve(Matrix::Identity(n_, n_));
      const Matrix schur = schur_complement(X, W);
      Eigen::LDLT<Matrix> mfact(schur);
      if (mfact.info() != Eigen::Success) break;

      const double mu_c = xz / n_;
      const Matrix XRdW = X * Rd * W;

      // Predictor (affine scaling).
      Matrix dX, dZ;
      Vector dy;
      direction(-X, X, W, Rd, XRdW, rp, mfact, dX, dy, dZ);
      const double ap = std::min(1.0, max_step(xchol, dX));
      const double ad = std::min(1.0, max_step(zchol, dZ));
      const double xz_aff = ((X + ap * dX).cwiseProduct(Z + ad * dZ)).sum();
      const double sigma = std::clamp(std::pow(xz_aff / xz, 3.0), 0.0, 1.0);

      // Corrector.
      const Matrix R = sigma * mu_c * W - X - dX * dZ * W;
      direction(R, X, W, Rd, XRdW, rp, mfact, dX, dy, dZ);
      const double sp = max_step(xchol, dX);
      const double sd = max_step(zchol, dZ);
      const double factor = 0.9 + 0.09 * std::min({1.0, sp, sd});
      const double ap2 = std::min(1.0, factor * sp);
      const double ad2 = std::min(1.0, factor * sd);
      if (!(ap2 > 0.0) || !(ad2 > 0.0)) break;

      X += ap2 * dX;
      y += ad2 * dy;
      Z += ad2 * dZ;
      X = 0.5 * (X + X.transpose()).eval();
      Z = 0.5 * (Z + Z.transpose()).eval();
    }
    if (best.S.size() == 0) best = {X, (C_.cwiseProduct(X)).sum(), y[0], best_gap, it};
    best.iterations = it;
    if (best.dual_gap <= 100.0 * opt_.gap_tol) return best;
    throw SdpNonconvergence("solve_sdp: no convergence, relative gap " +
                                std::to_string(best.dual_gap),
                            best);
  }

private:
  [[nodiscard]] Vector b() const
  {
    Vector out = Vector::Zero(m_);
    out[0] = 1.0;
    return out;
  }

  /// A(R): (tr R, R_ij + R_ji for each edge); valid for nonsymmetric R.
  [[nodiscard]] Vector apply(const Matrix& R) const
  {
    Vector out(m_);
    out[0] = R.trace();
    for (int k = 0; k < m_ - 1; ++k) {
      const auto [i, j] = edges_[k];
      out[k + 1] = R(i, j) + R(j, i);
    }
    return out;
  }

  [[nodiscard]] Matrix apply_adjoint(const Vector& y) const
  {
    Matrix out = y[0] * Matrix::Identity(n_, n_);
    for (int k = 0; k < m_ - 1; ++k) {
      const auto [i, j] = edges_[k];
      out(i, j) += y[k + 1];
      out(j, i) += y[k + 1];
    }
    return out;
  }

  /// M(k, l) = tr(A_k X A_l W).
  [[nodiscard]] Matrix schur_complement(const Matrix& X, const Matrix& W) const
  {
    Matrix M(m_, m_);
    const Matrix G = X * W;
    M(0, 0) = G.trace();
    for (int k = 0; k < m_ - 1; ++k) {
      const auto [i, j] = edges_[k];
      M(0, k + 1) = M(k + 1, 0) = G(i, j) + G(j, i);
    }
    for (int k = 0; k < m_ - 1; ++k) {
      const auto [i, j] = edges_[k];
      for (int l = k; l < m_ - 1; ++l) {
        const auto [p, q] = edges_[l];
        const double v = X(j, p) * W(q, i) + X(j, q) * W(p, i) + X(i, p) * W(q, j) +
                         X(i, q) * W(p, j);
        M(k + 1, l + 1) = M(l + 1, k + 1) = v;
      }
    }
    return M;
  }

  /// Solves for (dX, dy, dZ) given the complementarity right-hand side R.
  void direction(const Matrix& R, const Matrix& X, const Matrix& W, const Matrix& Rd,
                 const Matrix& XRdW, const Vector& rp, const Eigen::LDLT<Matrix>& mfact,
                 Matrix& dX, Vector& dy, Matrix& dZ) const
  {
    const Vector rhs = apply(R) + apply(XRdW) - rp;
    dy = mfact.solve(rhs);
    dZ = apply_adjoint(dy) - Rd;
    dX = R - X * dZ * W;
    dX = 0.5 * (dX + dX.transpose()).eval();
  }

  /// Largest alpha keeping P + alpha * D positive semidefinite.
  [[nodiscard]] static double max_step(const Eigen::LLT<Matrix>& pchol, const Matrix& D)
  {
    const Matrix Linv = pchol.matrixL().solve(Matrix::Identity(D.rows(), D.cols()));
    const Matrix B = Linv * D * Linv.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (B + B.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
    return -1.0 / lmin;
  }

  Vector mu_;
  std::vector<Edge> edges_;
  SdpOptions opt_;
  int n_;
  int m_;
  Matrix C_;
};

}  // namespace detail

/**
 * Solves the theta SDP for nonnegative `values` under `conflicts`.
 * Zero-valued vertices are dropped before the solve and come back as zero
 * rows and columns of S.
 */
inline SdpSolution solve_sdp(const Vector& values, const BinaryMatrix& conflicts,
                             SdpOptions opt = {})
{
  const int L = static_cast<int>(values.size());
  if (conflicts.rows() != L || conflicts.cols() != L) {
    throw Error("solve_sdp: conflict matrix dimension mismatch");
  }
  for (int i = 0; i < L; ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      throw Error("solve_sdp: values must be finite and >= 0");
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < L; ++i) {
    if (values[i] > 0.0) keep.push_back(i);
  }
  SdpSolution out;
  out.S = Matrix::Zero(L, L);
  if (keep.empty()) {
    if (L > 0) out.S = Matrix::Identity(L, L) / L;
    return out;
  }
  const int k = static_cast<int>(keep.size());
  const double scale = values.maxCoeff();
  Vector mu(k);
  for (int a = 0; a < k; ++a) mu[a] = std::sqrt(values[keep[a]] / scale);
  std::vector<detail::Edge> edges;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      if (conflicts(keep[a], keep[b]) || conflicts(keep[b], keep[a])) edges.push_back({a, b});
    }
  }

  if (static_cast<int>(edges.size()) + 1 > opt.max_constraints) {
    throw Error("solve_sdp: " + std::to_string(edges.size() + 1) +
                " constraints exceed the dense limit of " + std::to_string(opt.max_constraints));
  }

  auto expand = [&](SdpSolution reduced) {
    SdpSolution full = std::move(reduced);
    Matrix S = Matrix::Zero(L, L);
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) S(keep[a], keep[b]) = full.S(a, b);
    }
    full.S = std::move(S);
    full.primal_value *= scale;
    full.dual_value *= scale;
    return full;
  };

  if (k == 1) {
    out.S(keep[0], keep[0]) = 1.0;
    out.primal_value = out.dual_value = values[keep[0]];
    return out;
  }
  try {
    return expand(detail::ThetaSdpSolver(mu, std::move(edges), opt).solve());
  } catch (SdpNonconvergence& e) {
    throw SdpNonconvergence(e.what(), expand(std::move(e.best)));
  }
}

}  // namespace d2dcache
