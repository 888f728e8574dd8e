#pragma once

// Self-adjoint linearizations: a polynomial p in x1..xn becomes an affine
// pencil L_p = b_0 (x) 1 + sum_j b_j (x) X_j with a zero top-left scalar
// block, an invertible Q block, and Schur complement -u Q^{-1} v = p. The
// companion construction for monomials, row/column sharing for sums, and the
// q + q* doubling that makes every coefficient matrix Hermitian.

#include "freespec/linalg.hpp"
#include "freespec/ncpoly.hpp"
#include "freespec/rng.hpp"

#include <string>
#include <vector>

namespace freespec {

struct BlockLayout {
  Eigen::Index q_dim = 0;                 // u is 1 x q_dim, v is q_dim x 1
  std::vector<Eigen::Index> part_dims;    // summand dimensions, for audit
};

struct Linearization {
  Eigen::Index N = 0;
  int n_vars = 0;
  std::vector<CMatrix> coeffs;  // b_0, b_1, ..., b_n, each N x N
  BlockLayout layout;

  const CMatrix& b(int j) const { return coeffs.at(static_cast<std::size_t>(j)); }

  bool selfadjoint(double tol = 0.0) const {
    for (const CMatrix& c : coeffs)
      if (max_abs(c - c.adjoint()) > tol) return false;
    return true;
  }

  /// L_p evaluated at matrices: kron(b_0, I) + sum_j kron(b_j, X_j).
  CMatrix evaluate(const std::vector<CMatrix>& mats) const {
    if (static_cast<int>(mats.size()) != n_vars)
      throw std::invalid_argument("Linearization::evaluate: one matrix per variable");
    Eigen::Index d = mats.empty() ? 1 : mats[0].rows();
    CMatrix acc = kron(coeffs[0], CMatrix::Identity(d, d));
    for (int j = 1; j <= n_vars; ++j) acc += kron(coeffs[static_cast<std::size_t>(j)], mats[j - 1]);
    return acc;
  }
};

/// Companion-shaped linearization of coeff * X_{w1} ... X_{wk}; the scalar
/// coefficient is absorbed into the top-row entry so Q keeps entries in
/// {X_j, -1}. Not self-adjoint in general.
inline Linearization linearize_monomial(const std::vector<int>& word, Complex coeff,
                                        int n_vars) {
  for (int j : word)
    if (j < 1 || j > n_vars)
      throw std::invalid_argument("linearize_monomial: variable index out of range");
  Eigen::Index k = static_cast<Eigen::Index>(word.size());
  Eigen::Index N = std::max<Eigen::Index>(k, 2);
  Linearization L;
  L.N = N;
  L.n_vars = n_vars;
  L.coeffs.assign(static_cast<std::size_t>(n_vars) + 1, CMatrix::Zero(N, N));
  L.layout.q_dim = N - 1;
  L.layout.part_dims = {N};
  if (k == 0) {
    // [[0, coeff],[1, -1]]: Schur complement -coeff*(-1)^{-1}*1 = coeff
    L.coeffs[0](0, 1) = coeff;
    L.coeffs[0](1, 0) = 1.0;
    L.coeffs[0](1, 1) = -1.0;
    return L;
  }
  if (k == 1) {
    L.coeffs[static_cast<std::size_t>(word[0])](0, 1) = coeff;
    L.coeffs[0](1, 0) = 1.0;
    L.coeffs[0](1, 1) = -1.0;
    return L;
  }
  // anti-diagonal pattern: X_{w_j} at (j, k+1-j), -1 at (j, k+2-j), 1-based
  for (Eigen::Index j = 1; j <= k; ++j) {
    Complex c = (j == 1) ? coeff : Complex(1.0, 0.0);
    L.coeffs[static_cast<std::size_t>(word[static_cast<std::size_t>(j - 1)])](j - 1, k - j) = c;
    if (j >= 2) L.coeffs[0](j - 1, k + 1 - j) = -1.0;
  }
  return L;
}

/// Shared first row/column stacking; the result has dimension
/// (N_1 + ... + N_k) - k + 1.
inline Linearization linearize_sum(const std::vector<Linearization>& parts) {
  if (parts.empty()) throw std::invalid_argument("linearize_sum: need at least one part");
  if (parts.size() == 1) return parts.front();
  int n_vars = parts.front().n_vars;
  Eigen::Index N = 1;
  for (const Linearization& p : parts) {
    if (p.n_vars != n_vars) throw std::invalid_argument("linearize_sum: mixed variable counts");
    N += p.N - 1;
  }
  Linearization L;
  L.N = N;
  L.n_vars = n_vars;
  L.coeffs.assign(static_cast<std::size_t>(n_vars) + 1, CMatrix::Zero(N, N));
  L.layout.q_dim = N - 1;
  Eigen::Index off = 1;
  for (const Linearization& p : parts) {
    Eigen::Index m = p.N - 1;
    for (std::size_t j = 0; j < L.coeffs.size(); ++j) {
      const CMatrix& B = p.coeffs[j];
      L.coeffs[j].block(0, off, 1, m) = B.block(0, 1, 1, m);        // u_i
      L.coeffs[j].block(off, 0, m, 1) = B.block(1, 0, m, 1);        // v_i
      L.coeffs[j].block(off, off, m, m) = B.block(1, 1, m, m);      // Q_i
    }
    L.layout.part_dims.push_back(p.N);
    off += m;
  }
  return L;
}

/// Self-adjoint linearization of a self-adjoint polynomial via p = q + q*,
/// q = p/2, and the mirrored block matrix [[0, u, v*],[u*, 0, Q*],[v, Q, 0]].
/// Degree <= 1 polynomials bypass the doubling and return N = 1 directly.
inline Linearization selfadjoint_linearize(const NCPolynomial& p) {
  if (!is_selfadjoint(p))
    throw std::invalid_argument("selfadjoint_linearize: polynomial is not self-adjoint");
  if (p.degree() < 1)
    throw std::invalid_argument("selfadjoint_linearize: polynomial must be nonconstant");
  int n_vars = p.n_vars();
  if (p.degree() <= 1) {
    Linearization L;
    L.N = 1;
    L.n_vars = n_vars;
    L.coeffs.assign(static_cast<std::size_t>(n_vars) + 1, CMatrix::Zero(1, 1));
    L.layout.q_dim = 0;
    L.layout.part_dims = {1};
    for (const Monomial& m : p.terms()) {
      // self-adjointness forces real coefficients in degree <= 1
      std::size_t j = m.word.empty() ? 0 : static_cast<std::size_t>(m.word[0]);
      L.coeffs[j](0, 0) = Complex(m.coeff.real(), 0.0);
    }
    return L;
  }
  std::vector<Linearization> parts;
  parts.reserve(p.terms().size());
  for (const Monomial& m : p.terms())
    parts.push_back(linearize_monomial(m.word, 0.5 * m.coeff, n_vars));
  Linearization q = linearize_sum(parts);
  Eigen::Index Nq = q.N, m = Nq - 1;
  Linearization L;
  L.N = 2 * Nq - 1;
  L.n_vars = n_vars;
  L.coeffs.assign(static_cast<std::size_t>(n_vars) + 1, CMatrix::Zero(L.N, L.N));
  L.layout.q_dim = L.N - 1;
  L.layout.part_dims = q.layout.part_dims;
  for (std::size_t j = 0; j < L.coeffs.size(); ++j) {
    const CMatrix& B = q.coeffs[j];
    CMatrix u = B.block(0, 1, 1, m);
    CMatrix v = B.block(1, 0, m, 1);
    CMatrix Q = B.block(1, 1, m, m);
    CMatrix& C = L.coeffs[j];
    C.block(0, 1, 1, m) = u;
    C.block(0, 1 + m, 1, m) = v.adjoint();
    C.block(1, 0, m, 1) = u.adjoint();
    C.block(1 + m, 0, m, 1) = v;
    C.block(1, 1 + m, m, m) = Q.adjoint();
    C.block(1 + m, 1, m, m) = Q;
  }
  return L;
}

struct VerifyReport {
  int trials = 0;
  int inversion_failures = 0;
  double max_corner_residual = 0.0;  // relative, against the direct resolvent
  double max_schur_residual = 0.0;   // relative, Schur complement vs z - P
};

/// Draws random Hermitian evaluations and random z in the upper half-plane,
/// then checks the resolvent corner identity and the Schur-complement identity
/// numerically.
inline VerifyReport verify_linearization(const Linearization& L, const NCPolynomial& p,
                                         int trials, Eigen::Index dim,
                                         std::uint64_t rng_seed = 7) {
  if (trials < 1) throw std::invalid_argument("verify_linearization: trials must be >= 1");
  if (L.n_vars != p.n_vars())
    throw std::invalid_argument("verify_linearization: variable count mismatch");
  VerifyReport rep;
  rep.trials = trials;
  for (int trial = 0; trial < trials; ++trial) {
    GaussianStream rng(derive_seed(rng_seed, 0x11, static_cast<std::uint64_t>(trial)));
    std::vector<CMatrix> mats;
    mats.reserve(static_cast<std::size_t>(p.n_vars()));
    for (int j = 0; j < p.n_vars(); ++j) mats.push_back(rng.gue(dim));
    Complex z(2.0 * rng.uniform() - 1.0, 0.5 + 1.5 * rng.uniform());
    try {
      CMatrix P = evaluate(p, mats);
      CMatrix zP = z * CMatrix::Identity(dim, dim) - P;
      CMatrix R = invert(zP);
      CMatrix lambda = CMatrix::Zero(L.N, L.N);
      lambda(0, 0) = z;
      CMatrix M = kron(lambda, CMatrix::Identity(dim, dim)) - L.evaluate(mats);
      CMatrix corner = invert(M).block(0, 0, dim, dim);
      double corner_res = op_norm(corner - R) / (1.0 + op_norm(R));
      Eigen::Index rest = M.rows() - dim;
      CMatrix a = M.block(0, 0, dim, dim);
      CMatrix bb = M.block(0, dim, dim, rest);
      CMatrix cc = M.block(dim, 0, rest, dim);
      CMatrix dd = M.block(dim, dim, rest, rest);
      CMatrix schur = a - bb * invert(dd) * cc;
      double schur_res = op_norm(schur - zP) / (1.0 + op_norm(zP));
      rep.max_corner_residual = std::max(rep.max_corner_residual, corner_res);
      rep.max_schur_residual = std::max(rep.max_schur_residual, schur_res);
    } catch (const SingularMatrixError&) {
      ++rep.inversion_failures;
    }
  }
  return rep;
}

}  // namespace freespec
