#pragma once

// End-to-end pipeline: linearize the polynomial, convolve the coefficient-
// weighted variables, evaluate the matrix Cauchy transform at the shifted
// spike Lambda_eps(z), and read the scalar density off the (1,1) corner by
// Stieltjes inversion.

#include "freespec/linearization.hpp"
#include "freespec/ncpoly.hpp"
#include "freespec/spectra.hpp"
#include "freespec/subordination.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace freespec {

struct ProblemSpec {
  NCPolynomial p;
  std::vector<SpectralMeasure> measures;  // one per variable
  std::vector<double> grid;               // strictly increasing
  double epsilon = 1e-6;
  SolverConfig solver;
  bool richardson = false;  // evaluate at eps and 2*eps, extrapolate linearly
  int threads = 0;          // 0: hardware concurrency (capped)
};

struct DensityPoint {
  double t = 0.0;
  double rho = 0.0;      // clamped to >= 0
  double raw_rho = 0.0;  // before clamping
  int iterations = 0;
  double residual = 0.0;  // max of the subordination identity residuals
  bool failed = false;
};

struct DensityCurve {
  std::vector<DensityPoint> points;
  double epsilon_used = 0.0;
  double mass = 0.0;  // trapezoid integral over the non-failed points
  int failures = 0;
};

/// diag(z, i eps, ..., i eps); a real z is lifted to z + i eps so the matrix
/// stays strictly inside the upper half-plane (margin min(Im z, eps), always
/// positive).
inline CMatrix lambda_eps(Complex z, double eps, Eigen::Index N) {
  if (!(eps > 0.0) && !(z.imag() > 0.0))
    throw std::invalid_argument("lambda_eps: need Im z > 0 or eps > 0");
  CMatrix m = Complex(0.0, eps) * CMatrix::Identity(N, N);
  m(0, 0) = z.imag() > 0.0 ? z : z + Complex(0.0, eps);
  return m;
}

struct PolynomialPipeline {
  Linearization lin;
  CMatrix b0;
  OpVar var;  // convolution of the nonzero coefficient leaves
  Eigen::Index N;
};

inline PolynomialPipeline make_pipeline(const NCPolynomial& p,
                                        const std::vector<SpectralMeasure>& measures,
                                        const SolverConfig& solver = {}) {
  if (static_cast<int>(measures.size()) != p.n_vars())
    throw std::invalid_argument("pipeline: one measure per variable");
  Linearization lin = selfadjoint_linearize(p);
  std::vector<OpVar> leaves;
  for (int j = 1; j <= p.n_vars(); ++j) {
    const CMatrix& bj = lin.b(j);
    if (max_abs(bj) == 0.0) continue;  // absent variable contributes delta_0
    leaves.push_back(OpVar::leaf(bj, measures[static_cast<std::size_t>(j - 1)]));
  }
  if (leaves.empty()) throw std::invalid_argument("pipeline: polynomial has no variables");
  OpVar var = convolve(std::move(leaves), solver);
  CMatrix b0 = lin.b(0);
  Eigen::Index N = lin.N;
  return PolynomialPipeline{std::move(lin), std::move(b0), std::move(var), N};
}

struct PointEval {
  Complex g;
  int iterations = 0;
  double residual = 0.0;
};

inline PointEval pipeline_cauchy(const PolynomialPipeline& pipe, Complex z, double eps,
                                 EvalContext& ctx) {
  CMatrix beta = lambda_eps(z, eps, pipe.N) - pipe.b0;  // b0 Hermitian: margin unchanged
  double margin = z.imag() > 0.0 ? std::min(z.imag(), eps) : eps;
  HalfPlanePoint pt{std::move(beta), margin};
  PointEval out;
  if (pipe.var.is_leaf()) {
    out.g = ctx.cauchy(pipe.var, pt)(0, 0);
  } else {
    ConvResult res = ctx.conv_result(pipe.var, pt);
    out.g = res.G_sum(0, 0);
    out.iterations = res.iterations;
    out.residual = std::max(res.r2, res.r3);
  }
  if (!(out.g.imag() < 0.0))
    throw SubordinationError("pipeline: Im G not negative at z = (" +
                             std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")");
  return out;
}

/// G_P(z) regularized at scale eps (Steps 1-4 in one call). For repeated
/// evaluations prefer make_pipeline + pipeline_cauchy with a shared context.
inline Complex cauchy_of_polynomial(const ProblemSpec& spec, Complex z, double epsilon) {
  PolynomialPipeline pipe = make_pipeline(spec.p, spec.measures, spec.solver);
  EvalContext ctx;
  return pipeline_cauchy(pipe, z, epsilon, ctx).g;
}

/// Default evaluation window: the crude norm bound sum(|coeff| * prod of
/// per-variable support bounds), padded 10%, uniformly sampled.
inline std::vector<double> auto_grid(const NCPolynomial& p,
                                     const std::vector<SpectralMeasure>& measures,
                                     int count = 1000) {
  if (static_cast<int>(measures.size()) != p.n_vars())
    throw std::invalid_argument("auto_grid: one measure per variable");
  double bound = 0.0;
  for (const Monomial& m : p.terms()) {
    double term = std::abs(m.coeff);
    for (int j : m.word) term *= measures[static_cast<std::size_t>(j - 1)].norm_bound();
    bound += term;
  }
  if (!(bound > 0.0)) bound = 1.0;
  double r = 1.1 * bound;
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    grid[static_cast<std::size_t>(i)] =
        -r + 2.0 * r * static_cast<double>(i) / static_cast<double>(count - 1);
  return grid;
}

/// rho(t) = -(1/pi) Im G_P(t + i eps) across the grid. Sweeps ascending with
/// warm starts; the grid may be split into contiguous chunks that run in
/// parallel (deterministic given the chunking). Isolated solver failures mark
/// their point and leave a gap instead of aborting the curve.
inline DensityCurve density_grid(const ProblemSpec& spec) {
  if (spec.grid.empty()) throw std::invalid_argument("density_grid: empty grid");
  for (std::size_t i = 1; i < spec.grid.size(); ++i)
    if (!(spec.grid[i] > spec.grid[i - 1]))
      throw std::invalid_argument("density_grid: grid must be strictly increasing");
  if (!(spec.epsilon > 0.0)) throw std::invalid_argument("density_grid: epsilon must be > 0");
  PolynomialPipeline pipe = make_pipeline(spec.p, spec.measures, spec.solver);

  DensityCurve curve;
  curve.epsilon_used = spec.epsilon;
  curve.points.assign(spec.grid.size(), DensityPoint{});

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  std::size_t want = spec.threads > 0 ? static_cast<std::size_t>(spec.threads)
                                      : std::min<std::size_t>(hw, 8);
  std::size_t n_chunks = std::min(want, spec.grid.size());

  auto worker = [&](std::size_t lo, std::size_t hi) {
    EvalContext ctx;
    for (std::size_t i = lo; i < hi; ++i) {
      DensityPoint& pt = curve.points[i];
      pt.t = spec.grid[i];
      try {
        PointEval e = pipeline_cauchy(pipe, Complex(pt.t, 0.0), spec.epsilon, ctx);
        Complex g = e.g;
        int iters = e.iterations;
        double resid = e.residual;
        if (spec.richardson) {
          PointEval e2 = pipeline_cauchy(pipe, Complex(pt.t, 0.0), 2.0 * spec.epsilon, ctx);
          g = 2.0 * e.g - e2.g;
          iters += e2.iterations;
          resid = std::max(resid, e2.residual);
        }
        pt.raw_rho = -g.imag() / M_PI;
        pt.rho = std::max(0.0, pt.raw_rho);
        pt.iterations = iters;
        pt.residual = resid;
      } catch (const std::exception&) {
        pt.failed = true;
        pt.rho = pt.raw_rho = std::numeric_limits<double>::quiet_NaN();
      }
    }
  };

  if (n_chunks <= 1) {
    worker(0, spec.grid.size());
  } else {
    std::vector<std::thread> pool;
    std::size_t per = (spec.grid.size() + n_chunks - 1) / n_chunks;
    for (std::size_t c = 0; c < n_chunks; ++c) {
      std::size_t lo = c * per, hi = std::min(spec.grid.size(), lo + per);
      if (lo >= hi) break;
      pool.emplace_back(worker, lo, hi);
    }
    for (std::thread& t : pool) t.join();
  }

  double mass = 0.0;
  const DensityPoint* prev = nullptr;
  for (const DensityPoint& pt : curve.points) {
    if (pt.failed) {
      ++curve.failures;
      continue;
    }
    if (prev) mass += 0.5 * (pt.rho + prev->rho) * (pt.t - prev->t);
    prev = &pt;
  }
  curve.mass = mass;
  return curve;
}

/// Trapezoid moments m_1..m_k of the (clamped) curve.
inline std::vector<double> moments_from_density(const DensityCurve& curve, int k_max) {
  if (k_max < 1) throw std::invalid_argument("moments_from_density: k_max must be >= 1");
  std::vector<double> m(static_cast<std::size_t>(k_max), 0.0);
  const DensityPoint* prev = nullptr;
  for (const DensityPoint& pt : curve.points) {
    if (pt.failed) continue;
    if (prev) {
      double dt = pt.t - prev->t;
      for (int k = 1; k <= k_max; ++k)
        m[static_cast<std::size_t>(k - 1)] += 0.5 * dt *
            (std::pow(pt.t, k) * pt.rho + std::pow(prev->t, k) * prev->rho);
    }
    prev = &pt;
  }
  return m;
}

/// Piecewise-linear CDF from the cumulative trapezoid, clamped monotone into
/// [0, 1]. Evaluates to 0 left of the grid and to the final value right of it.
struct DensityCdf {
  std::vector<double> t, F;

  double operator()(double x) const {
    if (t.empty()) return 0.0;
    if (x <= t.front()) return F.front();
    if (x >= t.back()) return F.back();
    auto it = std::upper_bound(t.begin(), t.end(), x);
    std::size_t i = static_cast<std::size_t>(it - t.begin());
    double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
    return (1.0 - w) * F[i - 1] + w * F[i];
  }
};

inline DensityCdf cdf_from_density(const DensityCurve& curve) {
  DensityCdf cdf;
  double acc = 0.0;
  const DensityPoint* prev = nullptr;
  for (const DensityPoint& pt : curve.points) {
    if (pt.failed) continue;
    if (prev) acc += 0.5 * (pt.rho + prev->rho) * (pt.t - prev->t);
    cdf.t.push_back(pt.t);
    cdf.F.push_back(std::min(1.0, std::max(0.0, acc)));
    prev = &pt;
  }
  if (cdf.t.empty()) throw std::invalid_argument("cdf_from_density: no valid points");
  return cdf;
}

}  // namespace freespec
