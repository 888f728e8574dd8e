#pragma once

// Random-matrix Monte Carlo harness: seeded GUE/Wishart ensembles, pooled
// empirical spectra of polynomial evaluations, and the Kolmogorov-Smirnov
// distance against a reference CDF.

#include "freespec/linalg.hpp"
#include "freespec/ncpoly.hpp"
#include "freespec/rng.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace freespec {

struct Ensemble {
  enum class Kind { Gue, Wishart };
  Kind kind = Kind::Gue;
  double ratio = 1.0;  // Wishart aspect ratio; limit law is mp(ratio, 1)
};

struct EnsembleSpec {
  std::vector<Ensemble> variables;
  Eigen::Index n = 2000;
  int reps = 5;
  std::uint64_t seed = 42;
};

/// "gue" or "wishart(ratio)".
inline Ensemble parse_ensemble(const std::string& text) {
  if (text == "gue") return {Ensemble::Kind::Gue, 1.0};
  if (text.rfind("wishart(", 0) == 0 && text.back() == ')') {
    double ratio = 0.0;
    try {
      ratio = std::stod(text.substr(8, text.size() - 9));
    } catch (const std::exception&) {
      throw std::invalid_argument("ensemble spec: bad ratio in '" + text + "'");
    }
    if (!(ratio > 0.0)) throw std::invalid_argument("ensemble spec: ratio must be > 0");
    return {Ensemble::Kind::Wishart, ratio};
  }
  throw std::invalid_argument("unknown ensemble '" + text + "' (want gue or wishart(r))");
}

/// One realization per variable; deterministic in (seed, variable, rep), and
/// the per-variable streams are independent so reps can run in parallel.
inline std::vector<CMatrix> sample_ensemble(const EnsembleSpec& spec, int rep) {
  if (spec.n < 2) throw std::invalid_argument("sample_ensemble: n must be >= 2");
  if (rep < 0 || rep >= spec.reps)
    throw std::invalid_argument("sample_ensemble: rep out of range");
  std::vector<CMatrix> out;
  out.reserve(spec.variables.size());
  for (std::size_t v = 0; v < spec.variables.size(); ++v) {
    GaussianStream rng(derive_seed(spec.seed, v + 1, static_cast<std::uint64_t>(rep)));
    const Ensemble& e = spec.variables[v];
    if (e.kind == Ensemble::Kind::Gue) {
      out.push_back(rng.gue(spec.n));
    } else {
      Eigen::Index p = std::max<Eigen::Index>(
          1, static_cast<Eigen::Index>(std::llround(e.ratio * static_cast<double>(spec.n))));
      CMatrix a(spec.n, p);
      double root_half = std::sqrt(0.5);
      for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < spec.n; ++i)
          a(i, j) = root_half * rng.complex_normal();  // unit-variance complex entries
      CMatrix w = matmul(a, a.adjoint()) / static_cast<double>(spec.n);
      out.push_back(0.5 * (w + w.adjoint()));
    }
  }
  return out;
}

/// Pooled, sorted eigenvalues of p evaluated at `reps` independent draws.
inline std::vector<double> empirical_spectrum(const NCPolynomial& p,
                                              const EnsembleSpec& spec) {
  if (!is_selfadjoint(p))
    throw std::invalid_argument("empirical_spectrum: polynomial must be self-adjoint");
  if (static_cast<int>(spec.variables.size()) != p.n_vars())
    throw std::invalid_argument("empirical_spectrum: one ensemble per variable");
  double bytes = static_cast<double>(spec.n) * static_cast<double>(spec.n) * 16.0 *
                 (static_cast<double>(p.n_vars()) + 3.0);
  if (bytes > 6e9) throw std::invalid_argument("empirical_spectrum: memory budget exceeded");
  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(spec.n) * static_cast<std::size_t>(spec.reps));
  for (int rep = 0; rep < spec.reps; ++rep) {
    std::vector<CMatrix> mats = sample_ensemble(spec, rep);
    CMatrix P = evaluate(p, mats);
    mats.clear();
    CMatrix herm = 0.5 * (P + P.adjoint());
    RVector w = eigvals_hermitian(herm);
    pooled.insert(pooled.end(), w.data(), w.data() + w.size());
  }
  std::sort(pooled.begin(), pooled.end());
  return pooled;
}

/// sup-distance between the empirical CDF of the sorted samples and `cdf`.
template <class Cdf>
double ks_distance(const std::vector<double>& sorted_samples, Cdf&& cdf) {
  if (sorted_samples.empty()) throw std::invalid_argument("ks_distance: no samples");
  double n = static_cast<double>(sorted_samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted_samples.size(); ++i) {
    double f = cdf(sorted_samples[i]);
    double hi = (static_cast<double>(i) + 1.0) / n - f;
    double lo = f - static_cast<double>(i) / n;
    d = std::max({d, hi, lo});
  }
  return d;
}

}  // namespace freespec
