#pragma once

// Independent moment oracle: mixed moments of polynomials in free variables by
// non-crossing partition enumeration. Freeness makes mixed free cumulants
// vanish, so only partitions whose blocks carry a single variable contribute.
// Everything here is combinatorial; it never touches the transform pipeline.

#include "freespec/ncpoly.hpp"
#include "freespec/spectra.hpp"

#include <map>
#include <vector>

namespace freespec {

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Free cumulants kappa_1..kappa_K per variable. Closed forms for the
/// semicircle (kappa_2 only) and free Poisson (kappa_n = ratio * scale^n);
/// other measures go through the moment-cumulant recursion on numeric moments.
class CumulantSpec {
 public:
  static CumulantSpec from_measures(const std::vector<SpectralMeasure>& measures,
                                    int max_order) {
    if (max_order < 1) throw std::invalid_argument("CumulantSpec: max_order must be >= 1");
    CumulantSpec spec;
    for (const SpectralMeasure& mu : measures) {
      std::vector<double> kappa(static_cast<std::size_t>(max_order), 0.0);
      if (const auto* sc = std::get_if<Semicircle>(&mu.value())) {
        kappa[0] = sc->mean;
        if (max_order >= 2) kappa[1] = sc->variance;
      } else if (const auto* mp = std::get_if<MarchenkoPastur>(&mu.value())) {
        double jump = mp->scale;
        double acc = 1.0;
        for (int n = 1; n <= max_order; ++n) {
          acc *= jump;
          kappa[static_cast<std::size_t>(n - 1)] = mp->ratio * acc;
        }
      } else {
        std::vector<double> m(static_cast<std::size_t>(max_order) + 1, 0.0);
        m[0] = 1.0;
        for (int n = 1; n <= max_order; ++n)
          m[static_cast<std::size_t>(n)] = mu.moment(n);
        kappa = cumulants_from_moments(m);
      }
      kappa_.push_back(std::move(kappa));
    }
    return spec;
  }

  static CumulantSpec from_cumulants(std::vector<std::vector<double>> kappa) {
    CumulantSpec spec;
    spec.kappa_ = std::move(kappa);
    return spec;
  }

  double kappa(int var, int order) const {
    const auto& k = kappa_.at(static_cast<std::size_t>(var - 1));
    if (order < 1 || order > static_cast<int>(k.size()))
      throw BudgetError("cumulant order " + std::to_string(order) +
                        " beyond the prepared table");
    return k[static_cast<std::size_t>(order - 1)];
  }

  int max_nonzero_order(int var) const {
    const auto& k = kappa_.at(static_cast<std::size_t>(var - 1));
    for (int n = static_cast<int>(k.size()); n >= 1; --n)
      if (k[static_cast<std::size_t>(n - 1)] != 0.0) return n;
    return 0;
  }

  int table_order() const {
    return kappa_.empty() ? 0 : static_cast<int>(kappa_.front().size());
  }
  int n_vars() const { return static_cast<int>(kappa_.size()); }

  /// Solves m_n = sum_s kappa_s * sum_{g_1+..+g_s = n-s} prod m_{g_j} for the
  /// kappa given m_0..m_K (m[0] = 1).
  static std::vector<double> cumulants_from_moments(const std::vector<double>& m) {
    int K = static_cast<int>(m.size()) - 1;
    std::vector<double> kappa(static_cast<std::size_t>(K), 0.0);
    // C[s][r] = sum over compositions of r into s parts of products of moments
    std::vector<std::vector<double>> C(static_cast<std::size_t>(K) + 1,
                                       std::vector<double>(static_cast<std::size_t>(K) + 1, 0.0));
    for (int r = 0; r <= K; ++r) C[1][static_cast<std::size_t>(r)] = m[static_cast<std::size_t>(r)];
    for (int s = 2; s <= K; ++s)
      for (int r = 0; r <= K; ++r)
        for (int q = 0; q <= r; ++q)
          C[static_cast<std::size_t>(s)][static_cast<std::size_t>(r)] +=
              m[static_cast<std::size_t>(q)] *
              C[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(r - q)];
    for (int n = 1; n <= K; ++n) {
      double rest = 0.0;
      for (int s = 1; s < n; ++s)
        rest += kappa[static_cast<std::size_t>(s - 1)] *
                C[static_cast<std::size_t>(s)][static_cast<std::size_t>(n - s)];
      kappa[static_cast<std::size_t>(n - 1)] = m[static_cast<std::size_t>(n)] - rest;
    }
    return kappa;
  }

  /// Inverse direction, used as a cross-check.
  static std::vector<double> moments_from_cumulants(const std::vector<double>& kappa) {
    int K = static_cast<int>(kappa.size());
    std::vector<double> m(static_cast<std::size_t>(K) + 1, 0.0);
    m[0] = 1.0;
    for (int n = 1; n <= K; ++n) {
      double acc = 0.0;
      for (int s = 1; s <= n; ++s) {
        // sum over gap compositions via a small DP in one dimension
        std::vector<double> comp(static_cast<std::size_t>(n - s) + 1, 0.0);
        comp[0] = 1.0;
        for (int part = 1; part <= s; ++part) {
          std::vector<double> next(comp.size(), 0.0);
          for (std::size_t r = 0; r < comp.size(); ++r)
            for (std::size_t q = 0; q + r < comp.size(); ++q)
              next[r + q] += comp[r] * m[q];
          comp = std::move(next);
        }
        acc += kappa[static_cast<std::size_t>(s - 1)] * comp[static_cast<std::size_t>(n - s)];
      }
      m[static_cast<std::size_t>(n)] = acc;
    }
    return m;
  }

 private:
  std::vector<std::vector<double>> kappa_;
};

namespace detail {

constexpr std::size_t kWordBudget = 16;

class WordMomentSolver {
 public:
  WordMomentSolver(const std::vector<int>& word, const CumulantSpec& k)
      : w_(word), k_(k) {}

  double run() { return interval(0, static_cast<int>(w_.size())); }

 private:
  // moment of the subword [i, j)
  double interval(int i, int j) {
    if (i >= j) return 1.0;
    int key = i * 64 + j;
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    double val = extend(i, 1, j, w_[static_cast<std::size_t>(i)]);
    memo_.emplace(key, val);
    return val;
  }

  // first block currently {.., prev} of size s, all letters equal to v; either
  // close it (factor kappa_s) or append a later occurrence of v. Segments
  // between block legs partition independently - that is non-crossing.
  double extend(int prev, int s, int j, int v) {
    double acc = 0.0;
    if (s <= k_.table_order()) {
      double ks = k_.kappa(v, s);
      if (ks != 0.0) acc += ks * interval(prev + 1, j);
    }
    if (s < k_.max_nonzero_order(v)) {
      for (int q = prev + 1; q < j; ++q) {
        if (w_[static_cast<std::size_t>(q)] != v) continue;
        double gap = interval(prev + 1, q);
        if (gap != 0.0) acc += gap * extend(q, s + 1, j, v);
      }
    }
    return acc;
  }

  const std::vector<int>& w_;
  const CumulantSpec& k_;
  std::map<int, double> memo_;
};

/// Second, independent route: enumerate all set partitions, drop crossing or
/// mixed-variable ones, sum the cumulant products. Exponential; test sizes only.
inline double word_moment_brute(const std::vector<int>& word, const CumulantSpec& k) {
  int n = static_cast<int>(word.size());
  if (n == 0) return 1.0;
  if (n > 12) throw BudgetError("brute-force enumeration limited to words of length 12");
  std::vector<int> block(static_cast<std::size_t>(n), 0);
  double total = 0.0;
  auto crossing = [&](int nblocks) {
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (int c = b + 1; c < n; ++c)
          for (int d = c + 1; d < n; ++d)
            if (block[a] == block[c] && block[b] == block[d] && block[a] != block[b])
              return true;
    (void)nblocks;
    return false;
  };
  auto rec = [&](auto&& self, int pos, int nblocks) -> void {
    if (pos == n) {
      if (crossing(nblocks)) return;
      std::vector<int> size(static_cast<std::size_t>(nblocks), 0);
      std::vector<int> var(static_cast<std::size_t>(nblocks), -1);
      for (int i = 0; i < n; ++i) {
        int b = block[static_cast<std::size_t>(i)];
        if (var[static_cast<std::size_t>(b)] < 0)
          var[static_cast<std::size_t>(b)] = word[static_cast<std::size_t>(i)];
        else if (var[static_cast<std::size_t>(b)] != word[static_cast<std::size_t>(i)])
          return;  // mixed block: vanishing mixed free cumulant
        ++size[static_cast<std::size_t>(b)];
      }
      double prod = 1.0;
      for (int b = 0; b < nblocks; ++b)
        prod *= k.kappa(var[static_cast<std::size_t>(b)], size[static_cast<std::size_t>(b)]);
      total += prod;
      return;
    }
    for (int b = 0; b <= nblocks; ++b) {
      block[static_cast<std::size_t>(pos)] = b;
      self(self, pos + 1, std::max(nblocks, b + 1));
    }
  };
  rec(rec, 0, 0);
  return total;
}

}  // namespace detail

/// phi(x_{w1} x_{w2} ... x_{wk}) from free cumulants: sum over non-crossing
/// partitions with single-variable blocks of the cumulant products.
inline double word_moment(const std::vector<int>& word, const CumulantSpec& cumulants) {
  if (word.size() > detail::kWordBudget)
    throw BudgetError("word length " + std::to_string(word.size()) +
                      " exceeds the enumeration budget of " +
                      std::to_string(detail::kWordBudget));
  for (int v : word)
    if (v < 1 || v > cumulants.n_vars())
      throw std::invalid_argument("word_moment: variable index out of range");
  return detail::WordMomentSolver(word, cumulants).run();
}

/// phi(p^k): expands the power into words and sums coeff * word_moment.
inline double poly_moment(const NCPolynomial& p, const CumulantSpec& cumulants, int k) {
  if (k < 1) throw std::invalid_argument("poly_moment: k must be >= 1");
  if (static_cast<std::size_t>(p.degree()) * static_cast<std::size_t>(k) > detail::kWordBudget)
    throw BudgetError("expansion degree " + std::to_string(p.degree() * k) +
                      " exceeds the enumeration budget");
  NCPolynomial q = p.pow(k);
  Complex acc(0.0, 0.0);
  for (const Monomial& m : q.terms()) acc += m.coeff * word_moment(m.word, cumulants);
  if (std::abs(acc.imag()) > 1e-9 * (1.0 + std::abs(acc.real())))
    throw std::runtime_error("poly_moment: non-real moment of a self-adjoint expression");
  return acc.real();
}

}  // namespace freespec
