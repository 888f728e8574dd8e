#pragma once

// Scalar spectral measures with compact support, their Cauchy transforms, and
// the matrix-valued Cauchy transform of coefficient-weighted variables b (x) x.
//
// Closed forms are used for the semicircle and Marchenko-Pastur (free Poisson)
// families; atomic measures evaluate as exact finite sums; everything else is
// adaptive Gauss-Legendre/Kronrod panel quadrature. Continuous closed-form
// densities are integrated in a trigonometric chart that removes the
// square-root edge behaviour, so the integrands the panels see are smooth.

#include "freespec/linalg.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <queue>
#include <variant>
#include <vector>

namespace freespec {

class MeasureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(double achieved, double requested)
      : std::runtime_error("quadrature did not converge: achieved tolerance " +
                           std::to_string(achieved) + ", requested " +
                           std::to_string(requested)),
        achieved_tolerance(achieved),
        requested_tolerance(requested) {}
  double achieved_tolerance;
  double requested_tolerance;
};

struct Semicircle {
  double mean;
  double variance;  // > 0
};

/// Free Poisson with rate `ratio` and jump scale `scale` (= sigma^2). For
/// ratio < 1 the law carries an atom at 0 of mass 1 - ratio next to the
/// continuous part.
struct MarchenkoPastur {
  double ratio;
  double scale;
};

struct Atomic {
  std::vector<std::pair<double, double>> atoms;  // (point, weight), weights sum to 1
};

struct Tabulated {
  std::vector<double> t;    // strictly increasing grid
  std::vector<double> rho;  // density values >= 0, renormalized on load
};

namespace quad {

// Gauss-Kronrod 7-15 nodes/weights on [-1, 1].
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr std::array<double, 8> kWeights = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

template <class Value>
struct ValueOps;

template <>
struct ValueOps<Complex> {
  static Complex zero(const Complex&) { return Complex(0.0, 0.0); }
  static double max_abs(const Complex& v) { return std::abs(v); }
};

template <>
struct ValueOps<CMatrix> {
  static CMatrix zero(const CMatrix& proto) { return CMatrix::Zero(proto.rows(), proto.cols()); }
  static double max_abs(const CMatrix& v) { return freespec::max_abs(v); }
};

template <class Value, class F>
struct Panel {
  double a, b;
  Value k15;
  double err;
};

template <class Value, class F>
Panel<Value, F> eval_panel(F& f, double a, double b) {
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  Value f0 = f(c);
  Value k = kWeights[7] * f0;
  Value g = kGaussWeights[3] * f0;
  for (int i = 0; i < 7; ++i) {
    Value lo = f(c - h * kNodes[i]);
    Value hi = f(c + h * kNodes[i]);
    Value s = lo + hi;
    k += kWeights[i] * s;
    if (i % 2 == 1) g += kGaussWeights[i / 2] * s;
  }
  k *= h;
  g *= h;
  return {a, b, k, ValueOps<Value>::max_abs(k - g)};
}

/// Adaptive panel integration with entrywise absolute tolerance. Seeds one
/// panel per [a,b] segment, then bisects the worst panel until the summed
/// error estimate drops below tol or the panel budget runs out.
template <class Value, class F>
Value adaptive(F&& f, const std::vector<std::pair<double, double>>& segments, double tol,
               int max_panels, double* achieved = nullptr) {
  using P = Panel<Value, F>;
  auto cmp = [](const P& x, const P& y) { return x.err < y.err; };
  std::priority_queue<P, std::vector<P>, decltype(cmp)> heap(cmp);
  double total_err = 0.0;
  for (auto [a, b] : segments) {
    if (!(b > a)) continue;
    P p = eval_panel<Value>(f, a, b);
    total_err += p.err;
    heap.push(std::move(p));
  }
  if (heap.empty()) throw MeasureError("adaptive quadrature: empty domain");
  while (total_err > tol && static_cast<int>(heap.size()) < max_panels) {
    P worst = heap.top();
    heap.pop();
    total_err -= worst.err;
    double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {  // interval exhausted at double precision
      total_err += worst.err;
      heap.push(std::move(worst));
      break;
    }
    P left = eval_panel<Value>(f, worst.a, mid);
    P right = eval_panel<Value>(f, mid, worst.b);
    total_err += left.err + right.err;
    heap.push(std::move(left));
    heap.push(std::move(right));
  }
  if (achieved) *achieved = total_err;
  if (total_err > tol && static_cast<int>(heap.size()) >= max_panels)
    throw QuadratureError(total_err, tol);
  Value sum = ValueOps<Value>::zero(heap.top().k15);
  while (!heap.empty()) {
    sum += heap.top().k15;
    heap.pop();
  }
  return sum;
}

}  // namespace quad

class SpectralMeasure {
 public:
  using Variant = std::variant<Semicircle, MarchenkoPastur, Atomic, Tabulated>;

  static SpectralMeasure semicircle(double mean, double variance) {
    if (!(variance > 0.0)) throw MeasureError("semicircle: variance must be > 0");
    return SpectralMeasure(Semicircle{mean, variance});
  }

  static SpectralMeasure marchenko_pastur(double ratio, double scale) {
    if (!(ratio > 0.0) || !(scale > 0.0))
      throw MeasureError("marchenko-pastur: ratio and scale must be > 0");
    return SpectralMeasure(MarchenkoPastur{ratio, scale});
  }

  static SpectralMeasure atomic(std::vector<std::pair<double, double>> atoms) {
    if (atoms.empty()) throw MeasureError("atomic: need at least one atom");
    double mass = 0.0;
    for (auto& [t, w] : atoms) {
      if (!(w > 0.0)) throw MeasureError("atomic: weights must be > 0");
      mass += w;
    }
    if (std::abs(mass - 1.0) > 1e-6)
      throw MeasureError("atomic: weights must sum to 1 (got " + std::to_string(mass) + ")");
    for (auto& [t, w] : atoms) w /= mass;
    std::sort(atoms.begin(), atoms.end());
    return SpectralMeasure(Atomic{std::move(atoms)});
  }

  static SpectralMeasure tabulated(std::vector<double> t, std::vector<double> rho) {
    if (t.size() != rho.size() || t.size() < 2)
      throw MeasureError("tabulated: need matching t/density columns, at least 2 rows");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i > 0 && !(t[i] > t[i - 1])) throw MeasureError("tabulated: grid must be increasing");
      if (rho[i] < 0.0) throw MeasureError("tabulated: density must be >= 0");
      if (!std::isfinite(t[i]) || !std::isfinite(rho[i]))
        throw MeasureError("tabulated: non-finite input");
    }
    double mass = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i)
      mass += 0.5 * (rho[i] + rho[i - 1]) * (t[i] - t[i - 1]);
    if (!(mass > 0.0)) throw MeasureError("tabulated: zero mass");
    if (std::abs(mass - 1.0) > 1e-6)
      throw MeasureError("tabulated: trapezoid mass must be within 1e-6 of 1 (got " +
                         std::to_string(mass) + ")");
    for (double& r : rho) r /= mass;  // renormalize exactly
    return SpectralMeasure(Tabulated{std::move(t), std::move(rho)});
  }

  const Variant& value() const { return v_; }

  /// Exact support interval; the Marchenko-Pastur atom at 0 (ratio < 1) is
  /// included in the bounds.
  std::pair<double, double> support_bounds() const {
    return std::visit(
        [](const auto& m) -> std::pair<double, double> {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, Semicircle>) {
            double r = 2.0 * std::sqrt(m.variance);
            return {m.mean - r, m.mean + r};
          } else if constexpr (std::is_same_v<T, MarchenkoPastur>) {
            double s = std::sqrt(m.ratio);
            double lo = m.scale * (1.0 - s) * (1.0 - s);
            double hi = m.scale * (1.0 + s) * (1.0 + s);
            if (m.ratio < 1.0) lo = 0.0;  // atom at 0
            return {lo, hi};
          } else if constexpr (std::is_same_v<T, Atomic>) {
            return {m.atoms.front().first, m.atoms.back().first};
          } else {
            return {m.t.front(), m.t.back()};
          }
        },
        v_);
  }

  double norm_bound() const {
    auto [lo, hi] = support_bounds();
    return std::max(std::abs(lo), std::abs(hi));
  }

  /// Mass of the atom at 0, if any (ratio < 1 Marchenko-Pastur, or an explicit
  /// atom of an atomic measure).
  double atom_at_zero() const {
    if (const auto* mp = std::get_if<MarchenkoPastur>(&v_))
      return mp->ratio < 1.0 ? 1.0 - mp->ratio : 0.0;
    if (const auto* at = std::get_if<Atomic>(&v_))
      for (auto& [t, w] : at->atoms)
        if (t == 0.0) return w;
    return 0.0;
  }

  /// Point masses of the measure (empty for purely continuous laws).
  std::vector<std::pair<double, double>> atoms() const {
    if (const auto* at = std::get_if<Atomic>(&v_)) return at->atoms;
    if (const auto* mp = std::get_if<MarchenkoPastur>(&v_))
      if (mp->ratio < 1.0) return {{0.0, 1.0 - mp->ratio}};
    return {};
  }

  bool is_atomic() const { return std::holds_alternative<Atomic>(v_); }

  /// Integrates f against the measure: atoms exactly, continuous parts by
  /// adaptive panels in a smooth chart. f maps a support point to Value.
  template <class Value, class F>
  Value integrate(F&& f, const Value& proto, double tol, int max_panels) const {
    Value acc = quad::ValueOps<Value>::zero(proto);
    for (auto& [t, w] : atoms()) acc += w * f(t);
    if (const auto* sc = std::get_if<Semicircle>(&v_)) {
      double sigma = std::sqrt(sc->variance);
      double mean = sc->mean;
      auto g = [&](double phi) -> Value {
        double c = std::cos(phi);
        return (2.0 / M_PI) * c * c * f(mean + 2.0 * sigma * std::sin(phi));
      };
      acc += quad::adaptive<Value>(g, {{-M_PI / 2.0, M_PI / 2.0}}, tol, max_panels);
    } else if (const auto* mp = std::get_if<MarchenkoPastur>(&v_)) {
      double s = std::sqrt(mp->ratio);
      double a = mp->scale * (1.0 - s) * (1.0 - s);
      double b = mp->scale * (1.0 + s) * (1.0 + s);
      double norm = (b - a) * (b - a) / (M_PI * mp->scale);
      // t = a cos^2(phi) + b sin^2(phi) absorbs both square-root edges and the
      // 1/t pole at ratio = 1
      auto g = [&](double phi) -> Value {
        double sn = std::sin(phi), cs = std::cos(phi);
        double t = a * cs * cs + b * sn * sn;
        double w = norm * sn * sn * cs * cs / t;
        return w * f(t);
      };
      acc += quad::adaptive<Value>(g, {{0.0, M_PI / 2.0}}, tol, max_panels);
    } else if (const auto* tab = std::get_if<Tabulated>(&v_)) {
      auto g = [&](double t) -> Value { return density_at(*tab, t) * f(t); };
      std::vector<std::pair<double, double>> segs;
      std::size_t n = tab->t.size();
      std::size_t stride = std::max<std::size_t>(1, (n - 1) / 64);
      for (std::size_t i = 0; i + 1 < n; i += stride)
        segs.emplace_back(tab->t[i], tab->t[std::min(i + stride, n - 1)]);
      acc += quad::adaptive<Value>(g, segs, tol, max_panels);
    }
    return acc;
  }

  /// k-th raw moment (atoms exact, continuous parts by quadrature).
  double moment(int k, double tol = 1e-12) const {
    auto f = [k](double t) -> Complex { return Complex(std::pow(t, k), 0.0); };
    return integrate<Complex>(f, Complex(0.0, 0.0), tol, 4000).real();
  }

 private:
  explicit SpectralMeasure(Variant v) : v_(std::move(v)) {}

  static double density_at(const Tabulated& tab, double t) {
    auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
    if (it == tab.t.begin() || it == tab.t.end()) {
      // endpoints included; outside the grid the density is 0
      if (t == tab.t.front()) return tab.rho.front();
      if (t == tab.t.back()) return tab.rho.back();
      return 0.0;
    }
    std::size_t i = static_cast<std::size_t>(it - tab.t.begin());
    double w = (t - tab.t[i - 1]) / (tab.t[i] - tab.t[i - 1]);
    return (1.0 - w) * tab.rho[i - 1] + w * tab.rho[i];
  }

  Variant v_;
};

namespace detail {

/// sqrt((z-lo)(z-hi)) with the cut on [lo,hi], asymptotic to z at infinity.
inline Complex sqrt_cut(Complex z, double lo, double hi) {
  return std::sqrt(z - Complex(lo)) * std::sqrt(z - Complex(hi));
}

/// Scalar Cauchy transform, no half-plane validation (used internally and by
/// Schwarz-reflection checks that evaluate in the lower half-plane).
inline Complex cauchy_scalar_raw(const SpectralMeasure& mu, Complex z, double tol = 1e-10,
                                 int max_panels = 4000) {
  return std::visit(
      [&](const auto& m) -> Complex {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Semicircle>) {
          Complex u = z - Complex(m.mean);
          double r = 2.0 * std::sqrt(m.variance);
          return (u - sqrt_cut(u, -r, r)) / (2.0 * m.variance);
        } else if constexpr (std::is_same_v<T, MarchenkoPastur>) {
          double s = std::sqrt(m.ratio);
          double a = m.scale * (1.0 - s) * (1.0 - s);
          double b = m.scale * (1.0 + s) * (1.0 + s);
          Complex num = z + Complex(m.scale * (1.0 - m.ratio)) - sqrt_cut(z, a, b);
          return num / (2.0 * m.scale * z);
        } else if constexpr (std::is_same_v<T, Atomic>) {
          Complex acc(0.0, 0.0);
          for (auto& [t, w] : m.atoms) acc += Complex(w) / (z - Complex(t));
          return acc;
        } else {
          SpectralMeasure wrap = SpectralMeasure::tabulated(m.t, m.rho);
          auto f = [&](double t) -> Complex { return 1.0 / (z - Complex(t)); };
          return wrap.integrate<Complex>(f, Complex(0.0, 0.0), tol, max_panels);
        }
      },
      mu.value());
}

}  // namespace detail

/// G_mu(z) = int dmu(t)/(z - t) for Im z > 0; maps into the lower half-plane.
inline Complex cauchy_scalar(const SpectralMeasure& mu, Complex z) {
  if (!(z.imag() > 0.0)) throw MeasureError("cauchy_scalar: need Im z > 0");
  return detail::cauchy_scalar_raw(mu, z);
}

/// A coefficient-weighted variable b (x) x living over M_N: Hermitian
/// coefficient, scalar law, and the recorded operator-norm bound.
struct OpVarLeaf {
  CMatrix b;
  SpectralMeasure mu;
  Eigen::Index N;
  double norm_bound;  // ||b|| * max |support|
};

inline OpVarLeaf make_leaf(CMatrix b, SpectralMeasure mu) {
  require_finite(b, "leaf coefficient");
  if (b.rows() != b.cols()) throw MeasureError("leaf coefficient must be square");
  if (!is_hermitian(b)) throw MeasureError("leaf coefficient must be Hermitian");
  CMatrix h = 0.5 * (b + b.adjoint());
  double bound = op_norm(h) * mu.norm_bound();
  Eigen::Index n = h.rows();
  return OpVarLeaf{std::move(h), std::move(mu), n, bound};
}

namespace detail {

inline CMatrix opval_cauchy_raw(const CMatrix& b, const SpectralMeasure& mu,
                                const CMatrix& beta, double tol, int max_panels) {
  auto f = [&](double t) -> CMatrix { return invert(beta - Complex(t) * b); };
  CMatrix proto = CMatrix::Zero(beta.rows(), beta.cols());
  return mu.integrate<CMatrix>(f, proto, tol, max_panels);
}

}  // namespace detail

/// G_{b(x)x}(beta) = int (beta - t b)^{-1} dmu(t) on H+(M_N). The imaginary
/// part of the result is negative definite; asserted before returning.
inline CMatrix opval_cauchy(const OpVarLeaf& leaf, const HalfPlanePoint& beta,
                            double tol = 1e-10, int max_panels = 4000) {
  if (beta.m.rows() != leaf.N)
    throw MeasureError("opval_cauchy: ambient dimension mismatch");
  CMatrix g = detail::opval_cauchy_raw(leaf.b, leaf.mu, beta.m, tol, max_panels);
  double top = max_eig_herm(imag_part(g));
  if (!(top < 0.0))
    throw MeasureError("opval_cauchy: imaginary part not negative definite (max eig " +
                       std::to_string(top) + ")");
  return g;
}

class InversionError : public std::runtime_error {
 public:
  InversionError(const std::string& what, double cond)
      : std::runtime_error(what + " (condition estimate " + std::to_string(cond) + ")"),
        cond_estimate(cond) {}
  double cond_estimate;
};

/// h(beta) = G(beta)^{-1} - beta, from an already-evaluated G. Maps the upper
/// half-plane into its closure.
inline CMatrix h_transform(const CMatrix& G_at_beta, const CMatrix& beta) {
  InverseReport inv = [&] {
    try {
      return invert_with_condition(G_at_beta);
    } catch (const SingularMatrixError& e) {
      throw InversionError("h_transform: Cauchy transform not invertible", e.cond_estimate);
    }
  }();
  if (inv.cond_estimate > 1e14)
    throw InversionError("h_transform: Cauchy transform numerically singular",
                         inv.cond_estimate);
  return inv.inverse - beta;
}

template <class GFn>
CMatrix h_transform(GFn&& g, const HalfPlanePoint& beta) {
  return h_transform(g(beta), beta.m);
}

/// Parses the measure mini-grammar used by the CLI:
///   semicircle(mean,var) | mp(lambda,scale) | atoms((t1,w1),(t2,w2),...) | table(path)
/// The table reader is supplied by the caller (it does file I/O).
inline SpectralMeasure parse_measure(
    const std::string& text,
    const std::function<SpectralMeasure(const std::string&)>& load_table = {}) {
  std::size_t open = text.find('(');
  if (open == std::string::npos || text.back() != ')')
    throw MeasureError("measure spec must look like name(args): got '" + text + "'");
  std::string name = text.substr(0, open);
  std::string args = text.substr(open + 1, text.size() - open - 2);
  auto split_numbers = [&](const std::string& s) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t comma = s.find(',', pos);
      std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        out.push_back(std::stod(tok));
      } catch (const std::exception&) {
        throw MeasureError("measure spec: bad number '" + tok + "'");
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return out;
  };
  if (name == "semicircle") {
    auto v = split_numbers(args);
    if (v.size() != 2) throw MeasureError("semicircle(mean,var) takes two arguments");
    return SpectralMeasure::semicircle(v[0], v[1]);
  }
  if (name == "mp") {
    auto v = split_numbers(args);
    if (v.size() != 2) throw MeasureError("mp(lambda,scale) takes two arguments");
    return SpectralMeasure::marchenko_pastur(v[0], v[1]);
  }
  if (name == "atoms") {
    std::vector<std::pair<double, double>> atoms;
    std::size_t pos = 0;
    while (pos < args.size()) {
      std::size_t lp = args.find('(', pos);
      std::size_t rp = args.find(')', lp);
      if (lp == std::string::npos || rp == std::string::npos)
        throw MeasureError("atoms spec must be a list of (t,w) pairs");
      auto v = split_numbers(args.substr(lp + 1, rp - lp - 1));
      if (v.size() != 2) throw MeasureError("each atom must be a (t,w) pair");
      atoms.emplace_back(v[0], v[1]);
      pos = rp + 1;
      while (pos < args.size() && (args[pos] == ',' || args[pos] == ' ')) ++pos;
    }
    return SpectralMeasure::atomic(std::move(atoms));
  }
  if (name == "table") {
    if (!load_table) throw MeasureError("table(path) requires a table loader");
    return load_table(args);
  }
  throw MeasureError("unknown measure '" + name + "'");
}

}  // namespace freespec
