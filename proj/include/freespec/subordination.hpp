#pragma once

// Operator-valued free additive convolution by analytic subordination. For
// free x, y and a base point b in H+(M_N), omega_1(b) is the unique attracting
// fixed point of w -> h_y(h_x(w) + b) + b; iterating it from any admissible
// start gives G_{x+y}(b) = G_x(omega_1(b)) = G_y(omega_2(b)) together with the
// subordination identities used here as independent correctness signals.

#include "freespec/linalg.hpp"
#include "freespec/spectra.hpp"

#include <deque>
#include <memory>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

namespace freespec {

struct SolverConfig {
  double tol = 1e-12;   // absolute, on the iterate displacement
  int max_iter = 20000;
  std::optional<CMatrix> warm_start;
  bool record_history = false;  // keep the displacement sequence
  double leaf_tol = 1e-10;      // quadrature tolerance for leaf transforms
  int leaf_max_panels = 4000;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(int iterations, double last_displacement)
      : std::runtime_error("fixed-point iteration did not converge in " +
                           std::to_string(iterations) + " iterations (last displacement " +
                           std::to_string(last_displacement) + ")"),
        iterations(iterations),
        last_displacement(last_displacement) {}
  int iterations;
  double last_displacement;
};

class SubordinationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ConvResult {
  CMatrix omega1, omega2;
  CMatrix G_sum;
  int iterations = 0;
  // r2: residual of F_x(w1) + b = F_y(w2) + b = w1 + w2, evaluated on the y
  // side (the x side vanishes identically because omega2 := h_x(omega1) + b).
  // r3: || G_x(omega1) - G_y(omega2) ||. Both in operator norm.
  double r2 = 0.0;
  double r3 = 0.0;
  double displacement = 0.0;
  std::vector<double> history;  // filled when record_history is set
};

/// A free operator-valued variable over M_N: either a coefficient-weighted
/// scalar variable (leaf) or the free additive convolution of two subtrees.
/// Trees are immutable and cheap to copy.
class OpVar {
 public:
  static OpVar leaf(CMatrix b, SpectralMeasure mu) {
    auto node = std::make_shared<Node>();
    node->leaf = make_leaf(std::move(b), std::move(mu));
    node->N = node->leaf->N;
    node->bound = node->leaf->norm_bound;
    return OpVar(std::move(node));
  }

  static OpVar conv(OpVar left, OpVar right, SolverConfig cfg = {}) {
    if (left.dim() != right.dim())
      throw std::invalid_argument("convolve: ambient dimensions differ");
    auto node = std::make_shared<Node>();
    node->left = std::move(left);
    node->right = std::move(right);
    node->cfg = std::move(cfg);
    node->N = node->left->dim();
    node->bound = node->left->norm_bound() + node->right->norm_bound();
    return OpVar(std::move(node));
  }

  bool is_leaf() const { return node_->leaf.has_value(); }
  const OpVarLeaf& leaf_data() const { return *node_->leaf; }
  const OpVar& left() const { return *node_->left; }
  const OpVar& right() const { return *node_->right; }
  const SolverConfig& config() const { return node_->cfg; }
  Eigen::Index dim() const { return node_->N; }
  double norm_bound() const { return node_->bound; }
  const void* id() const { return node_.get(); }

 private:
  struct Node {
    std::optional<OpVarLeaf> leaf;
    std::optional<OpVar> left, right;
    SolverConfig cfg;
    Eigen::Index N = 0;
    double bound = 0.0;
  };

  explicit OpVar(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
  std::shared_ptr<const Node> node_;
};

/// Left fold: ((v1 # v2) # v3) # ... with the given solver configuration at
/// every internal node.
inline OpVar convolve(std::vector<OpVar> vars, const SolverConfig& cfg = {}) {
  if (vars.empty()) throw std::invalid_argument("convolve: need at least one variable");
  OpVar acc = std::move(vars.front());
  for (std::size_t i = 1; i < vars.size(); ++i)
    acc = OpVar::conv(std::move(acc), std::move(vars[i]), cfg);
  return acc;
}

/// Per-worker evaluation state: a small per-node cache of solved points keyed
/// by the bit pattern of the base matrix, plus the last omega for warm starts.
/// Not meant to be shared across threads; give each worker its own context
/// (misses merely recompute).
class EvalContext {
 public:
  CMatrix cauchy(const OpVar& v, const HalfPlanePoint& beta) {
    return cauchy_with(v, beta, v.is_leaf() ? SolverConfig{} : v.config());
  }

  /// Leaf transforms are evaluated at the quadrature settings of the solver
  /// configuration that drives them; convolution nodes use their own config.
  CMatrix cauchy_with(const OpVar& v, const HalfPlanePoint& beta, const SolverConfig& cfg) {
    if (v.is_leaf())
      return opval_cauchy(v.leaf_data(), beta, cfg.leaf_tol, cfg.leaf_max_panels);
    return conv_result(v, beta).G_sum;
  }

  ConvResult conv_result(const OpVar& v, const HalfPlanePoint& beta) {
    NodeState& st = state(v.id());
    std::string key = bit_key(beta.m);
    if (auto it = st.cache.find(key); it != st.cache.end()) return it->second;
    ConvResult res = subordinate(v.left(), v.right(), beta, v.config(), st.warm);
    st.warm = res.omega1;
    if (st.order.size() >= kCacheCap) {
      st.cache.erase(st.order.front());
      st.order.pop_front();
    }
    st.order.push_back(key);
    st.cache.emplace(std::move(key), res);
    return res;
  }

  ConvResult subordinate(const OpVar& x, const OpVar& y, const HalfPlanePoint& b,
                         const SolverConfig& cfg, std::optional<CMatrix> warm_hint = {}) {
    if (x.dim() != y.dim() || x.dim() != b.m.rows())
      throw std::invalid_argument("subordination: dimension mismatch");
    const double guard = 10.0 * cfg.tol;
    const CMatrix im_b = imag_part(b.m);
    CMatrix w = b.m;
    if (cfg.warm_start && admissible(*cfg.warm_start, b))
      w = *cfg.warm_start;
    else if (warm_hint && admissible(*warm_hint, b))
      w = *warm_hint;

    ConvResult out;
    if (cfg.record_history) out.history.reserve(64);
    double disp = std::numeric_limits<double>::infinity();
    int it = 0;
    while (it < cfg.max_iter) {
      ++it;
      CMatrix gx = cauchy_with(x, HalfPlanePoint{w, b.margin}, cfg);
      CMatrix inner = h_transform(gx, w) + b.m;
      CMatrix gy = cauchy_with(y, HalfPlanePoint{inner, b.margin}, cfg);
      CMatrix w_next = h_transform(gy, inner) + b.m;
      disp = (w_next - w).norm();
      if (cfg.record_history) out.history.push_back(disp);
      double gain = min_eig_herm(imag_part(w_next) - im_b);
      if (gain < -guard)
        throw SubordinationError("iterate lost the half-plane margin (gain " +
                                 std::to_string(gain) + ")");
      w = std::move(w_next);
      if (disp < cfg.tol) break;
    }
    if (!(disp < cfg.tol)) throw SolverError(it, disp);

    out.omega1 = w;
    CMatrix gx = cauchy_with(x, HalfPlanePoint{out.omega1, b.margin}, cfg);
    out.omega2 = h_transform(gx, out.omega1) + b.m;
    out.G_sum = gx;
    CMatrix gy = cauchy_with(y, HalfPlanePoint{out.omega2, b.margin}, cfg);
    out.r2 = op_norm(invert(gy) + b.m - out.omega1 - out.omega2);
    out.r3 = op_norm(gx - gy);
    out.iterations = it;
    out.displacement = disp;
    for (const CMatrix* om : {&out.omega1, &out.omega2}) {
      double gain = min_eig_herm(imag_part(*om) - im_b);
      if (gain < -guard)
        throw SubordinationError("subordination point lost the half-plane margin (gain " +
                                 std::to_string(gain) + ")");
    }
    return out;
  }

 private:
  static constexpr std::size_t kCacheCap = 64;

  struct NodeState {
    std::unordered_map<std::string, ConvResult> cache;
    std::deque<std::string> order;
    std::optional<CMatrix> warm;
  };

  static bool admissible(const CMatrix& w0, const HalfPlanePoint& b) {
    if (w0.rows() != b.m.rows() || w0.cols() != b.m.cols()) return false;
    if (!all_finite(w0)) return false;
    return min_eig_herm(imag_part(w0)) >= 0.5 * b.margin;
  }

  static std::string bit_key(const CMatrix& m) {
    return std::string(reinterpret_cast<const char*>(m.data()),
                       static_cast<std::size_t>(m.size()) * sizeof(Complex));
  }

  NodeState& state(const void* id) { return states_[id]; }

  std::unordered_map<const void*, NodeState> states_;
};

inline ConvResult fixed_point_subordination(const OpVar& x, const OpVar& y,
                                            const HalfPlanePoint& b,
                                            const SolverConfig& cfg = {}) {
  EvalContext ctx;
  return ctx.subordinate(x, y, b, cfg);
}

/// G_v(beta) for any variable tree (leaves directly, convolutions through the
/// fixed-point solver).
inline CMatrix op_cauchy(const OpVar& v, const HalfPlanePoint& beta) {
  EvalContext ctx;
  return ctx.cauchy(v, beta);
}

struct AtomDiagnostic {
  // eigenpairs of Im(F_y(w) - w) with eigenvalue below the threshold
  std::vector<std::pair<double, CVector>> flagged;
  // largest principal angle between the flagged subspaces at w and at a
  // second base point; pi/2 when the flag counts disagree
  double cross_check_angle = 0.0;
};

/// Detects directions where F_y fails to gain imaginary part: the kernel of
/// Im(F_y(w) - w) is independent of w and marks the deterministic (atomic)
/// part of the variable. Diagnostic only.
inline AtomDiagnostic atom_diagnostic(const OpVar& y, const HalfPlanePoint& w,
                                      double threshold) {
  EvalContext ctx;
  auto flag_at = [&](const HalfPlanePoint& pt) {
    CMatrix g = ctx.cauchy(y, pt);
    CMatrix k = imag_part(invert(g) - pt.m);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(k);
    if (es.info() != Eigen::Success)
      throw SubordinationError("atom_diagnostic: eigensolver failed");
    std::vector<std::pair<double, CVector>> out;
    for (Eigen::Index i = 0; i < k.rows(); ++i)
      if (es.eigenvalues()(i) < threshold)
        out.emplace_back(es.eigenvalues()(i), es.eigenvectors().col(i));
    return out;
  };

  AtomDiagnostic diag;
  diag.flagged = flag_at(w);
  HalfPlanePoint w2 =
      certify_half_plane(0.75 * w.m + Complex(0.0, 0.5 * w.margin) *
                                          CMatrix::Identity(w.m.rows(), w.m.cols()));
  auto flagged2 = flag_at(w2);
  if (diag.flagged.size() != flagged2.size()) {
    diag.cross_check_angle = M_PI / 2.0;
  } else if (!diag.flagged.empty()) {
    Eigen::Index n = w.m.rows();
    CMatrix v1(n, static_cast<Eigen::Index>(diag.flagged.size()));
    CMatrix v2(n, static_cast<Eigen::Index>(flagged2.size()));
    for (std::size_t i = 0; i < diag.flagged.size(); ++i) {
      v1.col(static_cast<Eigen::Index>(i)) = diag.flagged[i].second;
      v2.col(static_cast<Eigen::Index>(i)) = flagged2[i].second;
    }
    Eigen::JacobiSVD<CMatrix> svd(v1.adjoint() * v2);
    double smin = svd.singularValues().minCoeff();
    diag.cross_check_angle = std::acos(std::min(1.0, smin));
  }
  return diag;
}

}  // namespace freespec
