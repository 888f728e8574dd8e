#pragma once

// Command surface shared by the freespec tool and the tests: a validated
// RunConfig per subcommand, artifact writers (CSV + JSON sidecar, atomic
// temp-and-rename), and the compare report. Exit codes are fixed: 0 success,
// 1 usage, 2 parse/input, 3 solver, 4 I/O.

#include "freespec/density.hpp"
#include "freespec/linearization.hpp"
#include "freespec/ncpoly.hpp"
#include "freespec/oracle.hpp"
#include "freespec/rmt.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

namespace freespec {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitParse = 2,
  kExitSolver = 3,
  kExitIo = 4,
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  enum class Command { Linearize, Density, Simulate, Compare };
  Command command = Command::Density;

  std::string poly;
  int n_vars = 0;
  std::map<int, std::string> var_measures;   // density: 1-based variable -> spec string
  std::map<int, std::string> var_ensembles;  // simulate

  std::string grid;  // "lo:hi:count", empty for the auto range
  int grid_count = 1000;
  double eps = 1e-6;
  double tol = 1e-12;
  bool richardson = false;
  int threads = 0;

  int verify_trials = 0;  // linearize
  int verify_dim = 4;

  Eigen::Index n = 2000;  // simulate
  int reps = 5;
  std::uint64_t seed = 42;

  std::string curve_path;  // compare inputs
  std::string eigs_path;
  bool oracle = false;
  int bins = 100;

  std::string out;  // artifact path; linearize may print to stdout instead
};

namespace detail {

inline void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os.flush()) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
}

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(read_file(path));
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      cells.push_back(line.substr(pos, comma == std::string::npos ? std::string::npos
                                                                  : comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

inline bool numeric_cell(const std::string& s) {
  try {
    std::size_t used = 0;
    (void)std::stod(s, &used);
    return used > 0;
  } catch (const std::exception&) {
    return false;
  }
}

/// CSV of t,density rows (one header line allowed).
inline SpectralMeasure load_table_measure(const std::string& path) {
  std::vector<double> t, rho;
  for (const auto& row : read_csv(path)) {
    if (row.size() < 2) throw MeasureError("table " + path + ": need t,density columns");
    if (!numeric_cell(row[0])) continue;  // header
    t.push_back(std::stod(row[0]));
    rho.push_back(std::stod(row[1]));
  }
  return SpectralMeasure::tabulated(std::move(t), std::move(rho));
}

inline SpectralMeasure measure_from_spec(const std::string& spec) {
  return parse_measure(spec, &load_table_measure);
}

inline nlohmann::json matrix_to_json(const CMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  switch (c.command) {
    case RunConfig::Command::Linearize: j["command"] = "linearize"; break;
    case RunConfig::Command::Density: j["command"] = "density"; break;
    case RunConfig::Command::Simulate: j["command"] = "simulate"; break;
    case RunConfig::Command::Compare: j["command"] = "compare"; break;
  }
  if (!c.poly.empty()) {
    j["poly"] = c.poly;
    j["nvars"] = c.n_vars;
  }
  if (!c.var_measures.empty()) {
    nlohmann::json vars;
    for (auto& [k, v] : c.var_measures) vars[std::to_string(k)] = v;
    j["measures"] = vars;
  }
  if (!c.var_ensembles.empty()) {
    nlohmann::json vars;
    for (auto& [k, v] : c.var_ensembles) vars[std::to_string(k)] = v;
    j["ensembles"] = vars;
  }
  if (c.command == RunConfig::Command::Density) {
    j["grid"] = c.grid.empty() ? "auto" : c.grid;
    j["grid_count"] = c.grid_count;
    j["eps"] = c.eps;
    j["tol"] = c.tol;
    j["richardson"] = c.richardson;
    j["threads"] = c.threads;
  }
  if (c.command == RunConfig::Command::Simulate) {
    j["n"] = c.n;
    j["reps"] = c.reps;
    j["seed"] = c.seed;
  }
  if (c.command == RunConfig::Command::Linearize) {
    j["verify_trials"] = c.verify_trials;
    j["verify_dim"] = c.verify_dim;
    j["seed"] = c.seed;
  }
  if (c.command == RunConfig::Command::Compare) {
    j["curve"] = c.curve_path;
    j["eigs"] = c.eigs_path;
    j["oracle"] = c.oracle;
    j["bins"] = c.bins;
  }
  return j;
}

inline std::vector<double> parse_grid_spec(const std::string& s) {
  double lo = 0.0, hi = 0.0;
  long count = 0;
  std::size_t c1 = s.find(':');
  std::size_t c2 = s.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos)
    throw UsageError("grid spec must be lo:hi:count, got '" + s + "'");
  try {
    lo = std::stod(s.substr(0, c1));
    hi = std::stod(s.substr(c1 + 1, c2 - c1 - 1));
    count = std::stol(s.substr(c2 + 1));
  } catch (const std::exception&) {
    throw UsageError("grid spec must be lo:hi:count, got '" + s + "'");
  }
  if (!(hi > lo) || count < 2) throw UsageError("grid spec needs hi > lo and count >= 2");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i)
    grid[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return grid;
}

inline std::vector<SpectralMeasure> measures_for(const RunConfig& c) {
  std::vector<SpectralMeasure> out;
  for (int v = 1; v <= c.n_vars; ++v) {
    auto it = c.var_measures.find(v);
    if (it == c.var_measures.end())
      throw UsageError("no measure bound for variable x" + std::to_string(v) +
                       " (use --var " + std::to_string(v) + "=...)");
    out.push_back(measure_from_spec(it->second));
  }
  return out;
}

struct CurveFile {
  DensityCurve curve;
  nlohmann::json sidecar;  // empty when absent
};

inline CurveFile read_curve(const std::string& path) {
  CurveFile cf;
  for (const auto& row : read_csv(path)) {
    if (row.size() < 2 || !numeric_cell(row[0])) continue;
    DensityPoint pt;
    pt.t = std::stod(row[0]);
    pt.rho = numeric_cell(row[1]) ? std::stod(row[1]) : std::numeric_limits<double>::quiet_NaN();
    pt.raw_rho = row.size() > 2 && numeric_cell(row[2]) ? std::stod(row[2]) : pt.rho;
    pt.iterations = row.size() > 3 && numeric_cell(row[3]) ? static_cast<int>(std::stod(row[3])) : 0;
    pt.residual = row.size() > 4 && numeric_cell(row[4]) ? std::stod(row[4]) : 0.0;
    pt.failed = !std::isfinite(pt.rho);
    cf.curve.points.push_back(pt);
  }
  if (cf.curve.points.empty()) throw IoError("curve " + path + " has no data rows");
  const DensityPoint* prev = nullptr;
  for (const DensityPoint& pt : cf.curve.points) {
    if (pt.failed) {
      ++cf.curve.failures;
      continue;
    }
    if (prev) cf.curve.mass += 0.5 * (pt.rho + prev->rho) * (pt.t - prev->t);
    prev = &pt;
  }
  std::string sidecar_path = path + ".json";
  if (std::filesystem::exists(sidecar_path)) {
    cf.sidecar = nlohmann::json::parse(read_file(sidecar_path));
    if (cf.sidecar.contains("eps")) cf.curve.epsilon_used = cf.sidecar["eps"].get<double>();
  }
  return cf;
}

inline std::vector<double> read_eigs(const std::string& path) {
  std::vector<double> eigs;
  for (const auto& row : read_csv(path)) {
    if (row.empty() || !numeric_cell(row[0])) continue;
    eigs.push_back(std::stod(row[0]));
  }
  if (eigs.empty()) throw IoError("eigenvalue file " + path + " has no data rows");
  std::sort(eigs.begin(), eigs.end());
  return eigs;
}

}  // namespace detail

inline int run_linearize(const RunConfig& c, std::ostream& out) {
  NCPolynomial p = parse_polynomial(c.poly, c.n_vars);
  Linearization L = selfadjoint_linearize(p);
  nlohmann::json j;
  j["config"] = detail::config_to_json(c);
  j["N"] = L.N;
  j["n_vars"] = L.n_vars;
  nlohmann::json layout;
  layout["q_dim"] = L.layout.q_dim;
  layout["part_dims"] = L.layout.part_dims;
  j["block_layout"] = layout;
  nlohmann::json coeffs = nlohmann::json::array();
  for (const CMatrix& b : L.coeffs) coeffs.push_back(detail::matrix_to_json(b));
  j["coeffs"] = coeffs;  // b_0 first, then b_1..b_n
  j["selfadjoint"] = L.selfadjoint();
  if (c.verify_trials > 0) {
    VerifyReport rep = verify_linearization(L, p, c.verify_trials, c.verify_dim, c.seed);
    nlohmann::json v;
    v["trials"] = rep.trials;
    v["max_corner_residual"] = rep.max_corner_residual;
    v["max_schur_residual"] = rep.max_schur_residual;
    v["inversion_failures"] = rep.inversion_failures;
    j["verification"] = v;
  }
  std::string text = j.dump(2) + "\n";
  if (c.out.empty())
    out << text;
  else
    detail::write_atomic(c.out, text);
  return kExitOk;
}

inline int run_density(const RunConfig& c, std::ostream& out) {
  if (c.out.empty()) throw UsageError("density requires --out");
  ProblemSpec spec;
  spec.p = parse_polynomial(c.poly, c.n_vars);
  spec.measures = detail::measures_for(c);
  spec.grid = c.grid.empty() ? auto_grid(spec.p, spec.measures, c.grid_count)
                             : detail::parse_grid_spec(c.grid);
  spec.epsilon = c.eps;
  spec.solver.tol = c.tol;
  spec.richardson = c.richardson;
  spec.threads = c.threads;
  DensityCurve curve = density_grid(spec);

  std::ostringstream csv;
  csv << "t,rho,raw_rho,iterations,residual\n";
  csv.precision(17);
  for (const DensityPoint& pt : curve.points)
    csv << pt.t << ',' << pt.rho << ',' << pt.raw_rho << ',' << pt.iterations << ','
        << pt.residual << '\n';
  detail::write_atomic(c.out, csv.str());

  nlohmann::json meta = detail::config_to_json(c);
  meta["grid_lo"] = spec.grid.front();
  meta["grid_hi"] = spec.grid.back();
  meta["grid_points"] = spec.grid.size();
  meta["mass"] = curve.mass;
  meta["failures"] = curve.failures;
  detail::write_atomic(c.out + ".json", meta.dump(2) + "\n");
  out << "density: " << spec.grid.size() << " points, mass " << curve.mass << ", "
      << curve.failures << " failures -> " << c.out << "\n";
  return kExitOk;
}

inline int run_simulate(const RunConfig& c, std::ostream& out) {
  if (c.out.empty()) throw UsageError("simulate requires --out");
  NCPolynomial p = parse_polynomial(c.poly, c.n_vars);
  EnsembleSpec spec;
  spec.n = c.n;
  spec.reps = c.reps;
  spec.seed = c.seed;
  for (int v = 1; v <= c.n_vars; ++v) {
    auto it = c.var_ensembles.find(v);
    if (it == c.var_ensembles.end())
      throw UsageError("no ensemble bound for variable x" + std::to_string(v) +
                       " (use --ensemble " + std::to_string(v) + "=...)");
    spec.variables.push_back(parse_ensemble(it->second));
  }
  std::vector<double> eigs = empirical_spectrum(p, spec);
  std::ostringstream csv;
  csv << "eigenvalue\n";
  csv.precision(17);
  for (double e : eigs) csv << e << '\n';
  detail::write_atomic(c.out, csv.str());
  detail::write_atomic(c.out + ".json", detail::config_to_json(c).dump(2) + "\n");
  out << "simulate: " << eigs.size() << " eigenvalues -> " << c.out << "\n";
  return kExitOk;
}

inline int run_compare(const RunConfig& c, std::ostream& out) {
  if (c.curve_path.empty() || c.eigs_path.empty())
    throw UsageError("compare requires --curve and --eigs");
  detail::CurveFile cf = detail::read_curve(c.curve_path);
  std::vector<double> eigs = detail::read_eigs(c.eigs_path);
  DensityCdf cdf = cdf_from_density(cf.curve);
  double ks = ks_distance(eigs, cdf);

  constexpr int kMoments = 4;
  std::vector<double> pipeline_m = moments_from_density(cf.curve, kMoments);
  std::vector<double> empirical_m(kMoments, 0.0);
  for (double e : eigs) {
    double acc = 1.0;
    for (int k = 0; k < kMoments; ++k) {
      acc *= e;
      empirical_m[static_cast<std::size_t>(k)] += acc;
    }
  }
  for (double& m : empirical_m) m /= static_cast<double>(eigs.size());

  std::optional<std::vector<double>> oracle_m;
  if (c.oracle) {
    if (!cf.sidecar.contains("poly") || !cf.sidecar.contains("measures"))
      throw UsageError("--oracle needs the curve's JSON sidecar (poly + measures)");
    NCPolynomial p = parse_polynomial(cf.sidecar["poly"].get<std::string>(),
                                      cf.sidecar["nvars"].get<int>());
    std::vector<SpectralMeasure> measures;
    for (int v = 1; v <= p.n_vars(); ++v)
      measures.push_back(detail::measure_from_spec(
          cf.sidecar["measures"][std::to_string(v)].get<std::string>()));
    CumulantSpec cum = CumulantSpec::from_measures(measures, p.degree() * kMoments);
    oracle_m.emplace();
    for (int k = 1; k <= kMoments; ++k) oracle_m->push_back(poly_moment(p, cum, k));
  }

  out << "samples: " << eigs.size() << "\n";
  out << "curve mass: " << cf.curve.mass << "\n";
  out << "ks_distance: " << ks << "\n";
  out << "moment,pipeline,empirical" << (oracle_m ? ",oracle" : "") << "\n";
  for (int k = 1; k <= kMoments; ++k) {
    out << "m" << k << ',' << pipeline_m[static_cast<std::size_t>(k - 1)] << ','
        << empirical_m[static_cast<std::size_t>(k - 1)];
    if (oracle_m) out << ',' << (*oracle_m)[static_cast<std::size_t>(k - 1)];
    out << "\n";
  }

  if (!c.out.empty()) {
    // gnuplot-ready overlay: bin centers, empirical histogram density, curve
    double lo = eigs.front(), hi = eigs.back();
    double width = (hi - lo) / static_cast<double>(c.bins);
    if (!(width > 0.0)) width = 1.0;
    std::vector<double> hist(static_cast<std::size_t>(c.bins), 0.0);
    for (double e : eigs) {
      int b = std::min(c.bins - 1, static_cast<int>((e - lo) / width));
      hist[static_cast<std::size_t>(std::max(0, b))] += 1.0;
    }
    std::ostringstream dat;
    dat << "# t empirical_density pipeline_rho\n";
    dat.precision(12);
    // piecewise-linear interpolation of the curve onto bin centers
    auto rho_at = [&](double x) {
      const auto& pts = cf.curve.points;
      if (x <= pts.front().t || x >= pts.back().t) return 0.0;
      std::size_t lo_i = 0, hi_i = pts.size() - 1;
      while (lo_i + 1 < hi_i) {
        std::size_t mid = (lo_i + hi_i) / 2;
        (pts[mid].t <= x ? lo_i : hi_i) = mid;
      }
      double w = (x - pts[lo_i].t) / (pts[hi_i].t - pts[lo_i].t);
      double a = pts[lo_i].failed ? 0.0 : pts[lo_i].rho;
      double b = pts[hi_i].failed ? 0.0 : pts[hi_i].rho;
      return (1.0 - w) * a + w * b;
    };
    for (int b = 0; b < c.bins; ++b) {
      double center = lo + (static_cast<double>(b) + 0.5) * width;
      double density = hist[static_cast<std::size_t>(b)] /
                       (static_cast<double>(eigs.size()) * width);
      dat << center << ' ' << density << ' ' << rho_at(center) << '\n';
    }
    detail::write_atomic(c.out, dat.str());
  }
  return kExitOk;
}

/// Executes a validated config; maps failures onto the fixed exit-code table.
inline int run(const RunConfig& c, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  try {
    switch (c.command) {
      case RunConfig::Command::Linearize: return run_linearize(c, out);
      case RunConfig::Command::Density: return run_density(c, out);
      case RunConfig::Command::Simulate: return run_simulate(c, out);
      case RunConfig::Command::Compare: return run_compare(c, out);
    }
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const MeasureError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << "\n";
    return kExitParse;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const SubordinationError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const QuadratureError& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const IoError& e) {
    err << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}

}  // namespace freespec
