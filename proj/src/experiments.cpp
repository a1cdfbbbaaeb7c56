#include "effectop/experiments.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "effectop/rng.hpp"

namespace effectop {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kArtifactVersion = "effectop 1.0.0";

std::string fmt17(Real v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t fnv1a_bytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

class OutputSink {
 public:
  explicit OutputSink(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
  }

  void write(const std::string& name, const std::string& bytes) {
    const std::string path = dir_ + "/" + name;
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "unwritable output directory: " + dir_);
    os << bytes;
    files_.push_back({name, bytes.size(), fnv1a_bytes(bytes)});
  }

  void note_external(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    const std::string bytes = ss.str();
    files_.push_back({fs::path(path).filename().string(), bytes.size(), fnv1a_bytes(bytes)});
  }

  void manifest(std::uint64_t config_hash, const std::map<std::string, Real>& timings) {
    json m;
    m["artifact_version"] = kArtifactVersion;
    m["config_hash"] = hex64(config_hash);
    json t = json::object();
    for (const auto& [k, v] : timings) t[k] = v;
    m["timings_seconds"] = t;
    json outs = json::array();
    std::uint64_t combined = 0xcbf29ce484222325ULL;
    for (const auto& f : files_) {
      outs.push_back({{"file", f.name}, {"bytes", f.bytes}, {"fnv64", hex64(f.hash)}});
      combined ^= f.hash;
    }
    m["outputs"] = outs;
    m["outputs_hash"] = hex64(combined);
    const std::string path = dir_ + "/manifest.json";
    std::ofstream os(path, std::ios::binary);
    os << m.dump(2) << '\n';
  }

  const std::string& dir() const { return dir_; }
  bool empty() const { return files_.empty(); }

 private:
  struct FileInfo {
    std::string name;
    std::size_t bytes;
    std::uint64_t hash;
  };
  std::string dir_;
  std::vector<FileInfo> files_;
};

class Stopwatch {
 public:
  void start() { t0_ = std::chrono::steady_clock::now(); }
  Real stop() {
    auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<Real>(t1 - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

// ---------------------------------------------------------------------------
// fitz-demo: the closed forms checked against an independent recomputation of
// the defining supremum over the operator graph.

Real golden_max(const std::function<Real(Real)>& g, Real lo, Real hi) {
  const Real phi = 0.5 * (std::sqrt(5.0) - 1.0);
  Real a = lo, b = hi;
  Real c = b - phi * (b - a), d = a + phi * (b - a);
  Real gc = g(c), gd = g(d);
  for (int it = 0; it < 200; ++it) {
    if (gc < gd) {
      a = c;
      c = d;
      gc = gd;
      d = a + phi * (b - a);
      gd = g(d);
    } else {
      b = d;
      d = c;
      gd = gc;
      c = b - phi * (b - a);
      gc = g(c);
    }
    if (b - a < 1e-12 * std::max(1.0, std::abs(a) + std::abs(b))) break;
  }
  return std::max(gc, gd);
}

Real sup_affine_graph(Real a, Real b, Real x, Real y) {
  // sup over x0 of y*x0 + (a x0 + b) x - (a x0 + b) x0  (concave quadratic)
  auto g = [&](Real x0) { return y * x0 + (a * x0 + b) * x - (a * x0 + b) * x0; };
  const Real r = 8.0 * (1.0 + std::abs(x) + std::abs(y) + std::abs(b)) / std::min(1.0, a);
  return golden_max(g, -r, r);
}

Real sup_sign_graph(Real x, Real y) {
  // Branches of the sign graph, suprema computed case by case.
  Real best = -kInf;
  best = std::max(best, y > 1.0 ? kInf : x);    // x0 -> 0+ along the +1 branch
  best = std::max(best, y < -1.0 ? kInf : -x);  // x0 -> 0- along the -1 branch
  best = std::max(best, std::max(0.0, x));      // x0 = 0, y0 in [0,1]
  return best;
}

int run_fitz_demo(const ExperimentConfig& cfg, OutputSink& sink) {
  CounterRng rng(20260809);
  std::ostringstream csv;
  csv << "kind,x,y,formula,rederived,deviation,gap\n";
  Real max_dev = 0.0, max_graph_gap = 0.0, min_gap = kInf;
  const int samples = 2000;

  auto fa = RepFunction::closed_affine(2.0, 1.0);
  auto fs = RepFunction::closed_sign();
  auto fi = RepFunction::closed_identity_scaled(1.0, 1);

  for (int i = 0; i < samples; ++i) {
    const Real x = 4.0 * rng.normal(4 * i);
    const Real y = 4.0 * rng.normal(4 * i + 1);
    Vec xv(1), yv(1);
    xv[0] = x;
    yv[0] = y;

    struct Row {
      const char* kind;
      Real formula, oracle;
    };
    const Row rows[3] = {
        {"affine_2_1", fa.value(xv, yv), sup_affine_graph(2.0, 1.0, x, y)},
        {"sign", fs.value(xv, yv), sup_sign_graph(x, y)},
        {"identity", fi.value(xv, yv), sup_affine_graph(1.0, 0.0, x, y)},
    };
    for (const Row& r : rows) {
      const Real dev = (std::isinf(r.formula) && std::isinf(r.oracle))
                           ? 0.0
                           : std::abs(r.formula - r.oracle);
      const Real gap = r.formula - x * y;
      max_dev = std::max(max_dev, dev);
      min_gap = std::min(min_gap, gap);
      csv << r.kind << ',' << fmt17(x) << ',' << fmt17(y) << ',' << fmt17(r.formula) << ','
          << fmt17(r.oracle) << ',' << fmt17(dev) << ',' << fmt17(gap) << '\n';
    }
    // Graph points: equality must be exact there.
    const Real gx = 2.0 * rng.normal(4 * i + 2);
    Vec gxv(1), gyv(1);
    gxv[0] = gx;
    gyv[0] = 2.0 * gx + 1.0;
    max_graph_gap = std::max(max_graph_gap, representation_gap(fa, gxv, gyv));
    gyv[0] = gx;
    max_graph_gap = std::max(max_graph_gap, representation_gap(fi, gxv, gyv));
    gyv[0] = gx > 0 ? 1.0 : (gx < 0 ? -1.0 : 0.5);
    max_graph_gap = std::max(max_graph_gap, representation_gap(fs, gxv, gyv));
  }
  sink.write("fitz_demo.csv", csv.str());

  json summary;
  summary["samples_per_kind"] = samples;
  summary["max_deviation"] = max_dev;
  summary["max_graph_gap"] = max_graph_gap;
  summary["min_gap"] = min_gap;
  summary["pass"] = max_dev <= 1e-12 && max_graph_gap <= 1e-12 && min_gap >= -1e-12;
  sink.write("fitz_demo_summary.json", summary.dump(2) + "\n");
  (void)cfg;
  return summary["pass"].get<bool>() ? 0 : 2;
}

// ---------------------------------------------------------------------------

int run_cell_or_graph(const ExperimentConfig& cfg, OutputSink& sink,
                      std::map<std::string, Real>& timings) {
  Stopwatch watch;
  watch.start();

  std::ostringstream csv;
  const int n = cfg.grid_d;
  for (int j = 1; j <= n; ++j) csv << "xi_" << j << ',';
  for (int j = 1; j <= n; ++j) csv << "eta_" << j << ',';
  csv << "gap,N,M,seed\n";

  EffectiveGraph all_rows(n);
  bool all_certified = true;
  Real max_gap = 0.0;
  for (std::uint64_t seed : cfg.seeds) {
    CellProblem pb;
    pb.rep = *cfg.rep;
    pb.medium = *cfg.medium;
    pb.grid = PeriodicGrid::make(cfg.grid_d, cfg.grid_n);
    pb.ensemble = cfg.ensemble;
    pb.seed = seed;
    pb.knobs = cfg.cell_knobs;
    EffectiveGraph graph = tabulate_graph(pb, cfg.loads);
    for (const auto& row : graph.rows()) {
      for (Index j = 0; j < n; ++j) csv << fmt17(row.xi[j]) << ',';
      for (Index j = 0; j < n; ++j) csv << fmt17(row.eta[j]) << ',';
      csv << fmt17(row.gap) << ',' << row.n_side << ',' << row.ensemble << ',' << row.seed
          << '\n';
      all_certified = all_certified && row.certified;
      max_gap = std::max(max_gap, row.gap);
      all_rows.add_row(row);
    }
  }
  timings["tabulate"] = watch.stop();

  sink.write("graph.csv", csv.str());
  json summary;
  summary["rows"] = all_rows.rows().size();
  summary["all_certified"] = all_certified;
  summary["max_gap"] = max_gap;
  if (all_rows.rows().size() >= 2) summary["theta_eff"] = all_rows.theta_estimate();
  sink.write("graph_summary.json", summary.dump(2) + "\n");
  return all_certified ? 0 : 2;
}

int run_sweep(const ExperimentConfig& cfg, OutputSink& sink,
              std::map<std::string, Real>& timings) {
  Stopwatch watch;
  watch.start();

  SweepConfig sc;
  sc.medium = *cfg.medium;
  sc.law = *cfg.law;
  sc.rep = *cfg.rep;
  sc.cell_n_side = cfg.cell_n_side;
  sc.cell_ensemble = cfg.cell_ensemble;
  sc.graph_magnitudes = cfg.graph_magnitudes;
  sc.n_side = cfg.sweep_n_side;
  sc.inv_eps = cfg.inv_eps;
  sc.seeds = cfg.seeds;
  sc.rhs = cfg.rhs.fn(cfg.medium->d);
  sc.coarse_blocks = cfg.coarse_blocks;
  sc.max_iterations = cfg.pde_max_iterations;
  sc.residual_tol = cfg.pde_residual_tol;
  sc.cell_knobs = cfg.cell_knobs;
  sc.dump_dir = sink.dir();

  SweepReport report = epsilon_sweep(sc);
  timings["sweep"] = watch.stop();

  if (report.rows.empty()) {
    std::cerr << "sweep produced no results\n";
    return 1;
  }

  std::ostringstream csv;
  csv << "eps,seed,block_id,err_u,err_flux,divcurl_pairing\n";
  for (const auto& r : report.rows)
    csv << fmt17(r.eps) << ',' << r.seed << ',' << r.block_id << ',' << fmt17(r.err_u) << ','
        << fmt17(r.err_flux) << ',' << fmt17(r.divcurl_pairing) << '\n';
  sink.write("sweep.csv", csv.str());

  json summary;
  summary["partial"] = report.partial;
  summary["hom_seed_rel_spread"] = report.hom_seed_rel_spread;
  json per_eps = json::array();
  for (const auto& s : report.summary) {
    per_eps.push_back({{"eps", s.eps},
                       {"rel_err_u", s.rel_err_u},
                       {"rel_err_flux", s.rel_err_flux},
                       {"pairing", s.pairing},
                       {"pairing_hom", s.pairing_hom},
                       {"ok", s.ok},
                       {"note", s.note}});
  }
  summary["per_eps"] = per_eps;
  sink.write("sweep_summary.json", summary.dump(2) + "\n");
  for (const std::string& dump : report.field_dumps) sink.note_external(dump);
  return report.partial ? 2 : 0;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const std::string& out_dir) {
  OutputSink sink(out_dir);
  std::map<std::string, Real> timings;
  Stopwatch total;
  total.start();
  int code = 0;
  switch (config.kind) {
    case ExperimentKind::FitzDemo:
      code = run_fitz_demo(config, sink);
      break;
    case ExperimentKind::Cell:
    case ExperimentKind::Graph:
      code = run_cell_or_graph(config, sink, timings);
      break;
    case ExperimentKind::Sweep:
      code = run_sweep(config, sink, timings);
      break;
  }
  timings["total"] = total.stop();
  if (sink.empty()) {
    std::cerr << "no outputs produced\n";
    return 1;
  }
  sink.manifest(config.config_hash, timings);
  return code;
}

int run_config_file(const std::string& config_path, const std::string& out_dir) {
  try {
    ExperimentConfig cfg = parse_config_file(config_path);
    return run_experiment(cfg, out_dir);
  } catch (const ConfigError& ex) {
    std::cerr << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
}

int validate_config_file(const std::string& config_path) {
  try {
    parse_config_file(config_path);
    std::cout << "ok\n";
    return 0;
  } catch (const ConfigError& ex) {
    std::cerr << ex.what() << '\n';
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
}

}  // namespace effectop
