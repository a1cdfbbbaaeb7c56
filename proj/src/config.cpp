#include "effectop/config.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>

namespace effectop {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Object view that tracks key consumption; leftovers are config errors.
class Block {
 public:
  Block(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const std::string& key) {
    if (j_.contains(key)) {
      consumed_.insert(key);
      return true;
    }
    return false;
  }

  const json& at(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(join(key) + ": required");
    consumed_.insert(key);
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    try {
      return at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(join(key) + ": wrong type");
    }
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    return get<T>(key);
  }

  void finish() {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!consumed_.count(it.key())) throw ConfigError(join(it.key()) + ": unknown key");
  }

  std::string join(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

Vec to_vec(const json& j, const std::string& where) {
  if (j.is_number()) {
    Vec v(1);
    v[0] = j.get<Real>();
    return v;
  }
  if (!j.is_array()) throw ConfigError(where + ": expected number or array");
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<Real>();
  return v;
}

Mat to_mat(const json& j, const std::string& where) {
  if (j.is_number()) {
    Mat m(1, 1);
    m(0, 0) = j.get<Real>();
    return m;
  }
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ConfigError(where + ": expected number or matrix (array of rows)");
  Mat m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size()) throw ConfigError(where + ": ragged matrix");
    for (std::size_t k = 0; k < j[i].size(); ++k) m(i, k) = j[i][k].get<Real>();
  }
  return m;
}

}  // namespace

MonotoneLaw parse_law(const json& doc) {
  Block b(doc, "law");
  const std::string kind = b.get<std::string>("kind");
  if (kind == "affine") {
    Mat A = to_mat(b.at("A"), "law.A");
    Vec bb = b.has("b") ? to_vec(b.at("b"), "law.b") : Vec(Vec::Zero(A.rows()));
    b.finish();
    return MonotoneLaw::affine(std::move(A), std::move(bb));
  }
  if (kind == "power") {
    const Real a = b.get<Real>("a");
    const Real p = b.get<Real>("p");
    const int dim = b.get_or<int>("dim", 1);
    b.finish();
    return MonotoneLaw::power(a, p, dim);
  }
  if (kind == "sign") {
    const bool maximalize = b.get_or<bool>("maximalize", false);
    b.finish();
    return MonotoneLaw::sign_graph(maximalize);
  }
  if (kind == "hall") {
    MonotoneLaw core = parse_law(b.at("core"));
    const Real h = b.get<Real>("hall_coeff");
    Vec B3 = to_vec(b.at("induction"), "law.induction");
    if (B3.size() != 3) throw ConfigError("law.induction: expected 3 components");
    Vec applied = b.has("applied") ? to_vec(b.at("applied"), "law.applied")
                                   : Vec(Vec::Zero(core.dimension()));
    b.finish();
    return MonotoneLaw::hall(core, h, Eigen::Vector3d(B3[0], B3[1], B3[2]), applied);
  }
  if (kind == "two_phase") {
    MonotoneLaw la = parse_law(b.at("law_a"));
    MonotoneLaw lb = parse_law(b.at("law_b"));
    auto keys = b.get<std::vector<Real>>("keys");
    if (keys.size() != 2) throw ConfigError("law.keys: expected two phase keys");
    b.finish();
    return MonotoneLaw::two_phase(la, lb, keys[0], keys[1]);
  }
  if (kind == "two_phase_linear") {
    auto values = b.get<std::vector<Real>>("values");
    if (values.size() != 2) throw ConfigError("law.values: expected two phase values");
    const int dim = b.get_or<int>("dim", 1);
    b.finish();
    auto iso = [dim](Real a) {
      return MonotoneLaw::affine(Mat(a * Mat::Identity(dim, dim)), Vec(Vec::Zero(dim)));
    };
    return MonotoneLaw::two_phase(iso(values[0]), iso(values[1]), values[0], values[1]);
  }
  throw ConfigError("law.kind: unknown value '" + kind + "'");
}

RepFunction parse_rep(const json& doc) {
  Block b(doc, "rep");
  const std::string kind = b.get<std::string>("kind");
  std::optional<RepFunction> out;
  if (kind == "closed_affine") {
    Vec a = to_vec(b.at("a"), "rep.a");
    Vec bb = b.has("b") ? to_vec(b.at("b"), "rep.b") : Vec(Vec::Zero(a.size()));
    out = RepFunction::closed_affine(a, bb);
  } else if (kind == "closed_sign") {
    out = RepFunction::closed_sign();
  } else if (kind == "closed_identity_scaled") {
    out = RepFunction::closed_identity_scaled(b.get<Real>("a"), b.get_or<int>("dim", 1));
  } else if (kind == "closed_fenchel") {
    out = RepFunction::closed_fenchel(to_vec(b.at("a"), "rep.a"));
  } else if (kind == "generic_sup") {
    MonotoneLaw law = parse_law(b.at("law"));
    out = RepFunction::generic_sup(law, b.get_or<int>("samples", 256),
                                   b.get<std::uint64_t>("seed"), b.get_or<Real>("radius", 2.0));
  } else if (kind == "two_phase") {
    RepFunction fa = parse_rep(b.at("f_a"));
    RepFunction fb = parse_rep(b.at("f_b"));
    auto keys = b.get<std::vector<Real>>("keys");
    if (keys.size() != 2) throw ConfigError("rep.keys: expected two phase keys");
    out = RepFunction::two_phase(fa, fb, keys[0], keys[1]);
  } else if (kind == "two_phase_linear") {
    auto values = b.get<std::vector<Real>>("values");
    if (values.size() != 2) throw ConfigError("rep.values: expected two phase values");
    const int dim = b.get_or<int>("dim", 1);
    const std::string variant = b.get_or<std::string>("variant", "fitzpatrick");
    auto make = [&](Real a) {
      return variant == "fenchel" ? RepFunction::closed_fenchel(a, dim)
                                  : RepFunction::closed_identity_scaled(a, dim);
    };
    if (variant != "fitzpatrick" && variant != "fenchel")
      throw ConfigError("rep.variant: expected 'fitzpatrick' or 'fenchel'");
    out = RepFunction::two_phase(make(values[0]), make(values[1]), values[0], values[1]);
  } else {
    throw ConfigError("rep.kind: unknown value '" + kind + "'");
  }
  if (b.has("exponents")) {
    auto pq = b.at("exponents").get<std::vector<Real>>();
    if (pq.size() != 2) throw ConfigError("rep.exponents: expected [p, q]");
    out = out->with_exponents(pq[0], pq[1]);
  }
  if (b.has("coercivity")) {
    Block c(b.at("coercivity"), "rep.coercivity");
    CoercivityCert cert;
    cert.c = c.get<Real>("c");
    cert.kbar = c.get<Real>("kbar");
    cert.radius = c.get_or<Real>("radius", 10.0);
    c.finish();
    out = out->with_coercivity(cert);
  }
  b.finish();
  return *out;
}

MediumSpec parse_medium(const json& doc) {
  Block b(doc, "medium");
  MediumSpec spec;
  const std::string kind = b.get<std::string>("kind");
  spec.d = b.get<int>("d");
  if (kind == "constant") {
    spec.kind = MediumSpec::Kind::Constant;
    spec.value = b.get<Real>("value");
  } else if (kind == "layered" || kind == "checkerboard") {
    spec.kind = kind == "layered" ? MediumSpec::Kind::Layered : MediumSpec::Kind::Checkerboard;
    if (kind == "layered") spec.axis = b.get_or<int>("axis", 0);
    auto values = b.get<std::vector<Real>>("values");
    if (values.size() != 2) throw ConfigError("medium.values: expected two phase values");
    spec.values = {values[0], values[1]};
    auto probs = b.get_or<std::vector<Real>>("probabilities", {0.5, 0.5});
    if (probs.size() != 2) throw ConfigError("medium.probabilities: expected two entries");
    spec.probs = {probs[0], probs[1]};
  } else if (kind == "iid_cells") {
    spec.kind = MediumSpec::Kind::IidCells;
    Block d(b.at("distribution"), "medium.distribution");
    const std::string dk = d.get<std::string>("kind");
    if (dk == "two_point") {
      spec.dist.kind = CellDistribution::Kind::TwoPoint;
      spec.dist.a = d.get<Real>("a");
      spec.dist.b = d.get<Real>("b");
      spec.dist.prob_b = d.get<Real>("prob_b");
    } else if (dk == "uniform") {
      spec.dist.kind = CellDistribution::Kind::Uniform;
      spec.dist.a = d.get<Real>("lo");
      spec.dist.b = d.get<Real>("hi");
    } else {
      throw ConfigError("medium.distribution.kind: unknown value '" + dk + "'");
    }
    d.finish();
  } else {
    throw ConfigError("medium.kind: unknown value '" + kind + "'");
  }
  b.finish();
  spec.validate();
  return spec;
}

std::function<Real(const std::array<Real, 3>&)> RhsSpec::fn(int d) const {
  if (kind == Kind::Constant) {
    const Real v = value;
    return [v](const std::array<Real, 3>&) { return v; };
  }
  const Real amp = value;
  return [amp, d](const std::array<Real, 3>& x) {
    Real s = amp;
    for (int k = 0; k < d; ++k) s *= std::sin(M_PI * x[k]);
    return s;
  };
}

ExperimentConfig parse_config(const json& doc) {
  Block b(doc, "");
  ExperimentConfig cfg;
  cfg.config_hash = fnv1a(doc.dump());

  const std::string kind = b.get<std::string>("experiment");
  if (kind == "fitz-demo")
    cfg.kind = ExperimentKind::FitzDemo;
  else if (kind == "cell")
    cfg.kind = ExperimentKind::Cell;
  else if (kind == "graph")
    cfg.kind = ExperimentKind::Graph;
  else if (kind == "sweep")
    cfg.kind = ExperimentKind::Sweep;
  else
    throw ConfigError("experiment: unknown value '" + kind + "'");

  if (b.has("law")) cfg.law = parse_law(b.at("law"));
  if (b.has("rep")) cfg.rep = parse_rep(b.at("rep"));
  if (b.has("medium")) cfg.medium = parse_medium(b.at("medium"));

  if (cfg.kind != ExperimentKind::FitzDemo) {
    Block g(b.at("grid"), "grid");
    cfg.grid_d = g.get<int>("d");
    cfg.grid_n = g.get<int>("n");
    cfg.ensemble = g.get_or<int>("ensemble", 8);
    cfg.seeds = g.get<std::vector<std::uint64_t>>("seeds");
    if (cfg.seeds.empty()) throw ConfigError("grid.seeds: at least one explicit seed required");
    g.finish();
    if (!cfg.medium) throw ConfigError("medium: required");
    if (!cfg.rep && cfg.kind != ExperimentKind::Sweep) throw ConfigError("rep: required");
  }

  if (b.has("solver")) {
    Block s(b.at("solver"), "solver");
    cfg.cell_knobs.max_iterations = s.get_or<int>("max_iterations", 6000);
    cfg.cell_knobs.gap_tol = s.get_or<Real>("gap_tol", 1e-7);
    cfg.cell_knobs.objective_decrease_tol = s.get_or<Real>("objective_tol", 1e-10);
    const std::string orient = s.get_or<std::string>("orientation", "gradient_to_flux");
    if (orient == "gradient_to_flux")
      cfg.cell_knobs.orientation = CellOrientation::GradientToFlux;
    else if (orient == "flux_to_gradient")
      cfg.cell_knobs.orientation = CellOrientation::FluxToGradient;
    else
      throw ConfigError("solver.orientation: unknown value '" + orient + "'");
    cfg.pde_max_iterations = s.get_or<int>("pde_max_iterations", 50000);
    cfg.pde_residual_tol = s.get_or<Real>("pde_residual_tol", 1e-8);
    s.finish();
  }

  if (cfg.kind == ExperimentKind::Cell || cfg.kind == ExperimentKind::Graph) {
    if (b.has("loads")) {
      for (const auto& row : b.at("loads")) cfg.loads.push_back(to_vec(row, "loads[]"));
    } else if (b.has("load_magnitudes")) {
      auto mags = b.at("load_magnitudes").get<std::vector<Real>>();
      cfg.loads.push_back(Vec::Zero(cfg.grid_d));
      for (int j = 0; j < cfg.grid_d; ++j)
        for (Real t : mags)
          for (Real s : {-1.0, 1.0}) {
            Vec xi = Vec::Zero(cfg.grid_d);
            xi[j] = s * t;
            cfg.loads.push_back(xi);
          }
    } else {
      throw ConfigError("loads: required (or load_magnitudes)");
    }
    for (const Vec& xi : cfg.loads)
      if (xi.size() != cfg.grid_d) throw ConfigError("loads: entry dimension mismatch");
  }

  if (cfg.kind == ExperimentKind::Sweep) {
    if (!cfg.law) throw ConfigError("law: required");
    if (!cfg.rep) throw ConfigError("rep: required");
    Block s(b.at("sweep"), "sweep");
    cfg.inv_eps = s.get<std::vector<int>>("inv_eps");
    cfg.sweep_n_side = s.get_or<int>("n_side", 256);
    cfg.coarse_blocks = s.get_or<int>("coarse_blocks", 8);
    cfg.cell_n_side = s.get_or<int>("cell_n", 128);
    cfg.cell_ensemble = s.get_or<int>("cell_ensemble", 8);
    cfg.graph_magnitudes = s.get_or<std::vector<Real>>("graph_magnitudes", {1.0, 4.0});
    Block r(s.at("rhs"), "sweep.rhs");
    const std::string rk = r.get<std::string>("kind");
    if (rk == "constant") {
      cfg.rhs.kind = RhsSpec::Kind::Constant;
      cfg.rhs.value = r.get<Real>("value");
    } else if (rk == "sin_product") {
      cfg.rhs.kind = RhsSpec::Kind::SinProduct;
      cfg.rhs.value = r.get<Real>("amplitude");
    } else {
      throw ConfigError("sweep.rhs.kind: unknown value '" + rk + "'");
    }
    r.finish();
    s.finish();
  }

  b.finish();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("config is not valid JSON: ") + ex.what());
  }
  return parse_config(doc);
}

}  // namespace effectop
