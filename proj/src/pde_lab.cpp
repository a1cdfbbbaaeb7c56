#include "effectop/pde_lab.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>

#include "effectop/parallel.hpp"
#include "effectop/spectral.hpp"

namespace effectop {

namespace {

using Eigen::ArrayXd;
using Eigen::ArrayXXd;
using Cplx = std::complex<Real>;

// ---------------------------------------------------------------------------
// Fast Poisson solve for the finite-difference Dirichlet Laplacian via DST-I.

Eigen::FFT<Real>& fft_engine() {
  thread_local Eigen::FFT<Real> fft;
  return fft;
}

// In-place DST-I along every axis of an M^d row-major array (M = N-1).
void dst_nd(int d, int N, ArrayXd& data) {
  const int M = N - 1;
  Index cells = 1;
  for (int k = 0; k < d; ++k) cells *= M;
  std::vector<Cplx> ext(2 * N), out(2 * N);
  Index stride = 1;
  for (int axis = d - 1; axis >= 0; --axis) {
    const Index nlines = cells / M;
    for (Index l = 0; l < nlines; ++l) {
      const Index pre = l / stride;
      const Index post = l % stride;
      const Index base = pre * (M * stride) + post;
      ext[0] = Cplx(0, 0);
      ext[N] = Cplx(0, 0);
      for (int t = 1; t <= M; ++t) {
        const Real v = data[base + (t - 1) * stride];
        ext[t] = Cplx(v, 0);
        ext[2 * N - t] = Cplx(-v, 0);
      }
      fft_engine().fwd(out, ext);
      for (int t = 1; t <= M; ++t) data[base + (t - 1) * stride] = -0.5 * out[t].imag();
    }
    stride *= M;
  }
}

struct DirichletPoisson {
  int d = 2, N = 4;
  ArrayXd eigenvalues;  // of the 2d+1 point stencil, interior modes, row-major

  static DirichletPoisson make(int d, int N) {
    DirichletPoisson p;
    p.d = d;
    p.N = N;
    const int M = N - 1;
    Index cells = 1;
    for (int k = 0; k < d; ++k) cells *= M;
    p.eigenvalues.resize(cells);
    for (Index c = 0; c < cells; ++c) {
      Index rest = c;
      Real lam = 0;
      for (int k = d - 1; k >= 0; --k) {
        const int i = static_cast<int>(rest % M) + 1;
        rest /= M;
        const Real s = std::sin(0.5 * M_PI * i / N);
        lam += 4.0 * s * s;
      }
      p.eigenvalues[c] = lam;
    }
    return p;
  }

  // Solve the assembled P1 Laplacian, which equals h^(d-2) times the unscaled
  // 2d+1 point stencil (exactly for d <= 2, spectrally for the Kuhn mesh).
  void solve(ArrayXd& r) const {
    dst_nd(d, N, r);
    r /= eigenvalues;
    dst_nd(d, N, r);
    const Real scale = std::pow(2.0 / N, d) * std::pow(static_cast<Real>(N), d - 2);
    r *= scale;
  }
};

// ---------------------------------------------------------------------------
// Reference simplices of the uniform mesh (Kuhn triangulation in 3-d).

struct RefElement {
  int nverts = 0;
  std::array<std::array<int, 3>, 4> off{};    // vertex offsets within the cell
  std::array<std::array<Real, 3>, 4> grad{};  // shape gradients, units of 1/h
  Real vol_frac = 1.0;                        // element volume / h^d
};

std::vector<RefElement> reference_elements(int d) {
  std::vector<RefElement> elems;
  if (d == 1) {
    RefElement e;
    e.nverts = 2;
    e.off = {{{0, 0, 0}, {1, 0, 0}}};
    e.grad = {{{-1, 0, 0}, {1, 0, 0}}};
    e.vol_frac = 1.0;
    elems.push_back(e);
  } else if (d == 2) {
    RefElement lo;
    lo.nverts = 3;
    lo.off = {{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}};
    lo.grad = {{{-1, -1, 0}, {1, 0, 0}, {0, 1, 0}}};
    lo.vol_frac = 0.5;
    RefElement hi;
    hi.nverts = 3;
    hi.off = {{{1, 0, 0}, {1, 1, 0}, {0, 1, 0}}};
    hi.grad = {{{0, -1, 0}, {1, 1, 0}, {-1, 0, 0}}};
    hi.vol_frac = 0.5;
    elems = {lo, hi};
  } else {
    // Kuhn path simplices: one per permutation of the axes.
    int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (auto& p : perms) {
      RefElement e;
      e.nverts = 4;
      std::array<int, 3> v{0, 0, 0};
      e.off[0] = v;
      for (int s = 0; s < 3; ++s) {
        v[p[s]] += 1;
        e.off[s + 1] = v;
      }
      // Consecutive edges run along distinct axes, so shape gradients are
      // differences of unit vectors.
      for (int k = 0; k < 4; ++k) e.grad[k] = {0, 0, 0};
      e.grad[0][p[0]] -= 1;
      e.grad[1][p[0]] += 1;
      e.grad[1][p[1]] -= 1;
      e.grad[2][p[1]] += 1;
      e.grad[2][p[2]] -= 1;
      e.grad[3][p[2]] += 1;
      e.vol_frac = 1.0 / 6.0;
      elems.push_back(e);
    }
  }
  return elems;
}

// ---------------------------------------------------------------------------
// Batched constitutive evaluation over element gradients.

void law_flux_batch(const MonotoneLaw& law, const ArrayXXd& G, const ArrayXd* phase,
                    ArrayXXd& F);

void law_flux_batch_plain(const MonotoneLaw& law, const ArrayXXd& G, ArrayXXd& F) {
  const Index T = G.rows();
  const Index n = G.cols();
  switch (law.kind()) {
    case LawKind::Power: {
      // a |x|^(p-2) x, vectorized over rows.
      auto [a_coeff, p_exp] = law.power_params();
      ArrayXd r2 = G.square().rowwise().sum();
      ArrayXd s(T);
      for (Index t = 0; t < T; ++t)
        s[t] = r2[t] == 0 ? (p_exp == 2.0 ? a_coeff : 0.0)
                          : a_coeff * std::pow(std::sqrt(r2[t]), p_exp - 2.0);
      F = G.colwise() * s;
      return;
    }
    default: {
      F.resize(T, n);
      Vec x(n);
      for (Index t = 0; t < T; ++t) {
        x = G.row(t).matrix().transpose();
        F.row(t) = law.select(x).transpose().array();
      }
    }
  }
}

void law_flux_batch(const MonotoneLaw& law, const ArrayXXd& G, const ArrayXd* phase,
                    ArrayXXd& F) {
  const Index T = G.rows();
  const Index n = G.cols();
  switch (law.kind()) {
    case LawKind::Affine: {
      Vec b = law.select(Vec::Zero(n));
      Mat A(n, n);
      for (Index j = 0; j < n; ++j) {
        Vec e = Vec::Zero(n);
        e[j] = 1.0;
        A.col(j) = law.select(e) - b;
      }
      F = (G.matrix() * A.transpose()).array();
      F.rowwise() += b.transpose().array();
      return;
    }
    case LawKind::TwoPhase: {
      require(phase != nullptr, "flux batch: two-phase law requires a phase field");
      auto [ka, kb] = law.phase_keys();
      ArrayXXd Fa, Fb;
      law_flux_batch(law.phase_branch(ka), G, phase, Fa);
      law_flux_batch(law.phase_branch(kb), G, phase, Fb);
      Eigen::Array<bool, Eigen::Dynamic, 1> pick_a = (*phase - ka).abs() <= (*phase - kb).abs();
      F.resize(T, n);
      for (Index j = 0; j < n; ++j) F.col(j) = pick_a.select(Fa.col(j), Fb.col(j));
      return;
    }
    default:
      law_flux_batch_plain(law, G, F);
  }
}

bool strictly_monotone(const MonotoneLaw& law) {
  switch (law.kind()) {
    case LawKind::Affine:
      return law.bounds().theta > 0;
    case LawKind::Power:
      return true;  // strictly monotone pointwise, though theta(0) = 0
    case LawKind::SignGraph:
      return false;
    case LawKind::Hall:
    case LawKind::TwoPhase: {
      if (law.kind() == LawKind::TwoPhase) {
        auto [ka, kb] = law.phase_keys();
        return strictly_monotone(law.phase_branch(ka)) &&
               strictly_monotone(law.phase_branch(kb));
      }
      return law.bounds().theta > 0 || law.strong_monotonicity_on(1.0) > 0;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// The preconditioned monotone iteration shared by the heterogeneous and the
// homogenized solves.

struct FluxOracle {
  std::function<void(const ArrayXXd&, ArrayXXd&)> apply;
  Real theta = 0.0;
  Real lipschitz = kInf;
};

struct Mesh {
  int d, N;
  Index nodes_per_side, n_nodes, n_cells;
  std::vector<RefElement> elems;
  Real h;

  Index node_index(const std::array<int, 3>& i) const {
    Index f = 0;
    for (int k = 0; k < d; ++k) f = f * nodes_per_side + i[k];
    return f;
  }
  std::array<int, 3> cell_multi(Index c) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(c % N);
      c /= N;
    }
    return idx;
  }
  bool boundary(const std::array<int, 3>& i) const {
    for (int k = 0; k < d; ++k)
      if (i[k] == 0 || i[k] == N) return true;
    return false;
  }
};

Mesh make_mesh(int d, int N) {
  Mesh m;
  m.d = d;
  m.N = N;
  m.nodes_per_side = N + 1;
  m.n_nodes = 1;
  for (int k = 0; k < d; ++k) m.n_nodes *= m.nodes_per_side;
  m.n_cells = 1;
  for (int k = 0; k < d; ++k) m.n_cells *= N;
  m.elems = reference_elements(d);
  m.h = 1.0 / N;
  return m;
}

// Element-node incidence, precomputed once.
struct Incidence {
  Index n_elements = 0;
  std::vector<Index> nodes;   // n_elements x nverts
  std::vector<Index> cell;    // element -> cell
  int nverts = 0;
};

Incidence make_incidence(const Mesh& m) {
  Incidence inc;
  const int E = static_cast<int>(m.elems.size());
  inc.n_elements = m.n_cells * E;
  inc.nverts = m.elems[0].nverts;
  inc.nodes.resize(inc.n_elements * inc.nverts);
  inc.cell.resize(inc.n_elements);
  for (Index c = 0; c < m.n_cells; ++c) {
    auto ci = m.cell_multi(c);
    for (int e = 0; e < E; ++e) {
      const Index t = c * E + e;
      inc.cell[t] = c;
      for (int k = 0; k < inc.nverts; ++k) {
        std::array<int, 3> ni{0, 0, 0};
        for (int a = 0; a < m.d; ++a) ni[a] = ci[a] + m.elems[e].off[k][a];
        inc.nodes[t * inc.nverts + k] = m.node_index(ni);
      }
    }
  }
  return inc;
}

void element_gradients(const Mesh& m, const Incidence& inc, const ArrayXd& u, ArrayXXd& G) {
  const int E = static_cast<int>(m.elems.size());
  G.resize(inc.n_elements, m.d);
  for (Index t = 0; t < inc.n_elements; ++t) {
    const RefElement& el = m.elems[t % E];
    for (int a = 0; a < m.d; ++a) {
      Real g = 0;
      for (int k = 0; k < el.nverts; ++k)
        g += u[inc.nodes[t * inc.nverts + k]] * el.grad[k][a];
      G(t, a) = g / m.h;
    }
  }
}

void assemble_residual(const Mesh& m, const Incidence& inc, const ArrayXXd& F,
                       const ArrayXd& load, ArrayXd& r) {
  const int E = static_cast<int>(m.elems.size());
  const Real hd = std::pow(m.h, m.d);
  r = -load;
  for (Index t = 0; t < inc.n_elements; ++t) {
    const RefElement& el = m.elems[t % E];
    const Real vol = el.vol_frac * hd;
    for (int k = 0; k < el.nverts; ++k) {
      Real s = 0;
      for (int a = 0; a < m.d; ++a) s += F(t, a) * el.grad[k][a];
      r[inc.nodes[t * inc.nverts + k]] += vol * s / m.h;
    }
  }
}

void extract_interior(const Mesh& m, const ArrayXd& full, ArrayXd& interior) {
  const int M = m.N - 1;
  Index cells = 1;
  for (int k = 0; k < m.d; ++k) cells *= M;
  interior.resize(cells);
  for (Index c = 0; c < cells; ++c) {
    Index rest = c;
    std::array<int, 3> ni{0, 0, 0};
    for (int k = m.d - 1; k >= 0; --k) {
      ni[k] = static_cast<int>(rest % M) + 1;
      rest /= M;
    }
    interior[c] = full[m.node_index(ni)];
  }
}

void scatter_interior(const Mesh& m, const ArrayXd& interior, ArrayXd& full) {
  const int M = m.N - 1;
  Index cells = 1;
  for (int k = 0; k < m.d; ++k) cells *= M;
  for (Index c = 0; c < cells; ++c) {
    Index rest = c;
    std::array<int, 3> ni{0, 0, 0};
    for (int k = m.d - 1; k >= 0; --k) {
      ni[k] = static_cast<int>(rest % M) + 1;
      rest /= M;
    }
    full[m.node_index(ni)] = interior[c];
  }
}

struct ScalarSolveResult {
  ArrayXd u;
  ArrayXXd grad_elem, flux_elem;
  Real weak_residual = 0;
  Real load_norm = 0;
  int iterations = 0;
  Real contraction = 0;
  Real certified = 1.0;
  std::vector<Real> energy_trace;
};

ScalarSolveResult scalar_monotone_solve(const Mesh& m, const Incidence& inc,
                                        const FluxOracle& oracle, const ArrayXd& load,
                                        int max_iterations, Real residual_tol) {
  DirichletPoisson poisson = DirichletPoisson::make(m.d, m.N);
  ScalarSolveResult out;
  out.u = ArrayXd::Zero(m.n_nodes);

  const Real hd = std::pow(m.h, m.d);
  out.load_norm = std::sqrt((load * load).sum() / hd);  // ~ ||f||_L2
  const Real stop = residual_tol * std::max(out.load_norm, 1e-300);

  // Initial preconditioned solve (exact for the identity law).
  ArrayXd r_int;
  extract_interior(m, ArrayXd(-load), r_int);
  poisson.solve(r_int);
  scatter_interior(m, ArrayXd(-r_int), out.u);

  Real tau = oracle.theta > 0 && std::isfinite(oracle.lipschitz)
                 ? oracle.theta / (oracle.lipschitz * oracle.lipschitz)
                 : 1.0 / std::max(oracle.lipschitz, 1.0);
  const bool certified_mode = oracle.theta > 0 && std::isfinite(oracle.lipschitz);
  out.certified = certified_mode
                      ? std::sqrt(std::max(0.0, 1.0 - (oracle.theta * oracle.theta) /
                                                      (oracle.lipschitz * oracle.lipschitz)))
                      : 1.0;

  ArrayXd r(m.n_nodes), e_int, r_full_int;
  ArrayXXd G, F;
  Real prev_energy = kInf;
  ArrayXd u_prev = out.u;
  // Secant data for the uncertified path (laws without a positive modulus,
  // e.g. power exponents above 2): Barzilai-Borwein steps with a bounded
  // non-monotone safeguard replace the fixed certified step.
  ArrayXd u_int(0), u_int_prev(0), e_int_prev(0);
  std::vector<Real> recent;
  int it = 0;
  for (; it < max_iterations; ++it) {
    element_gradients(m, inc, out.u, G);
    oracle.apply(G, F);
    assemble_residual(m, inc, F, load, r);
    extract_interior(m, r, r_full_int);
    // Sup over the nodal test basis of the weak-form defect.
    out.weak_residual = r_full_int.abs().maxCoeff();
    if (out.weak_residual <= stop) break;

    e_int = r_full_int;
    poisson.solve(e_int);
    const Real energy = std::sqrt(std::max(0.0, (r_full_int * e_int).sum()));

    Real bound = prev_energy;
    if (!certified_mode && !recent.empty())
      bound = 1.02 * *std::max_element(recent.begin(), recent.end());
    if (energy > bound * (1.0 + 1e-12)) {
      // Not contracting at this step size: back off and retry from the last
      // accepted iterate.
      out.u = u_prev;
      tau *= 0.5;
      u_int_prev.resize(0);
      if (tau < 1e-14) throw SolverFailure("elliptic solve: step collapsed, contraction " +
                                           std::to_string(out.contraction));
      continue;
    }
    if (prev_energy < kInf) out.contraction = energy / std::max(prev_energy, 1e-300);
    out.energy_trace.push_back(energy);
    prev_energy = energy;
    u_prev = out.u;
    recent.push_back(energy);
    if (recent.size() > 8) recent.erase(recent.begin());

    if (!certified_mode) {
      extract_interior(m, out.u, u_int);
      if (u_int_prev.size() == u_int.size()) {
        const ArrayXd du = u_int - u_int_prev;
        const ArrayXd de = e_int - e_int_prev;
        const Real denom = (du * de).sum();
        if (denom > 0) tau = std::clamp((du * du).sum() / denom, 1e-8, 1e6);
      }
      u_int_prev = u_int;
      e_int_prev = e_int;
    }

    ArrayXd e_full = ArrayXd::Zero(m.n_nodes);
    scatter_interior(m, e_int, e_full);
    out.u -= tau * e_full;
  }
  if (out.weak_residual > stop)
    throw SolverFailure("elliptic solve: no convergence after " + std::to_string(it) +
                        " iterations, contraction estimate " +
                        std::to_string(out.contraction));
  out.iterations = it;
  element_gradients(m, inc, out.u, out.grad_elem);
  oracle.apply(out.grad_elem, out.flux_elem);
  return out;
}

ArrayXd nodal_load(const Mesh& m,
                   const std::function<Real(const std::array<Real, 3>&)>& rhs) {
  require(static_cast<bool>(rhs), "elliptic problem: missing rhs");
  ArrayXd load = ArrayXd::Zero(m.n_nodes);
  const Real hd = std::pow(m.h, m.d);
  const int M = m.N - 1;
  Index cells = 1;
  for (int k = 0; k < m.d; ++k) cells *= M;
  for (Index c = 0; c < cells; ++c) {
    Index rest = c;
    std::array<int, 3> ni{0, 0, 0};
    for (int k = m.d - 1; k >= 0; --k) {
      ni[k] = static_cast<int>(rest % M) + 1;
      rest /= M;
    }
    std::array<Real, 3> x{0, 0, 0};
    for (int k = 0; k < m.d; ++k) x[k] = ni[k] * m.h;
    load[m.node_index(ni)] = hd * rhs(x);
  }
  return load;
}

// Cell averages of element quantities (the two/six elements of a cell).
ArrayXXd per_cell(const Mesh& m, const Incidence& inc, const ArrayXXd& elem_values) {
  const int E = static_cast<int>(m.elems.size());
  ArrayXXd out = ArrayXXd::Zero(m.n_cells, elem_values.cols());
  for (Index t = 0; t < inc.n_elements; ++t) out.row(inc.cell[t]) += elem_values.row(t);
  out /= E;
  return out;
}

Real estimate_range(const ArrayXXd& G) {
  const Real r = std::sqrt(G.square().rowwise().sum().maxCoeff());
  return std::max(2.0 * r, 1.0);
}

EllipticSolution run_elliptic(const EllipticProblem& pb, const FluxOracle& oracle_scalar,
                              bool check_law) {
  require(pb.d >= 1 && pb.d <= 3, "elliptic problem: d must be 1..3");
  require(pb.n_side >= 4 && (pb.n_side & (pb.n_side - 1)) == 0,
          "elliptic problem: n_side must be a power of two >= 4");
  if (check_law)
    require(strictly_monotone(pb.law),
            "elliptic problem: law must be strictly monotone (theta = 0 laws are rejected)");
  if (pb.phase.size() > 0)
    require(pb.phase.size() == static_cast<Index>(std::pow(pb.n_side, pb.d)),
            "elliptic problem: phase field must have one value per cell");

  Mesh m = make_mesh(pb.d, pb.n_side);
  Incidence inc = make_incidence(m);
  ArrayXd load = nodal_load(m, pb.rhs);

  const int components = pb.variant == EllipticProblem::Variant::Scalar ? 1 : pb.d;
  EllipticSolution sol;
  sol.d = pb.d;
  sol.n_side = pb.n_side;
  for (int comp = 0; comp < components; ++comp) {
    ScalarSolveResult r = scalar_monotone_solve(m, inc, oracle_scalar, load,
                                                pb.max_iterations, pb.residual_tol);
    sol.u.push_back(std::move(r.u));
    sol.grad.push_back(per_cell(m, inc, r.grad_elem));
    sol.flux.push_back(per_cell(m, inc, r.flux_elem));
    sol.weak_residual = std::max(sol.weak_residual, r.weak_residual);
    sol.load_norm = r.load_norm;
    sol.iterations = std::max(sol.iterations, r.iterations);
    sol.contraction_estimate = std::max(sol.contraction_estimate, r.contraction);
    sol.certified_contraction = r.certified;
    if (comp == 0) sol.energy_trace = std::move(r.energy_trace);
  }
  return sol;
}

}  // namespace

EllipticSolution solve_elliptic(const EllipticProblem& problem) {
  if (problem.variant == EllipticProblem::Variant::Vector) {
    // Supported for isotropic linear phases only: each displacement component
    // then solves an independent scalar problem with the same coefficient.
    const MonotoneLaw& law = problem.law;
    auto isotropic_affine = [](const MonotoneLaw& l) {
      if (l.kind() != LawKind::Affine) return false;
      const Index n = l.dimension();
      Vec b = l.select(Vec::Zero(n));
      Vec e0 = Vec::Zero(n);
      e0[0] = 1.0;
      const Real a00 = (l.select(e0) - b)[0];
      for (Index j = 0; j < n; ++j) {
        Vec e = Vec::Zero(n);
        e[j] = 1.0;
        Vec col = l.select(e) - b;
        for (Index i = 0; i < n; ++i) {
          const Real want = i == j ? a00 : 0.0;
          if (std::abs(col[i] - want) > 1e-12) return false;
        }
      }
      return true;
    };
    bool ok = law.kind() == LawKind::TwoPhase
                  ? isotropic_affine(law.phase_branch(law.phase_keys().first)) &&
                        isotropic_affine(law.phase_branch(law.phase_keys().second))
                  : isotropic_affine(law);
    require(ok, "elliptic problem: the vector variant supports isotropic linear phases only");
  }

  // Range-aware certificates drive the step size.
  const Real range0 = 4.0;
  Real theta = problem.law.strong_monotonicity_on(range0);
  Real lip = problem.law.lipschitz_on(range0);
  require(std::isfinite(lip),
          "elliptic problem: law must be Lipschitz on the data range (exponents >= 2)");

  const ArrayXd* phase = problem.phase.size() > 0 ? &problem.phase : nullptr;
  // Elements of one cell share its phase value.
  Eigen::ArrayXd elem_phase;
  if (phase) {
    const int E = static_cast<int>(reference_elements(problem.d).size());
    elem_phase.resize(phase->size() * E);
    for (Index c = 0; c < phase->size(); ++c)
      for (int e = 0; e < E; ++e) elem_phase[c * E + e] = (*phase)(c);
  }

  FluxOracle oracle;
  oracle.theta = theta;
  oracle.lipschitz = lip;
  oracle.apply = [&problem, &elem_phase, phase](const ArrayXXd& G, ArrayXXd& F) {
    law_flux_batch(problem.law, G, phase ? &elem_phase : nullptr, F);
  };
  return run_elliptic(problem, oracle, true);
}

EllipticSolution solve_homogenized(const EllipticProblem& problem,
                                   const EffectiveGraph& graph) {
  require(graph.dimension() == problem.d, "solve_homogenized: graph dimension mismatch");
  auto interp = graph.interpolant();
  bool extrapolated = false;
  FluxOracle oracle;
  oracle.theta = std::max(graph.theta_estimate(), 0.0);
  oracle.lipschitz = std::max(graph.lipschitz_estimate(), 1e-12);
  require(oracle.theta > 0, "solve_homogenized: tabulated graph is not strictly monotone");
  // The flag is reset per application, so it ends up describing the final
  // flux evaluation rather than transient iterates.
  oracle.apply = [&interp, &extrapolated, d = problem.d](const ArrayXXd& G, ArrayXXd& F) {
    extrapolated = false;
    F.resize(G.rows(), G.cols());
    Vec xi(d);
    for (Index t = 0; t < G.rows(); ++t) {
      xi = G.row(t).matrix().transpose();
      bool flag = false;
      F.row(t) = interp.evaluate(xi, &flag).transpose().array();
      if (flag) extrapolated = true;
    }
  };
  EllipticSolution sol = run_elliptic(problem, oracle, false);
  sol.extrapolated = extrapolated;
  return sol;
}

OhmHallSolution solve_ohmhall_torus(const OhmHallProblem& problem) {
  const PeriodicGrid& g = problem.grid;
  require(g.d == 2, "ohm-hall: 2-d torus only");
  require(problem.law.dimension() == 2, "ohm-hall: law must act on R^2");
  require(problem.source.components() == 1 && problem.source.grid() == g,
          "ohm-hall: source must be a scalar field on the torus grid");
  require(strictly_monotone(problem.law), "ohm-hall: core law must be strictly monotone");
  const Real g_mean = problem.source.mean()[0];
  require(std::abs(g_mean) <= 1e-12 * (1.0 + problem.source.values().abs().maxCoeff()),
          "ohm-hall: source must have zero mean (torus solvability)");

  const Index cells = g.cell_count();
  const Real gnorm = std::sqrt(problem.source.values().square().sum() / cells);
  const Real stop = problem.residual_tol * std::max(gnorm, 1e-300);

  DiscreteField psi(g, 1);
  ArrayXXd J(cells, 2), E(cells, 2);
  auto current = [&](const DiscreteField& p) {
    DiscreteField jp = perp_gradient(p);
    ArrayXXd out = jp.values();
    out.col(0) += problem.mean_flux[0];
    out.col(1) += problem.mean_flux[1];
    return out;
  };

  J = current(psi);
  const Real range = std::max(estimate_range(J), 2.0 * (1.0 + gnorm));
  const Real theta = problem.law.strong_monotonicity_on(range);
  const Real lip = problem.law.lipschitz_on(range);
  require(std::isfinite(lip), "ohm-hall: law must be Lipschitz on the data range");
  Real tau = theta > 0 ? theta / (lip * lip) : 0.5 / lip;

  OhmHallSolution sol;
  Real prev_res = kInf;
  DiscreteField psi_prev = psi;
  int it = 0;
  for (; it < problem.max_iterations; ++it) {
    J = current(psi);
    law_flux_batch(problem.law, J, nullptr, E);
    DiscreteField e_field = DiscreteField::from_values(g, E);
    DiscreteField curl = spectral_curl2(e_field);
    curl.values() -= problem.source.values();
    sol.residual = std::sqrt(curl.values().square().sum() / cells);
    if (sol.residual <= stop) break;
    if (sol.residual > prev_res * (1.0 + 1e-12)) {
      psi = psi_prev;
      tau *= 0.5;
      if (tau < 1e-14) throw SolverFailure("ohm-hall: step collapsed");
      continue;
    }
    prev_res = sol.residual;
    psi_prev = psi;
    DiscreteField corr = poisson_solve_torus(curl);
    psi.values() -= tau * corr.values();
  }
  if (sol.residual > stop)
    throw SolverFailure("ohm-hall: no convergence after " + std::to_string(it) + " iterations");

  sol.iterations = it;
  sol.psi = psi;
  J = current(psi);
  law_flux_batch(problem.law, J, nullptr, E);
  sol.J = DiscreteField::from_values(g, J);
  sol.E = DiscreteField::from_values(g, E);
  sol.div_J_max = spectral_divergence(sol.J).values().abs().maxCoeff();
  return sol;
}

Real divcurl_pairing(const DiscreteField& E, const DiscreteField& J, const DiscreteField& phi) {
  require(E.grid() == J.grid() && E.grid() == phi.grid(), "divcurl_pairing: grid mismatch");
  require(E.components() == J.components(), "divcurl_pairing: component mismatch");
  require(phi.components() == 1, "divcurl_pairing: phi must be scalar");
  Eigen::ArrayXd dots = (E.values() * J.values()).rowwise().sum();
  return (dots * phi.values().col(0)).sum() / static_cast<Real>(E.grid().cell_count());
}

DiscreteField cell_average_nodal(int d, int n_side, const Eigen::ArrayXd& nodal) {
  PeriodicGrid g = PeriodicGrid::make(d, n_side);
  Mesh m = make_mesh(d, n_side);
  require(nodal.size() == m.n_nodes, "cell_average_nodal: size mismatch");
  DiscreteField out(g, 1);
  const int corners = 1 << d;
  for (Index c = 0; c < m.n_cells; ++c) {
    auto ci = m.cell_multi(c);
    Real acc = 0;
    for (int mask = 0; mask < corners; ++mask) {
      std::array<int, 3> ni{0, 0, 0};
      for (int k = 0; k < d; ++k) ni[k] = ci[k] + ((mask >> k) & 1);
      acc += nodal[m.node_index(ni)];
    }
    out.values()(c, 0) = acc / corners;
  }
  return out;
}

namespace {

// Coarse-partition block id of a cell (fixed 8x8-style blocks).
int block_of(const PeriodicGrid& g, Index cell, int blocks) {
  auto idx = g.unflatten(cell);
  const int per = g.n_side / blocks;
  int b = 0;
  for (int k = 0; k < g.d; ++k) b = b * blocks + idx[k] / per;
  return b;
}

struct BlockStats {
  ArrayXd u_mean;                 // per block
  std::vector<Vec> flux_mean;     // per block
};

BlockStats block_average(const PeriodicGrid& g, const DiscreteField& u_cells,
                         const ArrayXXd& flux_cells, int blocks) {
  const int nb = static_cast<int>(std::pow(blocks, g.d));
  BlockStats st;
  st.u_mean = ArrayXd::Zero(nb);
  st.flux_mean.assign(nb, Vec::Zero(flux_cells.cols()));
  std::vector<Index> counts(nb, 0);
  for (Index c = 0; c < g.cell_count(); ++c) {
    const int b = block_of(g, c, blocks);
    st.u_mean[b] += u_cells.values()(c, 0);
    st.flux_mean[b] += flux_cells.row(c).matrix().transpose();
    ++counts[b];
  }
  for (int b = 0; b < nb; ++b) {
    st.u_mean[b] /= counts[b];
    st.flux_mean[b] /= static_cast<Real>(counts[b]);
  }
  return st;
}

DiscreteField sweep_test_function(const PeriodicGrid& g) {
  // Product of sines, normalized to unit integral.
  return sample_field(g, 1, [&](const std::array<Real, 3>& x) {
    Real v = 1.0;
    for (int k = 0; k < g.d; ++k) v *= std::sin(M_PI * x[k]) * (M_PI / 2.0);
    Vec out(1);
    out[0] = v;
    return out;
  });
}

}  // namespace

SweepReport epsilon_sweep(const SweepConfig& config) {
  require(!config.inv_eps.empty(), "sweep: need at least one epsilon");
  require(!config.seeds.empty(), "sweep: need at least one seed");
  require(config.n_side % config.coarse_blocks == 0, "sweep: blocks must divide the grid");
  int max_k = 0;
  for (int k : config.inv_eps) {
    require(k >= 4 && (k & (k - 1)) == 0, "sweep: 1/eps values must be powers of two >= 4");
    require(config.n_side / k >= 8, "sweep: every medium period must span >= 8 solver cells");
    max_k = std::max(max_k, k);
  }

  const int d = config.medium.d;
  SweepReport report;
  PeriodicGrid solver_grid = PeriodicGrid::make(d, config.n_side);
  DiscreteField phi = sweep_test_function(solver_grid);
  const int nb = static_cast<int>(std::pow(config.coarse_blocks, d));

  // Across-seed homogenized block averages for the uniqueness surrogate.
  std::vector<ArrayXd> hom_blocks_per_seed;

  struct EpsAccum {
    Real err_u = 0, err_flux = 0, pairing = 0, pairing_hom = 0;
    int count = 0;
    bool ok = true;
    std::string note;
  };
  std::vector<EpsAccum> accum(config.inv_eps.size());

  for (std::uint64_t seed : config.seeds) {
    CounterRng rng(seed);

    // Effective graph for this seed's ensemble.
    CellProblem cp;
    cp.rep = config.rep;
    cp.medium = config.medium;
    cp.grid = PeriodicGrid::make(d, config.cell_n_side);
    cp.ensemble = config.cell_ensemble;
    cp.seed = rng.fork(0x6aff).seed();
    cp.knobs = config.cell_knobs;
    std::vector<Vec> loads;
    loads.push_back(Vec::Zero(d));
    for (int j = 0; j < d; ++j)
      for (Real t : config.graph_magnitudes)
        for (Real s : {-1.0, 1.0}) {
          Vec xi = Vec::Zero(d);
          xi[j] = s * t;
          loads.push_back(xi);
        }
    EffectiveGraph graph = tabulate_graph(cp, loads);

    EllipticProblem hom;
    hom.d = d;
    hom.n_side = config.n_side;
    hom.rhs = config.rhs;
    hom.max_iterations = config.max_iterations;
    hom.residual_tol = config.residual_tol;
    EllipticSolution hom_sol = solve_homogenized(hom, graph);
    DiscreteField hom_u = cell_average_nodal(d, config.n_side, hom_sol.u[0]);
    if (!config.dump_dir.empty()) {
      const std::string path = config.dump_dir + "/u_hom_seed" + std::to_string(seed) + ".field";
      write_field_file(path, hom_u);
      report.field_dumps.push_back(path);
    }
    BlockStats hom_blocks = block_average(solver_grid, hom_u, hom_sol.flux[0],
                                          config.coarse_blocks);
    hom_blocks_per_seed.push_back(hom_blocks.u_mean);
    DiscreteField hom_grad = DiscreteField::from_values(solver_grid, hom_sol.grad[0]);
    DiscreteField hom_flux = DiscreteField::from_values(solver_grid, hom_sol.flux[0]);
    const Real pairing_hom = divcurl_pairing(hom_grad, hom_flux, phi);

    // One realization window shared by every epsilon of this seed.
    PeriodicGrid medium_grid = PeriodicGrid::make(d, max_k);
    Realization window = sample_realization(config.medium, rng.fork(0xe5).seed(), medium_grid);

    for (std::size_t ei = 0; ei < config.inv_eps.size(); ++ei) {
      const int k = config.inv_eps[ei];
      EpsAccum& acc = accum[ei];
      try {
        Eigen::ArrayXd phase(solver_grid.cell_count());
        for (Index c = 0; c < solver_grid.cell_count(); ++c) {
          auto x = solver_grid.center(c);
          std::array<Real, 3> p{0, 0, 0};
          for (int a = 0; a < d; ++a) p[a] = x[a] * k;
          phase[c] = realization_value_at(window, p);
        }
        EllipticProblem ep;
        ep.d = d;
        ep.n_side = config.n_side;
        ep.law = config.law;
        ep.phase = phase;
        ep.rhs = config.rhs;
        ep.max_iterations = config.max_iterations;
        ep.residual_tol = config.residual_tol;
        EllipticSolution es = solve_elliptic(ep);

        DiscreteField eps_u = cell_average_nodal(d, config.n_side, es.u[0]);
        if (!config.dump_dir.empty()) {
          const std::string path = config.dump_dir + "/u_inv" + std::to_string(k) + "_seed" +
                                   std::to_string(seed) + ".field";
          write_field_file(path, eps_u);
          report.field_dumps.push_back(path);
        }
        BlockStats eps_blocks = block_average(solver_grid, eps_u, es.flux[0],
                                              config.coarse_blocks);
        DiscreteField eps_grad = DiscreteField::from_values(solver_grid, es.grad[0]);
        DiscreteField eps_flux = DiscreteField::from_values(solver_grid, es.flux[0]);
        const Real pairing = divcurl_pairing(eps_grad, eps_flux, phi);

        Real err_u2 = 0, ref_u2 = 0, err_f2 = 0, ref_f2 = 0;
        for (int b = 0; b < nb; ++b) {
          const Real du = eps_blocks.u_mean[b] - hom_blocks.u_mean[b];
          const Real df = (eps_blocks.flux_mean[b] - hom_blocks.flux_mean[b]).norm();
          err_u2 += du * du;
          ref_u2 += hom_blocks.u_mean[b] * hom_blocks.u_mean[b];
          err_f2 += df * df;
          ref_f2 += hom_blocks.flux_mean[b].squaredNorm();
          report.rows.push_back({1.0 / k, seed, b, std::abs(du), df, pairing});
        }
        acc.err_u += std::sqrt(err_u2 / std::max(ref_u2, 1e-300));
        acc.err_flux += std::sqrt(err_f2 / std::max(ref_f2, 1e-300));
        acc.pairing += pairing;
        acc.pairing_hom += pairing_hom;
        acc.count += 1;
      } catch (const SolverFailure& ex) {
        acc.ok = false;
        acc.note = ex.what();
        report.partial = true;
      }
    }
  }

  for (std::size_t ei = 0; ei < config.inv_eps.size(); ++ei) {
    EpsSummary s;
    s.eps = 1.0 / config.inv_eps[ei];
    s.ok = accum[ei].ok;
    s.note = accum[ei].note;
    if (accum[ei].count > 0) {
      s.rel_err_u = accum[ei].err_u / accum[ei].count;
      s.rel_err_flux = accum[ei].err_flux / accum[ei].count;
      s.pairing = accum[ei].pairing / accum[ei].count;
      s.pairing_hom = accum[ei].pairing_hom / accum[ei].count;
    }
    report.summary.push_back(s);
  }

  // Across-seed relative spread of the homogenized block averages.
  if (hom_blocks_per_seed.size() >= 2) {
    ArrayXd mean = ArrayXd::Zero(nb);
    for (const auto& q : hom_blocks_per_seed) mean += q;
    mean /= static_cast<Real>(hom_blocks_per_seed.size());
    Real spread = 0;
    const Real ref = std::sqrt((mean * mean).sum());
    for (const auto& q : hom_blocks_per_seed)
      spread = std::max(spread, std::sqrt(((q - mean) * (q - mean)).sum()) / ref);
    report.hom_seed_rel_spread = spread;
  }
  return report;
}

}  // namespace effectop
