#include "effectop/scale_integration.hpp"

#include <algorithm>
#include <cmath>

#include "effectop/parallel.hpp"
#include "effectop/spectral.hpp"

namespace effectop {

namespace {

using Eigen::ArrayXd;
using Eigen::ArrayXXd;
using FieldSet = std::vector<ArrayXXd>;  // one (cells x d) array per realization

// ---------------------------------------------------------------------------
// Batched evaluation of a representative function over a whole realization.
// Returns the SUM over cells of f; fills pointwise gradients when asked.

struct QuadParams {
  // f per component: (v - b + a u)^2/(4a) + b u   (affine / identity forms)
  // or the Fenchel form a u^2/2 + v^2/(2a).
  Vec a, b;
  bool fenchel = false;
};

QuadParams quad_params(const RepFunction& rep) {
  QuadParams p;
  p.a = rep.quad_slope();
  p.b = rep.quad_offset();
  p.fenchel = rep.kind() == RepKind::ClosedFenchel;
  return p;
}

void quad_eval(const QuadParams& p, const ArrayXXd& U, const ArrayXXd& V, bool want_grad,
               ArrayXd& val, ArrayXXd* Gu, ArrayXXd* Gv) {
  const Index cells = U.rows();
  const Index n = U.cols();
  val = ArrayXd::Zero(cells);
  if (want_grad) {
    Gu->resize(cells, n);
    Gv->resize(cells, n);
  }
  for (Index j = 0; j < n; ++j) {
    const Real a = p.a[j];
    const Real b = p.b[j];
    if (p.fenchel) {
      val += 0.5 * a * U.col(j).square() + 0.5 / a * V.col(j).square();
      if (want_grad) {
        Gu->col(j) = a * U.col(j);
        Gv->col(j) = V.col(j) / a;
      }
    } else {
      ArrayXd r = V.col(j) - b + a * U.col(j);
      val += r.square() / (4.0 * a) + b * U.col(j);
      if (want_grad) {
        Gu->col(j) = 0.5 * r + b;
        Gv->col(j) = r / (2.0 * a);
      }
    }
  }
}

// Sum over cells of f(U, V, phase), with optional pointwise gradients and
// optional per-cell values.  Fast paths cover the quadratic kinds and their
// two-phase combinations; everything else goes through the scalar interface.
Real rep_batch(const RepFunction& rep, const ArrayXXd& U, const ArrayXXd& V,
               const ArrayXd* phase, bool want_grad, ArrayXXd* Gu, ArrayXXd* Gv,
               ArrayXd* cell_values = nullptr) {
  const Index cells = U.rows();
  const Index n = U.cols();
  switch (rep.kind()) {
    case RepKind::ClosedAffine:
    case RepKind::ClosedIdentityScaled:
    case RepKind::ClosedFenchel: {
      ArrayXd val;
      quad_eval(quad_params(rep), U, V, want_grad, val, Gu, Gv);
      if (cell_values) *cell_values = val;
      return val.sum();
    }
    case RepKind::TwoPhase: {
      RepFunction fa = rep.phase_branch(rep.phase_keys().first);
      RepFunction fb = rep.phase_branch(rep.phase_keys().second);
      if (fa.smooth() && fb.smooth() && fa.kind() != RepKind::TwoPhase &&
          fb.kind() != RepKind::TwoPhase && phase) {
        auto [ka, kb] = rep.phase_keys();
        ArrayXd va, vb;
        ArrayXXd Gua, Gva, Gub, Gvb;
        quad_eval(quad_params(fa), U, V, want_grad, va, &Gua, &Gva);
        quad_eval(quad_params(fb), U, V, want_grad, vb, &Gub, &Gvb);
        Eigen::Array<bool, Eigen::Dynamic, 1> pick_a =
            (*phase - ka).abs() <= (*phase - kb).abs();
        ArrayXd val = pick_a.select(va, vb);
        if (want_grad) {
          Gu->resize(cells, n);
          Gv->resize(cells, n);
          for (Index j = 0; j < n; ++j) {
            Gu->col(j) = pick_a.select(Gua.col(j), Gub.col(j));
            Gv->col(j) = pick_a.select(Gva.col(j), Gvb.col(j));
          }
        }
        if (cell_values) *cell_values = val;
        return val.sum();
      }
      break;  // fall through to the scalar path
    }
    default:
      break;
  }

  // Scalar path (generic-sup, sign, nested kinds).
  Real sum = 0.0;
  if (want_grad) {
    Gu->resize(cells, n);
    Gv->resize(cells, n);
  }
  if (cell_values) cell_values->resize(cells);
  Vec x(n), y(n), gx(n), gy(n);
  for (Index c = 0; c < cells; ++c) {
    x = U.row(c).matrix().transpose();
    y = V.row(c).matrix().transpose();
    std::optional<Real> ph;
    if (phase) ph = (*phase)(c);
    Real f;
    if (want_grad && rep.kind() != RepKind::ClosedSign) {
      f = rep.value_with_gradient(x, y, ph, gx, gy);
      Gu->row(c) = gx.transpose().array();
      Gv->row(c) = gy.transpose().array();
    } else {
      f = rep.value(x, y, ph);
      if (want_grad) {
        // Subgradient of |x| with the y-box handled by projection outside.
        Gu->row(c) = x.array().sign();
        Gv->row(c) = ArrayXd::Zero(n).transpose();
      }
    }
    if (cell_values) (*cell_values)(c) = f;
    sum += f;
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Constraint-space projections.
//
// Input class (carries xi): per realization a zero-mean fluctuation of one
// Helmholtz type plus a per-realization constant; the constants average to
// zero over the ensemble.  Output class (carries eta): per realization a
// zero-mean fluctuation of the complementary type; the shared mean is either
// pinned (f0_eval) or a free variable (alpha0_eval).

struct Workspace {
  const CellProblem* pb = nullptr;
  PeriodicGrid grid;
  int M = 1;
  Index cells = 0, n = 0;
  std::vector<ArrayXd> phase;  // per realization
  bool xi_on_potential = true;

  DiscreteField wrap(const ArrayXXd& a) const {
    return DiscreteField::from_values(grid, a);
  }
};

void project_input_directions(const Workspace& ws, FieldSet& G) {
  std::vector<Vec> means(ws.M);
  for (int m = 0; m < ws.M; ++m) means[m] = ws.wrap(G[m]).mean();
  Vec shared = Vec::Zero(ws.n);
  for (const Vec& mu : means) shared += mu;
  shared /= ws.M;
  parallel_for(ws.M, [&](int m) {
    DiscreteField proj = ws.xi_on_potential ? project_potential_zero_mean(ws.wrap(G[m]))
                                            : project_solenoidal_zero_mean(ws.wrap(G[m]));
    G[m] = proj.values();
    G[m].rowwise() += (means[m] - shared).transpose().array();
  });
}

void project_output_directions(const Workspace& ws, FieldSet& G, bool eta_free) {
  Vec shared = Vec::Zero(ws.n);
  if (eta_free) {
    for (int m = 0; m < ws.M; ++m) shared += ws.wrap(G[m]).mean();
    shared /= ws.M;
  }
  parallel_for(ws.M, [&](int m) {
    DiscreteField proj = ws.xi_on_potential ? project_solenoidal_zero_mean(ws.wrap(G[m]))
                                            : project_potential_zero_mean(ws.wrap(G[m]));
    G[m] = proj.values();
    if (eta_free) G[m].rowwise() += shared.transpose().array();
  });
}

Real ensemble_dot(const Workspace& ws, const FieldSet& A, const FieldSet& B) {
  Real s = 0.0;
  for (int m = 0; m < ws.M; ++m) s += (A[m] * B[m]).sum();
  return s / (static_cast<Real>(ws.M) * static_cast<Real>(ws.cells));
}

Vec ensemble_mean(const Workspace& ws, const FieldSet& A) {
  Vec mu = Vec::Zero(ws.n);
  for (int m = 0; m < ws.M; ++m) mu += ws.wrap(A[m]).mean();
  return mu / ws.M;
}

struct Objective {
  Real value = 0.0;      // avg f  (without the -xi.eta term)
  Real lagrangian = 0.0; // avg f - xi.eta when eta is free, else equals value_offset
};

// Evaluate avg f (and the descent objective) with optional gradients.
Objective evaluate(const Workspace& ws, const FieldSet& U, const FieldSet& V, const Vec& xi,
                   bool eta_free, bool want_grad, FieldSet* Gu, FieldSet* Gv) {
  std::vector<Real> parts(ws.M);
  parallel_for(ws.M, [&](int m) {
    parts[m] = rep_batch(ws.pb->rep, U[m], V[m], ws.phase.empty() ? nullptr : &ws.phase[m],
                         want_grad, want_grad ? &(*Gu)[m] : nullptr,
                         want_grad ? &(*Gv)[m] : nullptr);
  });
  Real sum = 0.0;
  for (Real p : parts) sum += p;
  Objective obj;
  obj.value = sum / (static_cast<Real>(ws.M) * static_cast<Real>(ws.cells));
  obj.lagrangian = obj.value;
  if (eta_free) {
    const Vec eta = ensemble_mean(ws, V);
    obj.lagrangian -= xi.dot(eta);
    if (want_grad)
      for (int m = 0; m < ws.M; ++m) (*Gv)[m].rowwise() -= xi.transpose().array();
  }
  return obj;
}

bool rep_is_smooth_for_descent(const RepFunction& rep) { return rep.smooth(); }

CellSolution solve_cell(const CellProblem& pb, const Vec& xi, const Vec* eta_fixed) {
  require(pb.rep.coercivity().has_value(),
          "cell problem: representative lacks a coercivity certificate");
  require(pb.medium.d == pb.grid.d, "cell problem: medium/grid dimension mismatch");
  require(pb.rep.dimension() == pb.grid.d, "cell problem: representative dimension must equal d");
  require(xi.size() == pb.grid.d, "cell problem: load size mismatch");
  require(pb.ensemble >= 1, "cell problem: ensemble must be nonempty");

  Workspace ws;
  ws.pb = &pb;
  ws.grid = pb.grid;
  ws.M = pb.ensemble;
  ws.cells = pb.grid.cell_count();
  ws.n = pb.grid.d;
  ws.xi_on_potential = pb.knobs.orientation == CellOrientation::GradientToFlux;
  auto media = problem_ensemble(pb);
  ws.phase.resize(ws.M);
  for (int m = 0; m < ws.M; ++m) ws.phase[m] = media[m].coefficients.values().col(0);

  const bool eta_free = eta_fixed == nullptr;
  const Vec eta0 = eta_free ? Vec(Vec::Zero(ws.n)) : *eta_fixed;

  FieldSet U(ws.M), V(ws.M), Gu(ws.M), Gv(ws.M);
  for (int m = 0; m < ws.M; ++m) {
    U[m] = ArrayXXd::Zero(ws.cells, ws.n);
    U[m].rowwise() = xi.transpose().array();
    V[m] = ArrayXXd::Zero(ws.cells, ws.n);
    V[m].rowwise() = eta0.transpose().array();
  }

  const bool smooth = rep_is_smooth_for_descent(pb.rep);
  const Real tol = pb.knobs.objective_decrease_tol;

  CellSolution sol;
  sol.xi = xi;

  Objective obj = evaluate(ws, U, V, xi, eta_free, true, &Gu, &Gv);
  project_input_directions(ws, Gu);
  project_output_directions(ws, Gv, eta_free);
  sol.objective_trace.push_back(obj.lagrangian);

  FieldSet pU, pV, pGu, pGv;  // previous iterate and gradient (BB)
  Real t = 1.0;
  int stall = 0;
  int it = 0;
  for (; it < pb.knobs.max_iterations; ++it) {
    const Real g2 = ensemble_dot(ws, Gu, Gu) + ensemble_dot(ws, Gv, Gv);
    if (g2 <= 1e-26 * std::max(1.0, obj.lagrangian * obj.lagrangian)) break;

    if (smooth) {
      if (it > 0) {
        // Barzilai-Borwein step from the projected-gradient secant pair.
        Real ss = 0.0, sy = 0.0;
        for (int m = 0; m < ws.M; ++m) {
          ss += ((U[m] - pU[m]) * (U[m] - pU[m])).sum() + ((V[m] - pV[m]) * (V[m] - pV[m])).sum();
          sy += ((U[m] - pU[m]) * (Gu[m] - pGu[m])).sum() +
                ((V[m] - pV[m]) * (Gv[m] - pGv[m])).sum();
        }
        t = sy > 0 ? std::clamp(ss / sy, 1e-12, 1e8) : 1.0;
      }
      pU = U;
      pV = V;
      pGu = Gu;
      pGv = Gv;

      // Backtracking keeps the accepted objective sequence non-increasing.
      FieldSet Un(ws.M), Vn(ws.M);
      Objective next;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        for (int m = 0; m < ws.M; ++m) {
          Un[m] = U[m] - t * Gu[m];
          Vn[m] = V[m] - t * Gv[m];
        }
        next = evaluate(ws, Un, Vn, xi, eta_free, false, nullptr, nullptr);
        if (next.lagrangian <= obj.lagrangian - 1e-4 * t * g2) {
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;  // no descent direction left at machine precision
      U.swap(Un);
      V.swap(Vn);
      const Real prev = obj.lagrangian;
      obj = evaluate(ws, U, V, xi, eta_free, true, &Gu, &Gv);
      project_input_directions(ws, Gu);
      project_output_directions(ws, Gv, eta_free);
      sol.objective_trace.push_back(obj.lagrangian);
      if (prev - obj.lagrangian <= tol * std::max(1.0, std::abs(obj.lagrangian))) {
        if (++stall >= 2) {
          ++it;
          break;
        }
      } else {
        stall = 0;
      }
    } else {
      // Diminishing-step projected subgradient for the nonsmooth kinds; the
      // trace records the best value seen, which is non-increasing.
      const Real step = 0.5 / ((1.0 + std::sqrt(static_cast<Real>(it))) * std::sqrt(g2 + 1e-30));
      FieldSet Un(ws.M), Vn(ws.M);
      for (int m = 0; m < ws.M; ++m) {
        Un[m] = U[m] - step * Gu[m];
        Vn[m] = V[m] - step * Gv[m];
      }
      if (pb.rep.kind() == RepKind::ClosedSign && eta_free) {
        // The only output degree of freedom in 1-d is the shared mean; keep it
        // inside the finiteness box of the sign representative.
        Vec eta = ensemble_mean(ws, Vn);
        const Real clamped = std::clamp(eta[0], -1.0, 1.0);
        for (int m = 0; m < ws.M; ++m) Vn[m].col(0) += clamped - eta[0];
      }
      Objective cand = evaluate(ws, Un, Vn, xi, eta_free, false, nullptr, nullptr);
      if (std::isfinite(cand.lagrangian)) {
        U.swap(Un);
        V.swap(Vn);
        if (cand.lagrangian < sol.objective_trace.back() - tol) stall = 0;
        obj = evaluate(ws, U, V, xi, eta_free, true, &Gu, &Gv);
        project_input_directions(ws, Gu);
        project_output_directions(ws, Gv, eta_free);
        if (cand.lagrangian < sol.objective_trace.back())
          sol.objective_trace.push_back(cand.lagrangian);
        if (++stall > 400) break;
      } else {
        break;
      }
    }
  }

  sol.iterations = it;
  const Objective final_obj = evaluate(ws, U, V, xi, eta_free, false, nullptr, nullptr);
  sol.eta = eta_free ? ensemble_mean(ws, V) : eta0;
  sol.f0_value = final_obj.value;
  sol.gap = sol.f0_value - xi.dot(sol.eta);
  const Real scale = std::max(1.0, std::abs(sol.f0_value));
  sol.certified = std::isfinite(sol.gap) && sol.gap <= pb.knobs.gap_tol * scale;

  sol.u.reserve(ws.M);
  sol.v.reserve(ws.M);
  Real max_res = 0.0;
  for (int m = 0; m < ws.M; ++m) {
    sol.u.push_back(ws.wrap(U[m]));
    sol.v.push_back(ws.wrap(V[m]));
    ArrayXd vals;
    rep_batch(pb.rep, U[m], V[m], ws.phase.empty() ? nullptr : &ws.phase[m], false, nullptr,
              nullptr, &vals);
    ArrayXd pairing = (U[m] * V[m]).rowwise().sum();
    max_res = std::max(max_res, (vals - pairing).maxCoeff());
  }
  sol.pointwise_residual = std::max(max_res, 0.0);

  // +infinity is an honest value of f0 (e.g. the sign representative beyond
  // its box); only NaN indicates a solver defect.
  if (std::isnan(sol.f0_value))
    throw SolverFailure("cell solver: objective became NaN");
  return sol;
}

}  // namespace

std::vector<Realization> problem_ensemble(const CellProblem& problem) {
  CounterRng rng(problem.seed);
  std::vector<Realization> media;
  media.reserve(problem.ensemble);
  for (int m = 0; m < problem.ensemble; ++m)
    media.push_back(sample_realization(problem.medium, rng.fork(m).seed(), problem.grid));
  return media;
}

CellSolution f0_eval(const CellProblem& problem, const Vec& xi, const Vec& eta) {
  require(eta.size() == problem.grid.d, "f0_eval: eta size mismatch");
  return solve_cell(problem, xi, &eta);
}

CellSolution alpha0_eval(const CellProblem& problem, const Vec& xi) {
  return solve_cell(problem, xi, nullptr);
}

DisintegrationReport disintegrate(const CellProblem& problem, const CellSolution& solution) {
  require(solution.certified, "disintegrate: solution is not gap-certified");
  auto media = problem_ensemble(problem);
  const int M = static_cast<int>(solution.u.size());
  DisintegrationReport rep;
  Real sum = 0.0;
  Index count = 0;
  for (int m = 0; m < M; ++m) {
    const ArrayXXd& U = solution.u[m].values();
    const ArrayXXd& V = solution.v[m].values();
    ArrayXd phase = media[m].coefficients.values().col(0);
    ArrayXd vals;
    rep_batch(problem.rep, U, V, &phase, false, nullptr, nullptr, &vals);
    ArrayXd res = vals - (U * V).rowwise().sum();
    rep.max_residual = std::max(rep.max_residual, res.maxCoeff());
    sum += res.sum();
    count += res.size();
  }
  rep.mean_residual = sum / count;
  rep.mean_u = Vec::Zero(problem.grid.d);
  rep.mean_v = Vec::Zero(problem.grid.d);
  for (int m = 0; m < M; ++m) {
    rep.mean_u += solution.u[m].mean();
    rep.mean_v += solution.v[m].mean();
  }
  rep.mean_u /= M;
  rep.mean_v /= M;
  rep.mean_check = (rep.mean_u - solution.xi).norm() <= 1e-10 &&
                   (rep.mean_v - solution.eta).norm() <= 1e-10;
  return rep;
}

IntegrateCheckReport integrate_check(const CellProblem& problem,
                                     const std::vector<DiscreteField>& u,
                                     const std::vector<DiscreteField>& v) {
  require(u.size() == v.size() && !u.empty(), "integrate_check: field count mismatch");
  auto media = problem_ensemble(problem);
  require(u.size() == media.size(), "integrate_check: ensemble size mismatch");
  const bool xi_on_potential =
      problem.knobs.orientation == CellOrientation::GradientToFlux;

  IntegrateCheckReport rep;
  const int M = static_cast<int>(u.size());
  rep.xi = Vec::Zero(problem.grid.d);
  rep.eta = Vec::Zero(problem.grid.d);
  for (int m = 0; m < M; ++m) {
    rep.xi += u[m].mean();
    rep.eta += v[m].mean();
  }
  rep.xi /= M;
  rep.eta /= M;

  for (int m = 0; m < M; ++m) {
    // Class membership: the complementary fluctuation component must vanish.
    DiscreteField u_defect = xi_on_potential ? project_solenoidal_zero_mean(u[m])
                                             : project_potential_zero_mean(u[m]);
    DiscreteField v_defect = xi_on_potential ? project_potential_zero_mean(v[m])
                                             : project_solenoidal_zero_mean(v[m]);
    rep.max_class_defect = std::max({rep.max_class_defect,
                                     u_defect.values().abs().maxCoeff(),
                                     v_defect.values().abs().maxCoeff()});
    ArrayXd phase = media[m].coefficients.values().col(0);
    ArrayXd vals;
    rep_batch(problem.rep, u[m].values(), v[m].values(), &phase, false, nullptr, nullptr, &vals);
    ArrayXd res = vals - (u[m].values() * v[m].values()).rowwise().sum();
    rep.max_inclusion_residual = std::max(rep.max_inclusion_residual, res.maxCoeff());
  }
  rep.pre_ok = rep.max_class_defect <= 1e-8 &&
               rep.max_inclusion_residual <= 1e-4 * std::max(1.0, rep.eta.norm());

  CellSolution at_means = f0_eval(problem, rep.xi, rep.eta);
  rep.gap = at_means.gap;
  return rep;
}

void EffectiveGraph::add_row(EffectiveGraphRow row) {
  require(row.xi.size() == dim_ && row.eta.size() == dim_, "graph row: dimension mismatch");
  rows_.push_back(std::move(row));
}

namespace {

Vec table_interp(const std::vector<std::pair<Real, Vec>>& knots, Real t, bool* extrapolated) {
  if (t <= knots.front().first) {
    if (t < knots.front().first - 1e-12 && extrapolated) *extrapolated = true;
    return knots.front().second;
  }
  if (t >= knots.back().first) {
    if (t > knots.back().first + 1e-12 && extrapolated) *extrapolated = true;
    return knots.back().second;
  }
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (t <= knots[i].first) {
      const Real t0 = knots[i - 1].first, t1 = knots[i].first;
      const Real w = (t - t0) / (t1 - t0);
      return (1 - w) * knots[i - 1].second + w * knots[i].second;
    }
  }
  return knots.back().second;
}

}  // namespace

EffectiveGraph::Interpolant EffectiveGraph::interpolant() const {
  require(!rows_.empty(), "graph interpolant: no rows");
  Interpolant ip;
  ip.dim_ = dim_;
  ip.tables_.resize(dim_);
  for (const auto& row : rows_) {
    for (Index j = 0; j < dim_; ++j) {
      Real off_axis = 0.0;
      for (Index k = 0; k < dim_; ++k)
        if (k != j) off_axis = std::max(off_axis, std::abs(row.xi[k]));
      if (off_axis <= 1e-12) ip.tables_[j].push_back({row.xi[j], row.eta});
    }
  }
  for (Index j = 0; j < dim_; ++j) {
    require(!ip.tables_[j].empty(), "graph interpolant: no rows along one load axis");
    std::sort(ip.tables_[j].begin(), ip.tables_[j].end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  return ip;
}

Vec EffectiveGraph::Interpolant::evaluate(const Vec& xi, bool* extrapolated) const {
  if (dim_ == 1) return table_interp(tables_[0], xi[0], extrapolated);
  Vec eta = Vec::Zero(dim_);
  Vec origin = Vec::Zero(dim_);
  for (Index j = 0; j < dim_; ++j) {
    eta += table_interp(tables_[j], xi[j], extrapolated);
    origin += table_interp(tables_[j], 0.0, nullptr);
  }
  // Additive per-axis composition around the common origin value.
  eta -= (static_cast<Real>(dim_ - 1) / dim_) * origin;
  return eta;
}

Vec EffectiveGraph::evaluate(const Vec& xi, bool* extrapolated) const {
  require(xi.size() == dim_, "graph evaluate: dimension mismatch");
  if (extrapolated) *extrapolated = false;
  return interpolant().evaluate(xi, extrapolated);
}

Real EffectiveGraph::lipschitz_estimate() const {
  Real lip = 0.0;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (std::size_t j = i + 1; j < rows_.size(); ++j) {
      const Real dxi = (rows_[j].xi - rows_[i].xi).norm();
      if (dxi == 0) continue;
      lip = std::max(lip, (rows_[j].eta - rows_[i].eta).norm() / dxi);
    }
  }
  return lip;
}

Real EffectiveGraph::theta_estimate() const {
  Real theta = kInf;
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    for (std::size_t j = i + 1; j < rows_.size(); ++j) {
      const Vec dxi = rows_[j].xi - rows_[i].xi;
      const Real d2 = dxi.squaredNorm();
      if (d2 == 0) continue;
      theta = std::min(theta, (rows_[j].eta - rows_[i].eta).dot(dxi) / d2);
    }
  }
  return theta;
}

EffectiveGraph tabulate_graph(const CellProblem& problem, const std::vector<Vec>& loads) {
  EffectiveGraph graph(problem.grid.d);
  for (const Vec& xi : loads) {
    CellSolution sol = alpha0_eval(problem, xi);
    graph.add_row({sol.xi, sol.eta, sol.gap, problem.grid.n_side, problem.ensemble,
                   problem.seed, sol.certified});
  }
  return graph;
}

StrictMonotonicityReport strict_mono_probe(const EffectiveGraph& graph, Real theta_expected,
                                           Real slack_fraction) {
  require(graph.rows().size() >= 2, "strict_mono_probe: need at least two rows");
  StrictMonotonicityReport rep;
  rep.theta_eff = graph.theta_estimate();
  rep.theta_expected = theta_expected;
  rep.slack_budget = slack_fraction * theta_expected;
  rep.passed = rep.theta_eff >= theta_expected - rep.slack_budget;
  return rep;
}

EffectiveTensorResult effective_tensor(const CellProblem& problem) {
  const Index n = problem.grid.d;
  EffectiveTensorResult res;
  res.tensor.resize(n, n);
  for (Index j = 0; j < n; ++j) {
    Vec e = Vec::Zero(n);
    e[j] = 1.0;
    CellSolution sol = alpha0_eval(problem, e);
    res.tensor.col(j) = sol.eta;
    res.all_certified = res.all_certified && sol.certified;
  }
  res.max_asymmetry = (res.tensor - res.tensor.transpose()).cwiseAbs().maxCoeff();
  return res;
}

}  // namespace effectop
