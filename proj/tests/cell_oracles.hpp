#pragma once

// Test-only oracles for the cell problems, independent of the variational
// solver path: the classical linear corrector equation solved by conjugate
// gradients on the potential subspace.
//
//   A_eff xi . xi = min { avg( a |xi + w|^2 ) : w potential, mean zero }
//
// and the ensemble pooling [avg_m A_m^{-1}]^{-1} that the shared-output-mean
// constraint of the ensemble cell problem induces for laws linear in each
// phase.

#include "effectop/field.hpp"
#include "effectop/scale_integration.hpp"
#include "effectop/spectral.hpp"

namespace effectop::testing {

inline DiscreteField scale_coeff(const DiscreteField& a, const DiscreteField& w) {
  DiscreteField out = w;
  for (Index j = 0; j < w.components(); ++j) out.values().col(j) *= a.values().col(0);
  return out;
}

/// One column of the classical effective tensor of a scalar coefficient field.
inline Vec classical_effective_load(const DiscreteField& coeff, const Vec& xi,
                                    Real tol = 1e-13, int max_iter = 4000) {
  const PeriodicGrid& g = coeff.grid();
  const int d = g.d;
  auto apply = [&](const DiscreteField& w) {  // P a w  on the potential subspace
    return project_potential_zero_mean(scale_coeff(coeff, w));
  };
  auto dot = [&](const DiscreteField& x, const DiscreteField& y) {
    return (x.values() * y.values()).sum();
  };

  DiscreteField xi_field(g, d);
  xi_field.values().rowwise() = xi.transpose().array();
  DiscreteField b = project_potential_zero_mean(scale_coeff(coeff, xi_field));
  b.values() *= -1.0;

  DiscreteField w(g, d), r = b, p = b;
  Real rr = dot(r, r);
  const Real rr0 = std::max(rr, 1e-300);
  for (int it = 0; it < max_iter && rr > tol * tol * rr0; ++it) {
    DiscreteField Ap = apply(p);
    const Real alpha = rr / dot(p, Ap);
    w.values() += alpha * p.values();
    r.values() -= alpha * Ap.values();
    const Real rr_new = dot(r, r);
    p.values() = r.values() + (rr_new / rr) * p.values();
    rr = rr_new;
  }
  DiscreteField full = xi_field;
  full.values() += w.values();
  return scale_coeff(coeff, full).mean();
}

inline Mat classical_effective_tensor(const DiscreteField& coeff) {
  const int d = coeff.grid().d;
  Mat A(d, d);
  for (int j = 0; j < d; ++j) {
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    A.col(j) = classical_effective_load(coeff, e);
  }
  return A;
}

/// The ensemble pooling the shared-eta cell problem converges to for linear
/// phases: the harmonic-type mean of the per-realization tensors.
inline Mat pooled_effective_tensor(const CellProblem& pb) {
  auto media = problem_ensemble(pb);
  Mat inv_sum = Mat::Zero(pb.grid.d, pb.grid.d);
  for (const auto& r : media)
    inv_sum += classical_effective_tensor(r.coefficients).inverse();
  return Mat((inv_sum / static_cast<Real>(media.size())).inverse());
}

}  // namespace effectop::testing
