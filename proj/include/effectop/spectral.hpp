#pragma once

#include "effectop/field.hpp"

namespace effectop {

/// Helmholtz-type decomposition on the periodic grid, exact to rounding:
/// field = mean + potential + solenoidal, where the potential part is the
/// discrete gradient of a periodic scalar (spectral projection k(k.u)/|k|^2
/// per nonzero frequency) and both parts have zero mean.
struct HelmholtzParts {
  Vec mean;
  DiscreteField potential;
  DiscreteField solenoidal;
};

HelmholtzParts helmholtz_split(const DiscreteField& field);  // requires n == d

/// Orthogonal projections used by the cell-problem solvers (single output,
/// cheaper than materializing all three parts).
DiscreteField project_potential_zero_mean(const DiscreteField& field);
DiscreteField project_solenoidal_zero_mean(const DiscreteField& field);

/// Cell average of the pointwise dot product u . v.
Real pairing_mean(const DiscreteField& u, const DiscreteField& v);

struct NormBoundReport {
  Real lhs = 0.0;          // avg |xi + u|^p
  Real rhs = 0.0;          // |xi|^p + avg |u|^p
  Real c_empirical = 1.0;  // lhs / rhs
};

/// Empirical constant of the mean-zero splitting inequality; the field's mean
/// is subtracted before evaluation.
NormBoundReport mean_zero_norm_bound(const DiscreteField& field, const Vec& xi, Real p);

// Spectral calculus on the unit torus (derivative symbol 2*pi*k; the Nyquist
// mode of odd derivatives is zeroed to keep real fields real).
DiscreteField spectral_gradient(const DiscreteField& scalar);      // 1 comp -> d comps
DiscreteField spectral_divergence(const DiscreteField& vec);       // d comps -> 1 comp
DiscreteField perp_gradient(const DiscreteField& scalar);          // d=2: (-d2, d1)
DiscreteField spectral_curl2(const DiscreteField& vec2);           // d=2: d1 v2 - d2 v1
/// Solve Laplace u = rhs on the torus with mean(u) = 0 (rhs mean discarded).
DiscreteField poisson_solve_torus(const DiscreteField& rhs);

}  // namespace effectop
