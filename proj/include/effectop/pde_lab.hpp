#pragma once

#include <functional>
#include <string>
#include <vector>

#include "effectop/field.hpp"
#include "effectop/monotone_law.hpp"
#include "effectop/random_media.hpp"
#include "effectop/scale_integration.hpp"

namespace effectop {

/// Dirichlet problem -div beta(grad u, x) = f on the unit interval/square/cube,
/// u = 0 on the boundary.  P1 elements on the uniform simplicial mesh (Kuhn
/// simplices in 3-d); the per-cell coefficient selects the law's phase.
struct EllipticProblem {
  enum class Variant { Scalar, Vector };

  int d = 2;
  int n_side = 64;  // cells per side; nodes are (n_side+1)^d
  MonotoneLaw law = MonotoneLaw::affine(Mat::Identity(2, 2), Vec::Zero(2));
  Eigen::ArrayXd phase;  // per cell; empty for phase-free laws
  std::function<Real(const std::array<Real, 3>&)> rhs;
  Variant variant = Variant::Scalar;

  int max_iterations = 50000;
  Real residual_tol = 1e-8;  // weak residual <= tol * ||f||_L2
};

struct EllipticSolution {
  int d = 0, n_side = 0;
  std::vector<Eigen::ArrayXd> u;       // nodal values, one array per component
  std::vector<Eigen::ArrayXXd> grad;   // per component: (cells x d) cell-average gradient
  std::vector<Eigen::ArrayXXd> flux;   // per component: (cells x d)
  Real weak_residual = 0.0;
  Real load_norm = 0.0;
  int iterations = 0;
  Real contraction_estimate = 0.0;
  Real certified_contraction = 1.0;  // sqrt(1 - theta^2/L^2) when theta > 0
  std::vector<Real> energy_trace;    // preconditioned residual norms, contracting
  bool extrapolated = false;         // homogenized solves: graph range exceeded
};

EllipticSolution solve_elliptic(const EllipticProblem& problem);

/// Same solver with the constitutive law replaced by the piecewise-linear
/// interpolation of a tabulated effective graph.
EllipticSolution solve_homogenized(const EllipticProblem& problem, const EffectiveGraph& graph);

/// Ohm-Hall conduction on the 2-d torus with prescribed mean flux:
///   J = mean_flux + perp-grad(psi),  E = beta(J),  curl E = g,  div J = 0.
struct OhmHallProblem {
  PeriodicGrid grid;
  MonotoneLaw law = MonotoneLaw::affine(Mat::Identity(2, 2), Vec::Zero(2));
  DiscreteField source;  // scalar g, zero mean
  Eigen::Vector2d mean_flux = Eigen::Vector2d::Zero();

  int max_iterations = 20000;
  Real residual_tol = 1e-6;  // ||curl E - g||_2 / ||g||_2
};

struct OhmHallSolution {
  DiscreteField psi, J, E;
  Real residual = 0.0;
  int iterations = 0;
  Real div_J_max = 0.0;  // exact solenoidality check (spectral construction)
};

OhmHallSolution solve_ohmhall_torus(const OhmHallProblem& problem);

/// Grid quadrature of integral phi (E . J) over the unit domain.
Real divcurl_pairing(const DiscreteField& E, const DiscreteField& J, const DiscreteField& phi);

/// Cell-centered view of a nodal scalar (corner average per cell).
DiscreteField cell_average_nodal(int d, int n_side, const Eigen::ArrayXd& nodal);

// ---------------------------------------------------------------------------
// Epsilon sweep: solves the heterogeneous problem at each scale epsilon with
// the same underlying realization window, solves the homogenized problem from
// a tabulated effective graph, and reports coarse-block errors (the computable
// surrogate of weak convergence) plus div-curl pairings.

struct SweepConfig {
  MediumSpec medium;
  // Two-phase law keyed on the medium values, and its representative.
  MonotoneLaw law = MonotoneLaw::affine(Mat::Identity(2, 2), Vec::Zero(2));
  RepFunction rep = RepFunction::closed_identity_scaled(1.0, 2);

  // Effective-graph tabulation (cell problems).
  int cell_n_side = 128;
  int cell_ensemble = 8;
  std::vector<Real> graph_magnitudes = {1.0, 4.0};  // tabulated +-t per axis

  // Epsilon-scale solves.
  int n_side = 256;
  std::vector<int> inv_eps = {8, 16, 32};  // epsilon = 1/k, powers of two
  std::vector<std::uint64_t> seeds = {1};
  std::function<Real(const std::array<Real, 3>&)> rhs;
  int coarse_blocks = 8;

  int max_iterations = 50000;
  Real residual_tol = 1e-8;
  CellSolverKnobs cell_knobs;

  /// When nonempty, per-(seed, epsilon) solution fields plus the homogenized
  /// solutions are dumped there in the standard field format.
  std::string dump_dir;
};

struct SweepRow {
  Real eps = 0.0;
  std::uint64_t seed = 0;
  int block_id = 0;
  Real err_u = 0.0;
  Real err_flux = 0.0;
  Real divcurl_pairing = 0.0;  // identical across blocks of one (eps, seed)
};

struct EpsSummary {
  Real eps = 0.0;
  Real rel_err_u = 0.0;     // coarse-block l2, relative, averaged over seeds
  Real rel_err_flux = 0.0;
  Real pairing = 0.0;       // averaged over seeds
  Real pairing_hom = 0.0;
  bool ok = true;
  std::string note;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<EpsSummary> summary;
  Real hom_seed_rel_spread = 0.0;  // across-seed relative spread of u0 block averages
  bool partial = false;            // some solves failed and were flagged
  std::vector<std::string> field_dumps;  // written by the CLI layer
};

SweepReport epsilon_sweep(const SweepConfig& config);

}  // namespace effectop
