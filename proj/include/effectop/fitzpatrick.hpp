#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "effectop/common.hpp"
#include "effectop/monotone_law.hpp"

namespace effectop {

enum class RepKind {
  ClosedAffine,          // per component: (y - b + a x)^2 / (4a) + b x
  ClosedSign,            // |x| if |y| <= 1, +infinity otherwise (1-d)
  ClosedIdentityScaled,  // |y + a x|^2 / (4a)
  ClosedFenchel,         // phi + phi* of the same linear law: a x^2/2 + y^2/(2a)
  GenericSup,            // finite-sample supremum over a law's graph
  TwoPhase,
};

/// Range-qualified coercivity certificate:
///   f(x, y, w) >= c (|x|^p + |y|^q) + kbar   on |x|, |y| <= radius.
struct CoercivityCert {
  Real c = 0.0;
  Real kbar = 0.0;
  Real radius = 10.0;
};

/// A representative function f >= <y,x> (class F), possibly phase-dependent.
/// Values are extended reals: +infinity is an admissible result.
class RepFunction {
 public:
  static RepFunction closed_affine(Vec a, Vec b);
  static RepFunction closed_affine(Real a, Real b);
  static RepFunction closed_sign();
  static RepFunction closed_identity_scaled(Real a, Index dim);
  static RepFunction closed_fenchel(Vec a);
  static RepFunction closed_fenchel(Real a, Index dim);
  static RepFunction generic_sup(const MonotoneLaw& law, int graph_samples, std::uint64_t seed,
                                 Real radius = 2.0);
  static RepFunction two_phase(RepFunction f_a, RepFunction f_b, Real key_a, Real key_b);

  RepKind kind() const;
  Index dimension() const;

  std::pair<Real, Real> exponents() const;
  RepFunction with_exponents(Real p, Real q) const;

  std::optional<CoercivityCert> coercivity() const;
  RepFunction with_coercivity(CoercivityCert cert) const;
  RepFunction without_coercivity() const;  // drops the certificate claim

  /// True when value_with_gradient is available everywhere (quadratic kinds).
  bool smooth() const;

  Real value(const Vec& x, const Vec& y, std::optional<Real> phase = {}) const;

  /// Value plus gradients w.r.t. x and y.  For GenericSup this returns a
  /// subgradient (the active supporting plane).  Throws for ClosedSign.
  Real value_with_gradient(const Vec& x, const Vec& y, std::optional<Real> phase, Vec& gx,
                           Vec& gy) const;

  std::pair<Real, Real> phase_keys() const;
  RepFunction phase_branch(Real phase) const;

  /// Per-component slope / offset of the quadratic kinds (offset is zero for
  /// the identity-scaled and Fenchel forms).
  const Vec& quad_slope() const;
  Vec quad_offset() const;

  /// Graph sample backing a GenericSup kind (per phase key when applicable).
  const std::vector<GraphPoint>& sup_sample(std::optional<Real> phase = {}) const;

  struct Impl;

 private:
  explicit RepFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  friend std::optional<ValueSet> recover_graph(const RepFunction&, const Vec&,
                                               std::optional<Real>, Real);
  std::shared_ptr<const Impl> impl_;
};

inline Real fitz_eval(const RepFunction& f, const Vec& x, const Vec& y,
                      std::optional<Real> phase = {}) {
  return f.value(x, y, phase);
}

/// f(x,y) - <y,x>, clamped to 0 on [-1e-12, 0).  A value below -1e-12 means f
/// is not in class F; that is reported as ClassFViolation.
Real representation_gap(const RepFunction& f, const Vec& x, const Vec& y,
                        std::optional<Real> phase = {});

/// The image of x under the operator represented by f: argmin_y f(x,y)-<y,x>
/// restricted to gap <= gap_tol.  nullopt when even the minimum gap exceeds
/// gap_tol (f then represents no value at x within tolerance).
std::optional<ValueSet> recover_graph(const RepFunction& f, const Vec& x,
                                      std::optional<Real> phase = {},
                                      Real gap_tol = kRecoverGapTol);

struct RepresentativeReport {
  Real max_graph_gap = 0.0;      // over sampled graph points of the law
  Real off_graph_min_gap = kInf; // over perturbed off-graph points
  bool monotone_recovered = false;
};

RepresentativeReport check_representative(const RepFunction& f, const MonotoneLaw& law,
                                          int sample_count, std::uint64_t seed);

}  // namespace effectop
