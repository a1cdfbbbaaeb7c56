#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "effectop/common.hpp"
#include "effectop/rng.hpp"

namespace effectop {

/// Image of a set-valued operator at one point: a singleton, an axis-aligned
/// box (closed interval per component), or a finite list of selections.
/// General convex images are out of scope.
class ValueSet {
 public:
  enum class Form { Singleton, Box, Samples };

  static ValueSet singleton(Vec y);
  static ValueSet box(Vec lo, Vec hi);
  static ValueSet samples(std::vector<Vec> ys);

  Form form() const { return form_; }
  bool is_singleton() const { return form_ == Form::Singleton; }
  Index dimension() const;

  /// Distance from y to the set (Euclidean; 0 means membership).
  Real distance(const Vec& y) const;
  bool contains(const Vec& y, Real tol) const { return distance(y) <= tol; }

  /// Minimum-norm element (used as the deterministic selection).
  Vec representative() const;

  const Vec& point() const;              // Singleton only
  const Vec& lower() const;              // Box only
  const Vec& upper() const;              // Box only
  const std::vector<Vec>& list() const;  // Samples only

 private:
  ValueSet() = default;
  Form form_ = Form::Singleton;
  Vec a_, b_;
  std::vector<Vec> samples_;
};

enum class LawKind { Affine, Power, SignGraph, Hall, TwoPhase };

/// Certified constants of a law, valid on the ball of the given radius:
///   <y2-y1, x2-x1> >= theta |x2-x1|^2          (strict monotonicity modulus)
///   |y| <= growth_scale (1 + |x|)              (linear growth)
///   <y, x> >= coercivity_a |x|^2 - coercivity_b
struct LawBounds {
  Real theta = 0.0;
  Real growth_scale = 0.0;
  Real coercivity_a = 0.0;
  Real coercivity_b = 0.0;
  Real radius = 10.0;
};

/// A parametric (maximal) monotone operator on R^n, n <= 4.  Immutable and
/// cheap to copy; safe to evaluate concurrently.
class MonotoneLaw {
 public:
  static MonotoneLaw affine(Mat A, Vec b);
  static MonotoneLaw affine(Real a, Real b);  // 1-d convenience
  static MonotoneLaw power(Real coefficient, Real exponent, Index dim);
  /// The two-branch sign graph; stored as written (image [0,1] at 0).  The
  /// maximalize flag closes it to [-1,1] at 0.
  static MonotoneLaw sign_graph(bool maximalize = false);
  static MonotoneLaw hall(MonotoneLaw core, Real hall_coeff, Eigen::Vector3d induction,
                          Vec applied_field);
  static MonotoneLaw two_phase(MonotoneLaw phase_a, MonotoneLaw phase_b, Real key_a, Real key_b);

  LawKind kind() const;
  Index dimension() const;
  const LawBounds& bounds() const;
  MonotoneLaw with_bounds(LawBounds b) const;

  bool maximalized() const;  // SignGraph only
  MonotoneLaw maximalize() const;

  /// Full image alpha(x).  TwoPhase requires a phase sample.
  ValueSet evaluate(const Vec& x, std::optional<Real> phase = {}) const;

  /// Deterministic single selection from the image (minimum norm).
  Vec select(const Vec& x, std::optional<Real> phase = {}) const;

  /// Distance of y from alpha(x).
  Real membership_residual(const Vec& x, const Vec& y, std::optional<Real> phase = {}) const;

  /// Resolvent: the unique x with z in x + lambda alpha(x).  SignGraph is
  /// implicitly maximalized here (the resolvent of the non-maximal graph is
  /// not everywhere defined).
  Vec resolve(const Vec& z, Real lambda, std::optional<Real> phase = {}) const;

  /// Smallest monotonicity modulus of the differential on the ball |x| <= r
  /// (0 when the law is merely monotone there).
  Real strong_monotonicity_on(Real r) const;
  /// Lipschitz bound of the law on the ball |x| <= r (infinity if none).
  Real lipschitz_on(Real r) const;

  /// Phase keys (TwoPhase only): the coefficient values that select branches.
  std::pair<Real, Real> phase_keys() const;
  MonotoneLaw phase_branch(Real phase) const;

  /// Parameters of the Power kind.
  std::pair<Real, Real> power_params() const;  // (coefficient, exponent)

  struct Impl;

 private:
  explicit MonotoneLaw(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

struct GraphPoint {
  Vec x;
  Vec y;
  bool multivalued = false;
};

/// Random graph points with |x| around the given radius.
std::vector<GraphPoint> sample_graph(const MonotoneLaw& law, int count, std::uint64_t seed,
                                     Real radius = 2.0, std::optional<Real> phase = {});

struct MonotonicityReport {
  Real min_quotient = kInf;  // min over pairs of <dy,dx>/|dx|^2
  int violations = 0;        // pairs with <dy,dx> < -1e-12
  int pairs = 0;
};

/// Sampled monotonicity check.  Never throws on failure; negative findings are
/// reported so user-supplied laws can be vetted.  TwoPhase laws are probed one
/// branch at a time (the union of two monotone graphs need not be monotone).
MonotonicityReport monotonicity_probe(const MonotoneLaw& law, int sample_count,
                                      std::uint64_t seed);

inline ValueSet eval_law(const MonotoneLaw& law, const Vec& x, std::optional<Real> phase = {}) {
  return law.evaluate(x, phase);
}

inline Vec resolvent(const MonotoneLaw& law, const Vec& z, Real lambda,
                     std::optional<Real> phase = {}) {
  return law.resolve(z, lambda, phase);
}

}  // namespace effectop
