#include "effectop/monotone_law.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace effectop {

// ---------------------------------------------------------------------------
// ValueSet

ValueSet ValueSet::singleton(Vec y) {
  ValueSet s;
  s.form_ = Form::Singleton;
  s.a_ = std::move(y);
  return s;
}

ValueSet ValueSet::box(Vec lo, Vec hi) {
  require(lo.size() == hi.size(), "ValueSet::box: size mismatch");
  require((lo.array() <= hi.array()).all(), "ValueSet::box: lo > hi");
  ValueSet s;
  s.form_ = Form::Box;
  s.a_ = std::move(lo);
  s.b_ = std::move(hi);
  return s;
}

ValueSet ValueSet::samples(std::vector<Vec> ys) {
  require(!ys.empty(), "ValueSet::samples: empty");
  ValueSet s;
  s.form_ = Form::Samples;
  s.samples_ = std::move(ys);
  return s;
}

Index ValueSet::dimension() const {
  switch (form_) {
    case Form::Singleton:
    case Form::Box:
      return a_.size();
    case Form::Samples:
      return samples_.front().size();
  }
  return 0;
}

Real ValueSet::distance(const Vec& y) const {
  switch (form_) {
    case Form::Singleton:
      return (y - a_).norm();
    case Form::Box: {
      Vec clamped = y.cwiseMax(a_).cwiseMin(b_);
      return (y - clamped).norm();
    }
    case Form::Samples: {
      Real best = kInf;
      for (const Vec& s : samples_) best = std::min(best, (y - s).norm());
      return best;
    }
  }
  return kInf;
}

Vec ValueSet::representative() const {
  switch (form_) {
    case Form::Singleton:
      return a_;
    case Form::Box:
      return Vec(Vec::Zero(a_.size()).cwiseMax(a_).cwiseMin(b_));
    case Form::Samples: {
      const Vec* best = &samples_.front();
      for (const Vec& s : samples_)
        if (s.norm() < best->norm()) best = &s;
      return *best;
    }
  }
  return a_;
}

const Vec& ValueSet::point() const {
  require(form_ == Form::Singleton, "ValueSet: not a singleton");
  return a_;
}
const Vec& ValueSet::lower() const {
  require(form_ == Form::Box, "ValueSet: not a box");
  return a_;
}
const Vec& ValueSet::upper() const {
  require(form_ == Form::Box, "ValueSet: not a box");
  return b_;
}
const std::vector<Vec>& ValueSet::list() const {
  require(form_ == Form::Samples, "ValueSet: not a sample list");
  return samples_;
}

// ---------------------------------------------------------------------------
// MonotoneLaw

struct MonotoneLaw::Impl {
  LawKind kind;
  Index dim = 1;
  LawBounds bounds;

  // Affine
  Mat A;
  Vec b;
  // Power
  Real coeff = 1.0;
  Real exponent = 2.0;
  // SignGraph
  bool maximal = false;
  // Hall
  std::shared_ptr<const Impl> core;
  Real hall_coeff = 0.0;
  Eigen::Vector3d induction = Eigen::Vector3d::Zero();
  Vec applied;
  // TwoPhase
  std::shared_ptr<const Impl> phase_a, phase_b;
  Real key_a = 0.0, key_b = 1.0;
};

namespace {

using ImplPtr = std::shared_ptr<const MonotoneLaw::Impl>;

Mat cross_jacobian(const Eigen::Vector3d& B, Index n) {
  // d/dx (x cross B), restricted to the first n components.
  Mat M(3, 3);
  M << 0, B.z(), -B.y(), -B.z(), 0, B.x(), B.y(), -B.x(), 0;
  return M.topLeftCorner(n, n);
}

Vec cross_with(const Vec& x, const Eigen::Vector3d& B) {
  Eigen::Vector3d x3 = Eigen::Vector3d::Zero();
  for (Index i = 0; i < x.size(); ++i) x3[i] = x[i];
  Eigen::Vector3d c = x3.cross(B);
  Vec out(x.size());
  for (Index i = 0; i < x.size(); ++i) out[i] = c[i];
  return out;
}

Real spectral_norm(const Mat& A) { return A.jacobiSvd().singularValues()(0); }

Real min_sym_eigenvalue(const Mat& A) {
  Mat S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  return es.eigenvalues().minCoeff();
}

Vec eval_single(const MonotoneLaw::Impl& im, const Vec& x, std::optional<Real> phase);

// Jacobian of the single-valued branch at x (smooth kinds only).
Mat eval_jacobian(const MonotoneLaw::Impl& im, const Vec& x, std::optional<Real> phase) {
  switch (im.kind) {
    case LawKind::Affine:
      return im.A;
    case LawKind::Power: {
      const Real r = x.norm();
      if (r == 0.0) {
        if (im.exponent > 2.0) return Mat::Zero(im.dim, im.dim);
        if (im.exponent == 2.0) return im.coeff * Mat::Identity(im.dim, im.dim);
        throw SolverFailure("power law: derivative unbounded at 0 for p < 2");
      }
      const Real s = im.coeff * std::pow(r, im.exponent - 2.0);
      return s * (Mat::Identity(im.dim, im.dim) +
                  (im.exponent - 2.0) / (r * r) * (x * x.transpose()));
    }
    case LawKind::Hall: {
      Mat J = eval_jacobian(*im.core, x, phase);
      J += im.hall_coeff * cross_jacobian(im.induction, im.dim);
      return J;
    }
    case LawKind::TwoPhase: {
      require(phase.has_value(), "two-phase law: phase sample required");
      const auto& br = std::abs(*phase - im.key_a) <= std::abs(*phase - im.key_b) ? *im.phase_a
                                                                                  : *im.phase_b;
      return eval_jacobian(br, x, phase);
    }
    default:
      throw SolverFailure("law has no classical Jacobian");
  }
}

Vec eval_single(const MonotoneLaw::Impl& im, const Vec& x, std::optional<Real> phase) {
  switch (im.kind) {
    case LawKind::Affine:
      return im.A * x + im.b;
    case LawKind::Power: {
      const Real r = x.norm();
      if (r == 0.0) return Vec::Zero(im.dim);
      return im.coeff * std::pow(r, im.exponent - 2.0) * x;
    }
    case LawKind::SignGraph: {
      Vec y(1);
      y[0] = x[0] > 0 ? 1.0 : (x[0] < 0 ? -1.0 : 0.0);
      return y;
    }
    case LawKind::Hall:
      return eval_single(*im.core, x, phase) + im.hall_coeff * cross_with(x, im.induction) +
             im.applied;
    case LawKind::TwoPhase: {
      require(phase.has_value(), "two-phase law: phase sample required");
      const auto& br = std::abs(*phase - im.key_a) <= std::abs(*phase - im.key_b) ? *im.phase_a
                                                                                  : *im.phase_b;
      return eval_single(br, x, phase);
    }
  }
  return Vec::Zero(im.dim);
}

}  // namespace

MonotoneLaw MonotoneLaw::affine(Mat A, Vec b) {
  require(A.rows() == A.cols(), "affine law: A must be square");
  require(A.rows() == b.size(), "affine law: A and b size mismatch");
  require(A.rows() >= 1 && A.rows() <= 4, "affine law: dimension must be in 1..4");
  auto im = std::make_shared<Impl>();
  im->kind = LawKind::Affine;
  im->dim = A.rows();
  im->A = std::move(A);
  im->b = std::move(b);
  const Real theta = min_sym_eigenvalue(im->A);
  const Real opA = spectral_norm(im->A);
  const Real nb = im->b.norm();
  LawBounds lb;
  lb.theta = theta;
  lb.growth_scale = std::max(opA, nb);
  if (theta > 0) {
    lb.coercivity_a = 0.5 * theta;
    lb.coercivity_b = nb > 0 ? nb * nb / (2.0 * theta) : 0.0;
  } else {
    lb.coercivity_a = 0.0;
    lb.coercivity_b = std::abs(theta) * lb.radius * lb.radius + nb * lb.radius;
  }
  im->bounds = lb;
  return MonotoneLaw(im);
}

MonotoneLaw MonotoneLaw::affine(Real a, Real b) {
  Mat A(1, 1);
  A(0, 0) = a;
  Vec bb(1);
  bb[0] = b;
  return affine(A, bb);
}

MonotoneLaw MonotoneLaw::power(Real coefficient, Real exponent, Index dim) {
  require(coefficient > 0, "power law: coefficient must be positive");
  require(exponent > 1, "power law: exponent must exceed 1");
  require(dim >= 1 && dim <= 4, "power law: dimension must be in 1..4");
  auto im = std::make_shared<Impl>();
  im->kind = LawKind::Power;
  im->dim = dim;
  im->coeff = coefficient;
  im->exponent = exponent;
  LawBounds lb;
  const Real R = lb.radius;
  lb.theta = 0.0;  // strengthens away from the origin only
  if (exponent >= 2.0) {
    lb.growth_scale = coefficient * std::max(1.0, std::pow(R, exponent - 2.0));
    lb.coercivity_a = coefficient;
    lb.coercivity_b = coefficient;  // |x|^p >= |x|^2 - 1 pointwise
  } else {
    lb.growth_scale = coefficient;
    lb.coercivity_a = coefficient * std::pow(R, exponent - 2.0);
    lb.coercivity_b = 0.0;
  }
  im->bounds = lb;
  return MonotoneLaw(im);
}

MonotoneLaw MonotoneLaw::sign_graph(bool maximalize) {
  auto im = std::make_shared<Impl>();
  im->kind = LawKind::SignGraph;
  im->dim = 1;
  im->maximal = maximalize;
  LawBounds lb;
  lb.theta = 0.0;
  lb.growth_scale = 1.0;
  lb.coercivity_a = 0.5 / lb.radius;  // |x| >= |x|^2/(2R) on |x| <= R
  lb.coercivity_b = 0.0;
  im->bounds = lb;
  return MonotoneLaw(im);
}

MonotoneLaw MonotoneLaw::hall(MonotoneLaw core, Real hall_coeff, Eigen::Vector3d induction,
                              Vec applied_field) {
  require(core.dimension() == 2 || core.dimension() == 3, "hall law: core must be 2-d or 3-d");
  require(applied_field.size() == core.dimension(), "hall law: applied field size mismatch");
  require(core.kind() != LawKind::SignGraph, "hall law: core must be single-valued");
  if (core.dimension() == 2)
    require(induction.x() == 0.0 && induction.y() == 0.0,
            "hall law: 2-d problems need an out-of-plane induction (0,0,Bz)");
  auto im = std::make_shared<Impl>();
  im->kind = LawKind::Hall;
  im->dim = core.dimension();
  im->core = core.impl_;
  im->hall_coeff = hall_coeff;
  im->induction = std::move(induction);
  im->applied = std::move(applied_field);
  LawBounds lb = core.bounds();
  // The skew term h (x cross B) pairs to zero with x, so theta is untouched.
  const Real skew = std::abs(hall_coeff) * im->induction.norm();
  const Real na = im->applied.norm();
  lb.growth_scale = lb.growth_scale + skew + na;
  if (lb.coercivity_a > 0) {
    lb.coercivity_b += na * na / (2.0 * lb.coercivity_a);
    lb.coercivity_a *= 0.5;
  } else {
    lb.coercivity_b += na * lb.radius;
  }
  im->bounds = lb;
  return MonotoneLaw(im);
}

MonotoneLaw MonotoneLaw::two_phase(MonotoneLaw phase_a, MonotoneLaw phase_b, Real key_a,
                                   Real key_b) {
  require(phase_a.dimension() == phase_b.dimension(), "two-phase law: dimension mismatch");
  require(key_a != key_b, "two-phase law: phase keys must differ");
  auto im = std::make_shared<Impl>();
  im->kind = LawKind::TwoPhase;
  im->dim = phase_a.dimension();
  im->phase_a = phase_a.impl_;
  im->phase_b = phase_b.impl_;
  im->key_a = key_a;
  im->key_b = key_b;
  LawBounds lb;
  const LawBounds& la = phase_a.bounds();
  const LawBounds& lbb = phase_b.bounds();
  lb.theta = std::min(la.theta, lbb.theta);
  lb.growth_scale = std::max(la.growth_scale, lbb.growth_scale);
  lb.coercivity_a = std::min(la.coercivity_a, lbb.coercivity_a);
  lb.coercivity_b = std::max(la.coercivity_b, lbb.coercivity_b);
  lb.radius = std::min(la.radius, lbb.radius);
  im->bounds = lb;
  return MonotoneLaw(im);
}

LawKind MonotoneLaw::kind() const { return impl_->kind; }
Index MonotoneLaw::dimension() const { return impl_->dim; }
const LawBounds& MonotoneLaw::bounds() const { return impl_->bounds; }

MonotoneLaw MonotoneLaw::with_bounds(LawBounds b) const {
  auto im = std::make_shared<Impl>(*impl_);
  im->bounds = b;
  return MonotoneLaw(im);
}

bool MonotoneLaw::maximalized() const {
  require(impl_->kind == LawKind::SignGraph, "maximalized: sign-graph law only");
  return impl_->maximal;
}

MonotoneLaw MonotoneLaw::maximalize() const {
  require(impl_->kind == LawKind::SignGraph, "maximalize: sign-graph law only");
  auto im = std::make_shared<Impl>(*impl_);
  im->maximal = true;
  return MonotoneLaw(im);
}

std::pair<Real, Real> MonotoneLaw::phase_keys() const {
  require(impl_->kind == LawKind::TwoPhase, "phase_keys: two-phase law only");
  return {impl_->key_a, impl_->key_b};
}

std::pair<Real, Real> MonotoneLaw::power_params() const {
  require(impl_->kind == LawKind::Power, "power_params: power law only");
  return {impl_->coeff, impl_->exponent};
}

MonotoneLaw MonotoneLaw::phase_branch(Real phase) const {
  require(impl_->kind == LawKind::TwoPhase, "phase_branch: two-phase law only");
  return MonotoneLaw(std::abs(phase - impl_->key_a) <= std::abs(phase - impl_->key_b)
                         ? impl_->phase_a
                         : impl_->phase_b);
}

ValueSet MonotoneLaw::evaluate(const Vec& x, std::optional<Real> phase) const {
  require(x.size() == impl_->dim, "eval_law: dimension mismatch");
  require(x.allFinite(), "eval_law: non-finite input");
  if (impl_->kind == LawKind::SignGraph && x[0] == 0.0) {
    Vec lo(1), hi(1);
    lo[0] = impl_->maximal ? -1.0 : 0.0;
    hi[0] = 1.0;
    return ValueSet::box(lo, hi);
  }
  if (impl_->kind == LawKind::TwoPhase)
    require(phase.has_value(), "eval_law: two-phase law requires a phase sample");
  return ValueSet::singleton(eval_single(*impl_, x, phase));
}

Vec MonotoneLaw::select(const Vec& x, std::optional<Real> phase) const {
  return evaluate(x, phase).representative();
}

Real MonotoneLaw::membership_residual(const Vec& x, const Vec& y,
                                      std::optional<Real> phase) const {
  return evaluate(x, phase).distance(y);
}

Vec MonotoneLaw::resolve(const Vec& z, Real lambda, std::optional<Real> phase) const {
  require(lambda > 0, "resolvent: lambda must be positive");
  require(z.size() == impl_->dim, "resolvent: dimension mismatch");
  const Impl& im = *impl_;
  switch (im.kind) {
    case LawKind::Affine: {
      Mat M = Mat::Identity(im.dim, im.dim) + lambda * im.A;
      return M.partialPivLu().solve(z - lambda * im.b);
    }
    case LawKind::Power: {
      const Real s = z.norm();
      if (s == 0.0) return Vec::Zero(im.dim);
      // Radial scalar equation r + lambda a r^(p-1) = s, r in [0, s].
      Real lo = 0.0, hi = s;
      Real r = s / 2;
      for (int it = 0; it < 200; ++it) {
        const Real g = r + lambda * im.coeff * std::pow(r, im.exponent - 1.0) - s;
        if (std::abs(g) <= 1e-15 * std::max(1.0, s)) break;
        (g > 0 ? hi : lo) = r;
        const Real dg = 1.0 + lambda * im.coeff * (im.exponent - 1.0) *
                                  std::pow(r, im.exponent - 2.0);
        Real rn = r - g / dg;
        if (!(rn > lo && rn < hi)) rn = 0.5 * (lo + hi);
        r = rn;
      }
      return (r / s) * z;
    }
    case LawKind::SignGraph: {
      // Maximalized branch analysis: x>0 -> x=z-l, x<0 -> x=z+l, else x=0.
      Vec x(1);
      if (z[0] > lambda)
        x[0] = z[0] - lambda;
      else if (z[0] < -lambda)
        x[0] = z[0] + lambda;
      else
        x[0] = 0.0;
      return x;
    }
    case LawKind::Hall: {
      Vec x = z;
      for (int it = 0; it < 100; ++it) {
        Vec F = x + lambda * eval_single(im, x, phase) - z;
        if (F.norm() <= 1e-13 * std::max(1.0, z.norm())) return x;
        Mat J = Mat::Identity(im.dim, im.dim) + lambda * eval_jacobian(im, x, phase);
        x -= J.partialPivLu().solve(F);
      }
      Vec F = x + lambda * eval_single(im, x, phase) - z;
      if (F.norm() <= 1e-10 * std::max(1.0, z.norm())) return x;
      throw SolverFailure("resolvent: Newton iteration did not converge");
    }
    case LawKind::TwoPhase: {
      require(phase.has_value(), "resolvent: two-phase law requires a phase sample");
      return phase_branch(*phase).resolve(z, lambda, phase);
    }
  }
  return z;
}

Real MonotoneLaw::strong_monotonicity_on(Real r) const {
  const Impl& im = *impl_;
  switch (im.kind) {
    case LawKind::Affine:
      return min_sym_eigenvalue(im.A);
    case LawKind::Power:
      if (im.exponent == 2.0) return im.coeff;
      if (im.exponent > 2.0) return 0.0;
      return im.coeff * (im.exponent - 1.0) * std::pow(r, im.exponent - 2.0);
    case LawKind::SignGraph:
      return 0.0;
    case LawKind::Hall:
      return MonotoneLaw(im.core).strong_monotonicity_on(r);
    case LawKind::TwoPhase:
      return std::min(MonotoneLaw(im.phase_a).strong_monotonicity_on(r),
                      MonotoneLaw(im.phase_b).strong_monotonicity_on(r));
  }
  return 0.0;
}

Real MonotoneLaw::lipschitz_on(Real r) const {
  const Impl& im = *impl_;
  switch (im.kind) {
    case LawKind::Affine:
      return spectral_norm(im.A);
    case LawKind::Power:
      if (im.exponent >= 2.0)
        return im.coeff * (im.exponent - 1.0) * std::pow(r, im.exponent - 2.0);
      return kInf;  // derivative blows up at the origin
    case LawKind::SignGraph:
      return kInf;
    case LawKind::Hall:
      return MonotoneLaw(im.core).lipschitz_on(r) +
             std::abs(im.hall_coeff) * im.induction.norm();
    case LawKind::TwoPhase:
      return std::max(MonotoneLaw(im.phase_a).lipschitz_on(r),
                      MonotoneLaw(im.phase_b).lipschitz_on(r));
  }
  return kInf;
}

std::vector<GraphPoint> sample_graph(const MonotoneLaw& law, int count, std::uint64_t seed,
                                     Real radius, std::optional<Real> phase) {
  require(count >= 1, "sample_graph: count must be positive");
  CounterRng rng(seed);
  const Index n = law.dimension();
  std::vector<GraphPoint> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    Vec x = radius / std::sqrt(static_cast<Real>(n)) *
            rng.normal_vec(static_cast<std::uint64_t>(i), n);
    ValueSet img = law.evaluate(x, phase);
    pts.push_back({x, img.representative(), !img.is_singleton()});
  }
  return pts;
}

namespace {

void probe_points(const std::vector<GraphPoint>& pts, MonotonicityReport& rep) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const Vec dx = pts[j].x - pts[i].x;
      const Real dx2 = dx.squaredNorm();
      if (dx2 == 0.0) continue;
      const Real pairing = (pts[j].y - pts[i].y).dot(dx);
      rep.min_quotient = std::min(rep.min_quotient, pairing / dx2);
      if (pairing < -1e-12) ++rep.violations;
      ++rep.pairs;
    }
  }
}

}  // namespace

MonotonicityReport monotonicity_probe(const MonotoneLaw& law, int sample_count,
                                      std::uint64_t seed) {
  require(sample_count >= 2, "monotonicity_probe: need at least two samples");
  MonotonicityReport rep;
  const Real radius = std::min(2.0, law.bounds().radius);
  if (law.kind() == LawKind::TwoPhase) {
    auto [ka, kb] = law.phase_keys();
    probe_points(sample_graph(law, sample_count, seed, radius, ka), rep);
    probe_points(sample_graph(law, sample_count, seed ^ 0x5bd1e995u, radius, kb), rep);
  } else {
    probe_points(sample_graph(law, sample_count, seed, radius), rep);
  }
  return rep;
}

}  // namespace effectop
