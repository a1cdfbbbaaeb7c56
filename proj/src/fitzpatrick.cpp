#include "effectop/fitzpatrick.hpp"

#include <algorithm>
#include <cmath>

namespace effectop {

struct RepFunction::Impl {
  RepKind kind;
  Index dim = 1;
  Real p = 2.0, q = 2.0;
  std::optional<CoercivityCert> cert;

  Vec a, b;  // quadratic kinds
  // GenericSup: graph samples, keyed by phase for two-phase laws (key NaN for
  // phase-free laws).
  std::map<Real, std::vector<GraphPoint>> samples;
  // TwoPhase
  std::shared_ptr<const Impl> branch_a, branch_b;
  Real key_a = 0.0, key_b = 1.0;
};

namespace {

using ImplPtr = std::shared_ptr<const RepFunction::Impl>;

constexpr Real kNoPhase = 0.0;  // map key used when the backing law is phase-free

CoercivityCert default_cert(Real lower_bound_on_ball, Real p, Real q, Real radius) {
  CoercivityCert cert;
  cert.c = 0.25;
  cert.radius = radius;
  cert.kbar = lower_bound_on_ball - cert.c * (std::pow(radius, p) + std::pow(radius, q));
  return cert;
}

Real sup_value(const std::vector<GraphPoint>& pts, const Vec& x, const Vec& y,
               const GraphPoint** active) {
  Real best = -kInf;
  for (const GraphPoint& g : pts) {
    const Real v = y.dot(g.x) + g.y.dot(x) - g.y.dot(g.x);
    if (v > best) {
      best = v;
      if (active) *active = &g;
    }
  }
  return best;
}

}  // namespace

RepFunction RepFunction::closed_affine(Vec a, Vec b) {
  require(a.size() == b.size(), "closed_affine: size mismatch");
  require((a.array() > 0).all(), "closed_affine: slopes must be positive");
  auto im = std::make_shared<Impl>();
  im->kind = RepKind::ClosedAffine;
  im->dim = a.size();
  im->a = std::move(a);
  im->b = std::move(b);
  im->cert = default_cert(-im->b.norm() * 10.0, 2, 2, 10.0);
  return RepFunction(im);
}

RepFunction RepFunction::closed_affine(Real a, Real b) {
  Vec av(1), bv(1);
  av[0] = a;
  bv[0] = b;
  return closed_affine(av, bv);
}

RepFunction RepFunction::closed_sign() {
  auto im = std::make_shared<Impl>();
  im->kind = RepKind::ClosedSign;
  im->dim = 1;
  im->cert = default_cert(0.0, 2, 2, 10.0);
  return RepFunction(im);
}

RepFunction RepFunction::closed_identity_scaled(Real a, Index dim) {
  require(a > 0, "closed_identity_scaled: a must be positive");
  auto im = std::make_shared<Impl>();
  im->kind = RepKind::ClosedIdentityScaled;
  im->dim = dim;
  im->a = Vec::Constant(dim, a);
  im->cert = default_cert(0.0, 2, 2, 10.0);
  return RepFunction(im);
}

RepFunction RepFunction::closed_fenchel(Vec a) {
  require((a.array() > 0).all(), "closed_fenchel: slopes must be positive");
  auto im = std::make_shared<Impl>();
  im->kind = RepKind::ClosedFenchel;
  im->dim = a.size();
  im->a = std::move(a);
  im->cert = default_cert(0.0, 2, 2, 10.0);
  return RepFunction(im);
}

RepFunction RepFunction::closed_fenchel(Real a, Index dim) {
  return closed_fenchel(Vec(Vec::Constant(dim, a)));
}

RepFunction RepFunction::generic_sup(const MonotoneLaw& law, int graph_samples,
                                     std::uint64_t seed, Real radius) {
  require(graph_samples >= 1, "generic_sup: needs a nonempty graph sample");
  auto im = std::make_shared<Impl>();
  im->kind = RepKind::GenericSup;
  im->dim = law.dimension();
  if (law.kind() == LawKind::TwoPhase) {
    auto [ka, kb] = law.phase_keys();
    im->samples[ka] = sample_graph(law, graph_samples, seed, radius, ka);
    im->samples[kb] = sample_graph(law, graph_samples, seed ^ 0x9e3779b9u, radius, kb);
  } else {
    im->samples[kNoPhase] = sample_graph(law, graph_samples, seed, radius);
  }
  Real lb = 0.0;
  for (const auto& [key, pts] : im->samples)
    for (const GraphPoint& g : pts)
      lb = std::min(lb, -(10.0 * g.x.norm() + 10.0 * g.y.norm() + std::abs(g.y.dot(g.x))));
  im->cert = default_cert(lb, 2, 2, 10.0);
  return RepFunction(im);
}

RepFunction RepFunction::two_phase(RepFunction f_a, RepFunction f_b, Real key_a, Real key_b) {
  require(f_a.dimension() == f_b.dimension(), "two_phase rep: dimension mismatch");
  require(key_a != key_b, "two_phase rep: phase keys must differ");
  auto im = std::make_shared<Impl>();
  im->kind = RepKind::TwoPhase;
  im->dim = f_a.dimension();
  im->branch_a = f_a.impl_;
  im->branch_b = f_b.impl_;
  im->key_a = key_a;
  im->key_b = key_b;
  if (f_a.coercivity() && f_b.coercivity()) {
    CoercivityCert cert;
    cert.c = std::min(f_a.coercivity()->c, f_b.coercivity()->c);
    cert.kbar = std::min(f_a.coercivity()->kbar, f_b.coercivity()->kbar);
    cert.radius = std::min(f_a.coercivity()->radius, f_b.coercivity()->radius);
    im->cert = cert;
  }
  return RepFunction(im);
}

RepKind RepFunction::kind() const { return impl_->kind; }
Index RepFunction::dimension() const { return impl_->dim; }
std::pair<Real, Real> RepFunction::exponents() const { return {impl_->p, impl_->q}; }

RepFunction RepFunction::with_exponents(Real p, Real q) const {
  require(p > 1 && q > 1 && std::abs(1.0 / p + 1.0 / q - 1.0) <= 1e-12,
          "with_exponents: need conjugate exponents 1/p + 1/q = 1");
  auto im = std::make_shared<Impl>(*impl_);
  im->p = p;
  im->q = q;
  return RepFunction(im);
}

std::optional<CoercivityCert> RepFunction::coercivity() const { return impl_->cert; }

RepFunction RepFunction::with_coercivity(CoercivityCert cert) const {
  auto im = std::make_shared<Impl>(*impl_);
  im->cert = cert;
  return RepFunction(im);
}

RepFunction RepFunction::without_coercivity() const {
  auto im = std::make_shared<Impl>(*impl_);
  im->cert.reset();
  return RepFunction(im);
}

bool RepFunction::smooth() const {
  switch (impl_->kind) {
    case RepKind::ClosedAffine:
    case RepKind::ClosedIdentityScaled:
    case RepKind::ClosedFenchel:
      return true;
    case RepKind::TwoPhase:
      return RepFunction(impl_->branch_a).smooth() && RepFunction(impl_->branch_b).smooth();
    default:
      return false;
  }
}

std::pair<Real, Real> RepFunction::phase_keys() const {
  require(impl_->kind == RepKind::TwoPhase, "phase_keys: two-phase rep only");
  return {impl_->key_a, impl_->key_b};
}

RepFunction RepFunction::phase_branch(Real phase) const {
  require(impl_->kind == RepKind::TwoPhase, "phase_branch: two-phase rep only");
  return RepFunction(std::abs(phase - impl_->key_a) <= std::abs(phase - impl_->key_b)
                         ? impl_->branch_a
                         : impl_->branch_b);
}

const Vec& RepFunction::quad_slope() const {
  require(impl_->kind == RepKind::ClosedAffine || impl_->kind == RepKind::ClosedIdentityScaled ||
              impl_->kind == RepKind::ClosedFenchel,
          "quad_slope: quadratic kinds only");
  return impl_->a;
}

Vec RepFunction::quad_offset() const {
  require(impl_->kind == RepKind::ClosedAffine || impl_->kind == RepKind::ClosedIdentityScaled ||
              impl_->kind == RepKind::ClosedFenchel,
          "quad_offset: quadratic kinds only");
  return impl_->kind == RepKind::ClosedAffine ? impl_->b : Vec(Vec::Zero(impl_->dim));
}

const std::vector<GraphPoint>& RepFunction::sup_sample(std::optional<Real> phase) const {
  require(impl_->kind == RepKind::GenericSup, "sup_sample: generic-sup rep only");
  if (impl_->samples.size() == 1) return impl_->samples.begin()->second;
  require(phase.has_value(), "sup_sample: phase required for two-phase backing law");
  auto it = impl_->samples.lower_bound(*phase);
  if (it == impl_->samples.end()) return std::prev(it)->second;
  if (it == impl_->samples.begin()) return it->second;
  auto prev = std::prev(it);
  return (*phase - prev->first <= it->first - *phase) ? prev->second : it->second;
}

Real RepFunction::value(const Vec& x, const Vec& y, std::optional<Real> phase) const {
  require(x.size() == impl_->dim && y.size() == impl_->dim, "fitz_eval: dimension mismatch");
  const Impl& im = *impl_;
  switch (im.kind) {
    case RepKind::ClosedAffine: {
      Real v = 0.0;
      for (Index i = 0; i < im.dim; ++i) {
        const Real r = y[i] - im.b[i] + im.a[i] * x[i];
        v += r * r / (4.0 * im.a[i]) + im.b[i] * x[i];
      }
      return v;
    }
    case RepKind::ClosedSign:
      return std::abs(y[0]) <= 1.0 ? std::abs(x[0]) : kInf;
    case RepKind::ClosedIdentityScaled: {
      const Real a = im.a[0];
      return (y + a * x).squaredNorm() / (4.0 * a);
    }
    case RepKind::ClosedFenchel: {
      Real v = 0.0;
      for (Index i = 0; i < im.dim; ++i)
        v += 0.5 * im.a[i] * x[i] * x[i] + 0.5 * y[i] * y[i] / im.a[i];
      return v;
    }
    case RepKind::GenericSup:
      return sup_value(sup_sample(phase), x, y, nullptr);
    case RepKind::TwoPhase:
      require(phase.has_value(), "fitz_eval: two-phase rep requires a phase sample");
      return phase_branch(*phase).value(x, y, phase);
  }
  return kInf;
}

Real RepFunction::value_with_gradient(const Vec& x, const Vec& y, std::optional<Real> phase,
                                      Vec& gx, Vec& gy) const {
  const Impl& im = *impl_;
  gx.resize(im.dim);
  gy.resize(im.dim);
  switch (im.kind) {
    case RepKind::ClosedAffine: {
      Real v = 0.0;
      for (Index i = 0; i < im.dim; ++i) {
        const Real r = y[i] - im.b[i] + im.a[i] * x[i];
        v += r * r / (4.0 * im.a[i]) + im.b[i] * x[i];
        gx[i] = 0.5 * r + im.b[i];
        gy[i] = r / (2.0 * im.a[i]);
      }
      return v;
    }
    case RepKind::ClosedIdentityScaled: {
      const Real a = im.a[0];
      Vec r = y + a * x;
      gx = 0.5 * r;
      gy = r / (2.0 * a);
      return r.squaredNorm() / (4.0 * a);
    }
    case RepKind::ClosedFenchel: {
      Real v = 0.0;
      for (Index i = 0; i < im.dim; ++i) {
        v += 0.5 * im.a[i] * x[i] * x[i] + 0.5 * y[i] * y[i] / im.a[i];
        gx[i] = im.a[i] * x[i];
        gy[i] = y[i] / im.a[i];
      }
      return v;
    }
    case RepKind::GenericSup: {
      const GraphPoint* active = nullptr;
      const Real v = sup_value(sup_sample(phase), x, y, &active);
      gx = active->y;
      gy = active->x;
      return v;
    }
    case RepKind::TwoPhase:
      require(phase.has_value(), "rep gradient: two-phase rep requires a phase sample");
      return phase_branch(*phase).value_with_gradient(x, y, phase, gx, gy);
    case RepKind::ClosedSign:
      throw SolverFailure("closed-sign representative has no classical gradient");
  }
  return kInf;
}

Real representation_gap(const RepFunction& f, const Vec& x, const Vec& y,
                        std::optional<Real> phase) {
  const Real v = f.value(x, y, phase);
  if (v == kInf) return kInf;
  const Real gap = v - y.dot(x);
  if (gap >= 0) return gap;
  if (gap >= -1e-12) return 0.0;
  throw ClassFViolation("representative function dips below the duality pairing (gap " +
                        std::to_string(gap) + ")");
}

namespace {

// Subgradient polish for the piecewise-linear generic-sup kind.  The raw
// difference f - <y,x> is used directly: for a finite-sample supremum it can
// be legitimately negative near unsampled graph points.
std::optional<ValueSet> recover_generic(const RepFunction& f, const Vec& x,
                                        std::optional<Real> phase, Real gap_tol) {
  const auto& pts = f.sup_sample(phase);
  auto raw_gap = [&](const Vec& y) { return f.value(x, y, phase) - y.dot(x); };
  // Start from the sampled point whose input is closest to x.
  const GraphPoint* nearest = &pts.front();
  for (const GraphPoint& g : pts)
    if ((g.x - x).norm() < (nearest->x - x).norm()) nearest = &g;
  Vec y = nearest->y;
  Vec best_y = y;
  Real best = raw_gap(y);
  for (int it = 0; it < 500 && best > gap_tol; ++it) {
    const GraphPoint* active = nullptr;
    sup_value(pts, x, y, &active);
    Vec sub = active->x - x;  // subgradient of f(x,.) - <.,x>
    const Real n2 = sub.squaredNorm();
    if (n2 == 0.0) break;
    y -= (raw_gap(y) / n2) * sub;  // Polyak step toward gap 0
    const Real qn = raw_gap(y);
    if (qn < best) {
      best = qn;
      best_y = y;
    }
  }
  if (best > gap_tol) return std::nullopt;
  return ValueSet::singleton(best_y);
}

}  // namespace

std::optional<ValueSet> recover_graph(const RepFunction& f, const Vec& x,
                                      std::optional<Real> phase, Real gap_tol) {
  require(x.size() == f.dimension(), "recover_graph: dimension mismatch");
  switch (f.kind()) {
    case RepKind::ClosedAffine:
      // Stationarity of (y-b+ax)^2/(4a) - xy in y gives y = a x + b, gap 0.
      return ValueSet::singleton(
          Vec(f.impl_->a.array() * x.array() + f.impl_->b.array()));
    case RepKind::ClosedIdentityScaled:
    case RepKind::ClosedFenchel:
      // Both kinds represent the linear law y = a x.
      return ValueSet::singleton(Vec(f.impl_->a.array() * x.array()));
    case RepKind::ClosedSign: {
      // Minimize |x| - x y over |y| <= 1: recovery maximalizes the paper's
      // example operator.
      Vec y(1);
      if (x[0] > 0)
        y[0] = 1.0;
      else if (x[0] < 0)
        y[0] = -1.0;
      else {
        Vec lo(1), hi(1);
        lo[0] = -1.0;
        hi[0] = 1.0;
        return ValueSet::box(lo, hi);
      }
      return ValueSet::singleton(y);
    }
    case RepKind::GenericSup:
      return recover_generic(f, x, phase, gap_tol);
    case RepKind::TwoPhase:
      require(phase.has_value(), "recover_graph: two-phase rep requires a phase sample");
      return recover_graph(f.phase_branch(*phase), x, phase, gap_tol);
  }
  return std::nullopt;
}

RepresentativeReport check_representative(const RepFunction& f, const MonotoneLaw& law,
                                          int sample_count, std::uint64_t seed) {
  require(f.dimension() == law.dimension(), "check_representative: dimension mismatch");
  CounterRng rng(seed);
  RepresentativeReport rep;

  std::vector<std::optional<Real>> phases;
  if (law.kind() == LawKind::TwoPhase) {
    auto [ka, kb] = law.phase_keys();
    phases = {ka, kb};
  } else {
    phases = {std::nullopt};
  }

  std::vector<GraphPoint> recovered;
  std::uint64_t ctr = 0;
  for (const auto& phase : phases) {
    auto pts = sample_graph(law, sample_count, rng.fork(ctr).seed(), 2.0, phase);
    for (const GraphPoint& g : pts) {
      rep.max_graph_gap = std::max(rep.max_graph_gap, representation_gap(f, g.x, g.y, phase));
      Vec dir = rng.normal_vec(ctr * 1000 + 17, f.dimension());
      if (dir.norm() == 0) dir = Vec::Ones(f.dimension());
      dir.normalize();
      Vec y_off = g.y + (0.5 + rng.uniform(ctr * 1000 + 18)) * dir;
      rep.off_graph_min_gap =
          std::min(rep.off_graph_min_gap, representation_gap(f, g.x, y_off, phase));
      if (auto rec = recover_graph(f, g.x, phase))
        recovered.push_back({g.x, rec->representative(), !rec->is_singleton()});
      ++ctr;
    }
  }

  rep.monotone_recovered = true;
  for (std::size_t i = 0; i < recovered.size() && rep.monotone_recovered; ++i) {
    for (std::size_t j = i + 1; j < recovered.size(); ++j) {
      const Vec dx = recovered[j].x - recovered[i].x;
      if (dx.squaredNorm() == 0) continue;
      if ((recovered[j].y - recovered[i].y).dot(dx) < -1e-12) {
        rep.monotone_recovered = false;
        break;
      }
    }
  }
  return rep;
}

}  // namespace effectop
