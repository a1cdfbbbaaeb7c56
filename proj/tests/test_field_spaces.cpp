#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "effectop/field.hpp"
#include "effectop/rng.hpp"
#include "effectop/spectral.hpp"

using namespace effectop;

namespace {

DiscreteField random_field(const PeriodicGrid& g, Index comps, std::uint64_t seed) {
  CounterRng rng(seed);
  DiscreteField f(g, comps);
  for (Index c = 0; c < g.cell_count(); ++c)
    for (Index j = 0; j < comps; ++j) f.values()(c, j) = rng.normal(c * comps + j);
  return f;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK_THROWS(PeriodicGrid::make(0, 8));
  CHECK_THROWS(PeriodicGrid::make(2, 3));
  CHECK_THROWS(PeriodicGrid::make(2, 24));  // not a power of two
  CHECK(PeriodicGrid::make(3, 8).cell_count() == 512);
}

TEST_CASE("split of a constant field is pure mean") {
  PeriodicGrid g = PeriodicGrid::make(2, 16);
  DiscreteField f(g, 2);
  f.values().col(0).setConstant(3.0);
  f.values().col(1).setConstant(-1.0);
  auto parts = helmholtz_split(f);
  CHECK(parts.mean[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(parts.mean[1] == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(parts.potential.values().abs().maxCoeff() <= 1e-13);
  CHECK(parts.solenoidal.values().abs().maxCoeff() <= 1e-13);
}

TEST_CASE("split recognizes an analytic gradient as purely potential") {
  PeriodicGrid g = PeriodicGrid::make(2, 64);
  // field = grad phi with phi = sin(2 pi x1): (2 pi cos(2 pi x1), 0)
  auto f = sample_field(g, 2, [](const std::array<Real, 3>& x) {
    Vec v(2);
    v << 2.0 * M_PI * std::cos(2.0 * M_PI * x[0]), 0.0;
    return v;
  });
  auto parts = helmholtz_split(f);
  CHECK(parts.mean.norm() <= 1e-12);
  CHECK(parts.solenoidal.values().abs().maxCoeff() <= 1e-10);
}

TEST_CASE("split recognizes a stream-function field as purely solenoidal") {
  PeriodicGrid g = PeriodicGrid::make(2, 64);
  // field = (-d2 psi, d1 psi) with psi = sin(2 pi x1) sin(2 pi x2)
  auto f = sample_field(g, 2, [](const std::array<Real, 3>& x) {
    const Real s1 = std::sin(2 * M_PI * x[0]), c1 = std::cos(2 * M_PI * x[0]);
    const Real s2 = std::sin(2 * M_PI * x[1]), c2 = std::cos(2 * M_PI * x[1]);
    Vec v(2);
    v << -2.0 * M_PI * s1 * c2, 2.0 * M_PI * c1 * s2;
    return v;
  });
  auto parts = helmholtz_split(f);
  CHECK(parts.mean.norm() <= 1e-12);
  CHECK(parts.potential.values().abs().maxCoeff() <= 1e-10);
}

TEST_CASE("split is an exact idempotent decomposition") {
  for (int d : {1, 2, 3}) {
    PeriodicGrid g = PeriodicGrid::make(d, d == 3 ? 16 : 32);
    DiscreteField f = random_field(g, d, 100 + d);
    auto parts = helmholtz_split(f);

    // Exact reconstruction.
    Eigen::ArrayXXd recon = parts.potential.values() + parts.solenoidal.values();
    recon.rowwise() += parts.mean.transpose().array();
    CHECK((recon - f.values()).abs().maxCoeff() <= 1e-12);

    // Idempotence.
    auto pot2 = helmholtz_split(parts.potential);
    CHECK(pot2.mean.norm() <= 1e-12);
    CHECK(pot2.solenoidal.values().abs().maxCoeff() <= 1e-12);
    CHECK((pot2.potential.values() - parts.potential.values()).abs().maxCoeff() <= 1e-12);
    auto sol2 = helmholtz_split(parts.solenoidal);
    CHECK(sol2.mean.norm() <= 1e-12);
    CHECK(sol2.potential.values().abs().maxCoeff() <= 1e-12);

    // Parseval: mean-square splits across the orthogonal parts.
    const Real total = f.values().square().sum();
    const Real sum = parts.potential.values().square().sum() +
                     parts.solenoidal.values().square().sum() +
                     parts.mean.squaredNorm() * g.cell_count();
    CHECK(total == doctest::Approx(sum).epsilon(1e-10));
  }
}

TEST_CASE("pairing factorizes through the means") {
  PeriodicGrid g = PeriodicGrid::make(2, 32);
  CounterRng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    auto parts_u = helmholtz_split(random_field(g, 2, 1000 + trial));
    auto parts_v = helmholtz_split(random_field(g, 2, 2000 + trial));
    Vec xi = rng.normal_vec(2 * trial, 2);
    Vec eta = rng.normal_vec(2 * trial + 1, 2);

    DiscreteField u = parts_u.solenoidal;  // mean xi + divergence-free part
    u.values().rowwise() += xi.transpose().array();
    DiscreteField v = parts_v.potential;   // mean eta + curl-free part
    v.values().rowwise() += eta.transpose().array();

    CHECK(pairing_mean(u, v) == doctest::Approx(xi.dot(eta)).epsilon(1e-10));
  }
}

TEST_CASE("pairing of pot and sol parts of the same field vanishes") {
  PeriodicGrid g = PeriodicGrid::make(2, 32);
  auto parts = helmholtz_split(random_field(g, 2, 3003));
  CHECK(std::abs(pairing_mean(parts.potential, parts.solenoidal)) <= 1e-12);
}

TEST_CASE("pairing of constants is the plain product") {
  PeriodicGrid g = PeriodicGrid::make(1, 8);
  DiscreteField u(g, 1), v(g, 1);
  u.values().setConstant(2.5);
  v.values().setConstant(2.5);
  CHECK(pairing_mean(u, v) == 2.5 * 2.5);
}

TEST_CASE("mean-zero norm bound: p = 2 is Pythagoras") {
  PeriodicGrid g = PeriodicGrid::make(2, 32);
  DiscreteField f = random_field(g, 2, 404);
  Vec xi(2);
  xi << 1.0, 0.0;
  auto rep = mean_zero_norm_bound(f, xi, 2.0);
  CHECK(rep.c_empirical == doctest::Approx(1.0).epsilon(1e-12));

  DiscreteField zero(g, 2);
  Vec xi2(2);
  xi2 << 2.0, 0.0;
  auto rep2 = mean_zero_norm_bound(zero, xi2, 2.0);
  CHECK(rep2.lhs == doctest::Approx(4.0));
  CHECK(rep2.rhs == doctest::Approx(4.0));
}

TEST_CASE("mean-zero norm bound: p = 4 sine field matches the moment oracle") {
  PeriodicGrid g = PeriodicGrid::make(2, 64);
  auto f = sample_field(g, 2, [](const std::array<Real, 3>& x) {
    Vec v(2);
    v << std::sin(2 * M_PI * x[0]), std::sin(2 * M_PI * x[1]);
    return v;
  });
  Vec xi(2);
  xi << 1.0, 0.0;
  auto rep = mean_zero_norm_bound(f, xi, 4.0);
  CHECK(rep.c_empirical > 0.0);
  // Sine moments: avg|xi+u|^4 = 6.25 and avg|u|^4 = 1.25, so C = 25/9.
  CHECK(rep.lhs == doctest::Approx(6.25).epsilon(1e-12));
  CHECK(rep.rhs == doctest::Approx(2.25).epsilon(1e-12));
  CHECK(rep.c_empirical == doctest::Approx(25.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("field dump round-trips losslessly") {
  PeriodicGrid g = PeriodicGrid::make(2, 8);
  DiscreteField f = random_field(g, 3, 777);
  std::stringstream ss;
  write_field(ss, f);
  DiscreteField f2 = read_field(ss);
  CHECK(f2.grid().d == 2);
  CHECK(f2.grid().n_side == 8);
  CHECK((f2.values() == f.values()).all());  // bit-exact at 17 significant digits

  std::string header;
  std::stringstream ss2;
  write_field(ss2, f);
  std::getline(ss2, header);
  CHECK(header == "2 8 3");
}

TEST_CASE("torus calculus: gradient, divergence and Poisson agree on a mode") {
  PeriodicGrid g = PeriodicGrid::make(2, 32);
  auto psi = sample_field(g, 1, [](const std::array<Real, 3>& x) {
    Vec v(1);
    v[0] = std::sin(2 * M_PI * x[0]) * std::sin(2 * M_PI * x[1]);
    return v;
  });
  DiscreteField grad = spectral_gradient(psi);
  auto grad_exact = sample_field(g, 2, [](const std::array<Real, 3>& x) {
    Vec v(2);
    v << 2 * M_PI * std::cos(2 * M_PI * x[0]) * std::sin(2 * M_PI * x[1]),
        2 * M_PI * std::sin(2 * M_PI * x[0]) * std::cos(2 * M_PI * x[1]);
    return v;
  });
  CHECK((grad.values() - grad_exact.values()).abs().maxCoeff() <= 1e-10);

  // div grad = Laplacian; Poisson inverts it back to psi (zero-mean).
  DiscreteField lap = spectral_divergence(grad);
  DiscreteField back = poisson_solve_torus(lap);
  CHECK((back.values() - psi.values()).abs().maxCoeff() <= 1e-10);

  // perp-gradient fields are exactly divergence-free.
  DiscreteField jp = perp_gradient(psi);
  CHECK(spectral_divergence(jp).values().abs().maxCoeff() <= 1e-10);
  // curl of the perp-gradient is the Laplacian of psi.
  DiscreteField curl = spectral_curl2(jp);
  CHECK((curl.values() - lap.values()).abs().maxCoeff() <= 1e-10);
}
