#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "effectop/random_media.hpp"

using namespace effectop;

namespace {

MediumSpec checkerboard14(int d) {
  MediumSpec spec;
  spec.kind = MediumSpec::Kind::Checkerboard;
  spec.d = d;
  spec.values = {1.0, 4.0};
  spec.probs = {0.5, 0.5};
  return spec;
}

}  // namespace

TEST_CASE("constant medium fills every cell") {
  MediumSpec spec;
  spec.kind = MediumSpec::Kind::Constant;
  spec.d = 2;
  spec.value = 2.5;
  auto r = sample_realization(spec, 42, PeriodicGrid::make(2, 16));
  CHECK((r.coefficients.values() == 2.5).all());
}

TEST_CASE("checkerboard phase fraction concentrates (binomial oracle)") {
  // With N^2 = 65536 iid cells, 4 sigma of the fraction is about 0.0078.
  auto r = sample_realization(checkerboard14(2), 7, PeriodicGrid::make(2, 256));
  const Real fraction =
      (r.coefficients.values() == 1.0).cast<Real>().sum() / r.grid.cell_count();
  CHECK(std::abs(fraction - 0.5) <= 0.01);
}

TEST_CASE("layered medium is constant along the orthogonal axis") {
  MediumSpec spec = checkerboard14(2);
  spec.kind = MediumSpec::Kind::Layered;
  spec.axis = 0;
  PeriodicGrid g = PeriodicGrid::make(2, 32);
  auto r = sample_realization(spec, 11, g);
  for (int i = 0; i < g.n_side; ++i) {
    const Real first = r.coefficients.values()(g.flatten({i, 0, 0}), 0);
    for (int j = 1; j < g.n_side; ++j)
      CHECK(r.coefficients.values()(g.flatten({i, j, 0}), 0) == first);
  }
}

TEST_CASE("iid cells follow the requested distribution mean") {
  MediumSpec spec;
  spec.kind = MediumSpec::Kind::IidCells;
  spec.d = 2;
  spec.dist.kind = CellDistribution::Kind::TwoPoint;
  spec.dist.a = 0.0;
  spec.dist.b = 1.0;
  spec.dist.prob_b = 0.3;
  CHECK(spec.expected_value() == doctest::Approx(0.3));
  auto r = sample_realization(spec, 13, PeriodicGrid::make(2, 128));
  CHECK(std::abs(r.coefficients.values().mean() - 0.3) <= 0.02);
}

TEST_CASE("seed determinism: identical inputs give bit-identical fields") {
  PeriodicGrid g = PeriodicGrid::make(2, 64);
  auto a = sample_realization(checkerboard14(2), 1234, g);
  auto b = sample_realization(checkerboard14(2), 1234, g);
  CHECK((a.coefficients.values() == b.coefficients.values()).all());
  CHECK(a.offset == b.offset);
  auto c = sample_realization(checkerboard14(2), 1235, g);
  CHECK(!(a.coefficients.values() == c.coefficients.values()).all());
}

TEST_CASE("shift action satisfies the group law bit-exactly") {
  auto r = sample_realization(checkerboard14(2), 99, PeriodicGrid::make(2, 32));
  CHECK(shift_check(r, {1, 0, 0}, {0, 1, 0}));
  CHECK(shift_check(r, {32, 0, 0}, {0, 0, 0}));  // full-period shift = identity
  CHECK(shift_check(r, {3, 2, 0}, {-3, -2, 0}));
  // Identity shift really is the identity.
  CHECK((shift_field(r.coefficients, {32, 0, 0}).values() == r.coefficients.values()).all());
}

TEST_CASE("single-cell histogram is invariant under lattice shifts") {
  auto r = sample_realization(checkerboard14(2), 55, PeriodicGrid::make(2, 32));
  auto histogram = [](const DiscreteField& f) {
    std::map<Real, int> h;
    for (Index c = 0; c < f.values().rows(); ++c) ++h[f.values()(c, 0)];
    return h;
  };
  auto shifted = shift_field(r.coefficients, {5, 11, 0});
  CHECK(histogram(r.coefficients) == histogram(shifted));
}

TEST_CASE("birkhoff averages: constant medium is exact") {
  MediumSpec spec;
  spec.kind = MediumSpec::Kind::Constant;
  spec.d = 2;
  spec.value = 2.5;
  auto table = birkhoff_average(
      spec, [](Real v) { return v; }, {4, 8, 16}, 4, 5, PeriodicGrid::make(2, 16));
  for (const auto& row : table) {
    CHECK(row.mean == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(row.stderr_ == doctest::Approx(0.0));
  }
}

TEST_CASE("birkhoff averages: checkerboard mean with shrinking stderr") {
  auto table = birkhoff_average(
      checkerboard14(2), [](Real v) { return v; }, {8, 16, 32, 64, 128}, 16, 2026,
      PeriodicGrid::make(2, 128));
  const Real expected = 2.5;
  for (std::size_t i = 1; i < table.size(); ++i) CHECK(table[i].stderr_ < table[i - 1].stderr_);
  const auto& last = table.back();
  CHECK(std::abs(last.mean - expected) <= 4.0 * last.stderr_);
}

TEST_CASE("birkhoff averages: Bernoulli indicator hits its expectation") {
  MediumSpec spec;
  spec.kind = MediumSpec::Kind::IidCells;
  spec.d = 2;
  spec.dist.kind = CellDistribution::Kind::TwoPoint;
  spec.dist.a = 0.0;
  spec.dist.b = 1.0;
  spec.dist.prob_b = 0.3;
  auto table = birkhoff_average(
      spec, [](Real v) { return v > 0.5 ? 1.0 : 0.0; }, {16, 64}, 12, 31, PeriodicGrid::make(2, 64));
  const auto& last = table.back();
  CHECK(std::abs(last.mean - 0.3) <= 4.0 * last.stderr_);
}

TEST_CASE("windows must fit the grid") {
  CHECK_THROWS(birkhoff_average(
      checkerboard14(2), [](Real v) { return v; }, {64}, 4, 1, PeriodicGrid::make(2, 32)));
}

TEST_CASE("probabilities must sum to one") {
  MediumSpec spec = checkerboard14(2);
  spec.probs = {0.7, 0.7};
  CHECK_THROWS(sample_realization(spec, 1, PeriodicGrid::make(2, 16)));
}
