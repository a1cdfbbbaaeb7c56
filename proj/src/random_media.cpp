#include "effectop/random_media.hpp"

#include <cmath>

namespace effectop {

namespace {
constexpr std::uint64_t kOffsetTag = 0x0ff5e7;
constexpr std::uint64_t kCellsTag = 0xce115;
}  // namespace

void MediumSpec::validate() const {
  require(d >= 1 && d <= 3, "medium: dimension must be 1..3");
  switch (kind) {
    case Kind::Layered:
      require(axis >= 0 && axis < d, "medium: layer axis out of range");
      [[fallthrough]];
    case Kind::Checkerboard:
      require(std::abs(probs[0] + probs[1] - 1.0) <= 1e-12, "medium: probabilities must sum to 1");
      require(probs[0] >= 0 && probs[1] >= 0, "medium: probabilities must be nonnegative");
      break;
    case Kind::Constant:
    case Kind::IidCells:
      break;
  }
}

Real MediumSpec::expected_value() const {
  switch (kind) {
    case Kind::Constant:
      return value;
    case Kind::Layered:
    case Kind::Checkerboard:
      return probs[0] * values[0] + probs[1] * values[1];
    case Kind::IidCells:
      return dist.expected();
  }
  return 0.0;
}

Realization sample_realization(const MediumSpec& spec, std::uint64_t seed,
                               const PeriodicGrid& grid) {
  spec.validate();
  require(grid.d == spec.d, "sample_realization: grid dimension mismatch");
  CounterRng rng(seed);
  CounterRng offset_rng = rng.fork(kOffsetTag);
  CounterRng cell_rng = rng.fork(kCellsTag);

  Realization r;
  r.spec = spec;
  r.seed = seed;
  r.grid = grid;
  r.offset = Vec(grid.d);
  for (int k = 0; k < grid.d; ++k) r.offset[k] = offset_rng.uniform(k);

  // Draw the pattern with independent cells (independent layers for LAYERED),
  // then apply the offset-induced lattice shift of the cell-center samples.
  DiscreteField base(grid, 1);
  const int N = grid.n_side;
  switch (spec.kind) {
    case MediumSpec::Kind::Constant:
      base.values().setConstant(spec.value);
      break;
    case MediumSpec::Kind::Layered: {
      std::vector<Real> layer(N);
      for (int i = 0; i < N; ++i)
        layer[i] = cell_rng.uniform(i) < spec.probs[0] ? spec.values[0] : spec.values[1];
      for (Index c = 0; c < grid.cell_count(); ++c)
        base.values()(c, 0) = layer[grid.unflatten(c)[spec.axis]];
      break;
    }
    case MediumSpec::Kind::Checkerboard:
      for (Index c = 0; c < grid.cell_count(); ++c)
        base.values()(c, 0) =
            cell_rng.uniform(c) < spec.probs[0] ? spec.values[0] : spec.values[1];
      break;
    case MediumSpec::Kind::IidCells:
      for (Index c = 0; c < grid.cell_count(); ++c)
        base.values()(c, 0) = spec.dist.draw(cell_rng.uniform(c));
      break;
  }

  std::array<int, 3> shift{0, 0, 0};
  for (int k = 0; k < grid.d; ++k) shift[k] = r.offset[k] > 0.5 ? 1 : 0;
  r.coefficients = shift_field(base, shift);
  return r;
}

Real realization_value_at(const Realization& r, const std::array<Real, 3>& lattice_point) {
  std::array<int, 3> idx{0, 0, 0};
  for (int k = 0; k < r.grid.d; ++k) {
    // The lattice view already carries the offset shift; index relative to it.
    const Real t = lattice_point[k] - r.offset[k] + (r.offset[k] > 0.5 ? 1.0 : 0.0);
    idx[k] = static_cast<int>(std::floor(t));
  }
  return r.coefficients.values()(r.grid.flatten(idx), 0);
}

bool shift_check(const Realization& r, const std::array<int, 3>& x,
                 const std::array<int, 3>& y) {
  DiscreteField two_steps = shift_field(shift_field(r.coefficients, x), y);
  std::array<int, 3> xy{0, 0, 0};
  for (int k = 0; k < 3; ++k) xy[k] = x[k] + y[k];
  DiscreteField one_step = shift_field(r.coefficients, xy);
  return (two_steps.values() == one_step.values()).all();
}

std::vector<BirkhoffRow> birkhoff_average(const MediumSpec& spec,
                                          const std::function<Real(Real)>& observable,
                                          const std::vector<int>& windows, int realizations,
                                          std::uint64_t master_seed, const PeriodicGrid& grid) {
  require(realizations >= 2, "birkhoff_average: need at least two realizations");
  for (int K : windows)
    require(K >= 1 && K <= grid.n_side, "birkhoff_average: window exceeds grid");

  CounterRng rng(master_seed);
  std::vector<Realization> ensemble;
  ensemble.reserve(realizations);
  for (int m = 0; m < realizations; ++m)
    ensemble.push_back(sample_realization(spec, rng.fork(m).seed(), grid));

  std::vector<BirkhoffRow> table;
  table.reserve(windows.size());
  for (int K : windows) {
    std::vector<Real> means(realizations, 0.0);
    for (int m = 0; m < realizations; ++m) {
      Real acc = 0.0;
      Index count = 0;
      // K-window at the origin, full d-dimensional box.
      std::array<int, 3> idx{0, 0, 0};
      const int k1 = grid.d > 1 ? K : 1;
      const int k2 = grid.d > 2 ? K : 1;
      for (int i0 = 0; i0 < K; ++i0)
        for (int i1 = 0; i1 < k1; ++i1)
          for (int i2 = 0; i2 < k2; ++i2) {
            idx = {i0, i1, i2};
            acc += observable(ensemble[m].coefficients.values()(grid.flatten(idx), 0));
            ++count;
          }
      means[m] = acc / count;
    }
    Real mu = 0;
    for (Real v : means) mu += v;
    mu /= realizations;
    Real var = 0;
    for (Real v : means) var += (v - mu) * (v - mu);
    var /= (realizations - 1);
    table.push_back({K, mu, std::sqrt(var / realizations)});
  }
  return table;
}

}  // namespace effectop
