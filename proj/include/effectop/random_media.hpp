#pragma once

#include <array>
#include <functional>
#include <vector>

#include "effectop/field.hpp"
#include "effectop/rng.hpp"

namespace effectop {

/// Per-cell distribution for IID_CELLS media.
struct CellDistribution {
  enum class Kind { TwoPoint, Uniform };
  Kind kind = Kind::TwoPoint;
  Real a = 0.0, b = 1.0;  // the two values, or the uniform bounds
  Real prob_b = 0.5;      // TwoPoint only

  Real draw(Real u) const {
    return kind == Kind::TwoPoint ? (u < prob_b ? b : a) : a + (b - a) * u;
  }
  Real expected() const {
    return kind == Kind::TwoPoint ? (1 - prob_b) * a + prob_b * b : 0.5 * (a + b);
  }
};

/// Stationary ergodic coefficient fields: the probability space is surrogated
/// by finite periodized ensembles; the shift group acts by lattice shifts plus
/// a uniform sub-cell offset per realization.
struct MediumSpec {
  enum class Kind { Constant, Layered, Checkerboard, IidCells };
  Kind kind = Kind::Constant;
  int d = 1;
  Real value = 1.0;                       // Constant
  int axis = 0;                           // Layered: medium varies along this axis
  std::array<Real, 2> values{1.0, 1.0};   // two-phase values
  std::array<Real, 2> probs{0.5, 0.5};    // two-phase probabilities (sum 1)
  CellDistribution dist;                  // IidCells

  void validate() const;
  Real expected_value() const;
};

struct Realization {
  MediumSpec spec;
  std::uint64_t seed = 0;
  PeriodicGrid grid;
  Vec offset;                  // sub-cell shift in [0,1)^d, cell units
  DiscreteField coefficients;  // scalar lattice view (offset folded in)
};

/// Deterministic function of (spec, seed, grid): same seed, bit-identical field.
Realization sample_realization(const MediumSpec& spec, std::uint64_t seed,
                               const PeriodicGrid& grid);

/// Coefficient at a continuum point given in lattice units (pde solvers pass
/// x/epsilon); the sub-cell offset enters exactly here.
Real realization_value_at(const Realization& r, const std::array<Real, 3>& lattice_point);

/// Group law of the shift action: shifting by x then y equals shifting by x+y,
/// bit-exact under periodic wraparound.
bool shift_check(const Realization& r, const std::array<int, 3>& x,
                 const std::array<int, 3>& y);

struct BirkhoffRow {
  int window = 0;
  Real mean = 0.0;
  Real stderr_ = 0.0;
};

/// Window averages of a cell observable over M realizations: one row per
/// window size, with the across-realization standard error of the mean.
std::vector<BirkhoffRow> birkhoff_average(const MediumSpec& spec,
                                          const std::function<Real(Real)>& observable,
                                          const std::vector<int>& windows, int realizations,
                                          std::uint64_t master_seed, const PeriodicGrid& grid);

}  // namespace effectop
