#pragma once

#include <array>
#include <functional>
#include <iosfwd>

#include "effectop/common.hpp"

namespace effectop {

/// Uniform grid on the unit torus [0,1)^d with N cells per side, N a power of
/// two, N >= 4, d in {1,2,3}.
struct PeriodicGrid {
  int d = 1;
  int n_side = 4;

  static PeriodicGrid make(int d, int n_side);

  Real spacing() const { return 1.0 / n_side; }
  Index cell_count() const {
    Index c = 1;
    for (int k = 0; k < d; ++k) c *= n_side;
    return c;
  }

  /// Row-major flattening, last axis fastest.
  Index flatten(const std::array<int, 3>& idx) const {
    Index f = 0;
    for (int k = 0; k < d; ++k) f = f * n_side + ((idx[k] % n_side + n_side) % n_side);
    return f;
  }
  std::array<int, 3> unflatten(Index flat) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(flat % n_side);
      flat /= n_side;
    }
    return idx;
  }
  /// Cell-center coordinates.
  std::array<Real, 3> center(Index flat) const {
    auto idx = unflatten(flat);
    std::array<Real, 3> x{0, 0, 0};
    for (int k = 0; k < d; ++k) x[k] = (idx[k] + 0.5) * spacing();
    return x;
  }

  bool operator==(const PeriodicGrid&) const = default;
};

/// An n-component field sampled per grid cell; values shape (N^d, n).
class DiscreteField {
 public:
  DiscreteField() = default;
  DiscreteField(PeriodicGrid grid, Index components)
      : grid_(grid), values_(Eigen::ArrayXXd::Zero(grid.cell_count(), components)) {}
  static DiscreteField from_values(PeriodicGrid grid, Eigen::ArrayXXd values);

  const PeriodicGrid& grid() const { return grid_; }
  Index components() const { return values_.cols(); }
  Eigen::ArrayXXd& values() { return values_; }
  const Eigen::ArrayXXd& values() const { return values_; }

  Vec mean() const {
    return values_.colwise().mean().matrix().transpose();
  }
  Vec at(Index cell) const { return values_.row(cell).matrix().transpose(); }

  DiscreteField& operator+=(const DiscreteField& o) {
    values_ += o.values_;
    return *this;
  }
  DiscreteField& operator-=(const DiscreteField& o) {
    values_ -= o.values_;
    return *this;
  }

 private:
  PeriodicGrid grid_;
  Eigen::ArrayXXd values_;
};

/// Sample a vector-valued function of the cell center into a field.
DiscreteField sample_field(const PeriodicGrid& grid, Index components,
                           const std::function<Vec(const std::array<Real, 3>&)>& fn);

/// Cyclic lattice shift: out(i) = in(i - shift) per axis, periodic wraparound.
DiscreteField shift_field(const DiscreteField& f, const std::array<int, 3>& shift);

/// Dump format: header line "d N n", then N^d rows of n decimals in row-major
/// cell order, 17 significant digits (lossless round trip for doubles).
void write_field(std::ostream& os, const DiscreteField& f);
DiscreteField read_field(std::istream& is);
void write_field_file(const std::string& path, const DiscreteField& f);
DiscreteField read_field_file(const std::string& path);

}  // namespace effectop
