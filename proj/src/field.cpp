#include "effectop/field.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace effectop {

PeriodicGrid PeriodicGrid::make(int d, int n_side) {
  require(d >= 1 && d <= 3, "grid: dimension must be 1, 2 or 3");
  require(n_side >= 4, "grid: need at least 4 cells per side");
  require((n_side & (n_side - 1)) == 0, "grid: cells per side must be a power of two");
  return PeriodicGrid{d, n_side};
}

DiscreteField DiscreteField::from_values(PeriodicGrid grid, Eigen::ArrayXXd values) {
  require(values.rows() == grid.cell_count(), "field: cell count mismatch");
  require(values.allFinite(), "field: non-finite entries");
  DiscreteField f;
  f.grid_ = grid;
  f.values_ = std::move(values);
  return f;
}

DiscreteField sample_field(const PeriodicGrid& grid, Index components,
                           const std::function<Vec(const std::array<Real, 3>&)>& fn) {
  DiscreteField f(grid, components);
  for (Index c = 0; c < grid.cell_count(); ++c) {
    Vec v = fn(grid.center(c));
    f.values().row(c) = v.transpose().array();
  }
  return f;
}

DiscreteField shift_field(const DiscreteField& f, const std::array<int, 3>& shift) {
  const PeriodicGrid& g = f.grid();
  DiscreteField out(g, f.components());
  for (Index c = 0; c < g.cell_count(); ++c) {
    auto idx = g.unflatten(c);
    std::array<int, 3> src = idx;
    for (int k = 0; k < g.d; ++k) src[k] = idx[k] - shift[k];
    out.values().row(c) = f.values().row(g.flatten(src));
  }
  return out;
}

void write_field(std::ostream& os, const DiscreteField& f) {
  os << f.grid().d << ' ' << f.grid().n_side << ' ' << f.components() << '\n';
  char buf[32];
  for (Index c = 0; c < f.values().rows(); ++c) {
    for (Index j = 0; j < f.components(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", f.values()(c, j));
      if (j) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

DiscreteField read_field(std::istream& is) {
  int d = 0, n_side = 0;
  Index comps = 0;
  is >> d >> n_side >> comps;
  require(static_cast<bool>(is), "field read: malformed header");
  PeriodicGrid g = PeriodicGrid::make(d, n_side);
  Eigen::ArrayXXd vals(g.cell_count(), comps);
  for (Index c = 0; c < vals.rows(); ++c)
    for (Index j = 0; j < comps; ++j) {
      is >> vals(c, j);
      require(static_cast<bool>(is), "field read: truncated data");
    }
  return DiscreteField::from_values(g, std::move(vals));
}

void write_field_file(const std::string& path, const DiscreteField& f) {
  std::ofstream os(path);
  require(static_cast<bool>(os), "cannot open for write: " + path);
  write_field(os, f);
}

DiscreteField read_field_file(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "cannot open for read: " + path);
  return read_field(is);
}

}  // namespace effectop
