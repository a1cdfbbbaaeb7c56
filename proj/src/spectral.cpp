#include "effectop/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <vector>

namespace effectop {

namespace {

using Cplx = std::complex<Real>;
using Spectrum = std::vector<Cplx>;

Eigen::FFT<Real>& fft_engine() {
  thread_local Eigen::FFT<Real> fft;
  return fft;
}

// In-place FFT along every axis of the row-major (last axis fastest) array.
void fft_nd(const PeriodicGrid& g, Spectrum& data, bool inverse) {
  const int N = g.n_side;
  const Index cells = g.cell_count();
  std::vector<Cplx> line(N), lout(N);
  Index stride = 1;
  for (int axis = g.d - 1; axis >= 0; --axis) {
    const Index nlines = cells / N;
    for (Index l = 0; l < nlines; ++l) {
      const Index pre = l / stride;
      const Index post = l % stride;
      const Index base = pre * (N * stride) + post;
      for (int t = 0; t < N; ++t) line[t] = data[base + t * stride];
      if (inverse)
        fft_engine().inv(lout, line);
      else
        fft_engine().fwd(lout, line);
      for (int t = 0; t < N; ++t) data[base + t * stride] = lout[t];
    }
    stride *= N;
  }
}

std::vector<Spectrum> forward(const DiscreteField& f) {
  const Index cells = f.grid().cell_count();
  std::vector<Spectrum> spectra(f.components(), Spectrum(cells));
  for (Index j = 0; j < f.components(); ++j) {
    for (Index c = 0; c < cells; ++c) spectra[j][c] = Cplx(f.values()(c, j), 0.0);
    fft_nd(f.grid(), spectra[j], false);
  }
  return spectra;
}

DiscreteField inverse(const PeriodicGrid& g, std::vector<Spectrum>& spectra) {
  DiscreteField out(g, static_cast<Index>(spectra.size()));
  for (std::size_t j = 0; j < spectra.size(); ++j) {
    fft_nd(g, spectra[j], true);
    for (Index c = 0; c < g.cell_count(); ++c)
      out.values()(c, static_cast<Index>(j)) = spectra[j][c].real();
  }
  return out;
}

int signed_freq(int k, int N) { return k <= N / 2 ? k : k - N; }

// Split the spectrum into the gradient-type projection; writes the potential
// spectrum and leaves the residual (solenoidal + mean) in place when asked.
// Nyquist modes are self-conjugate, where k(k.u)/|k|^2 would break Hermitian
// symmetry; discrete gradients carry no Nyquist content (the derivative
// symbol vanishes there), so those modes belong wholly to the solenoidal
// complement.  This keeps both projections exactly orthogonal and idempotent.
void project_spectra(const PeriodicGrid& g, std::vector<Spectrum>& u, bool keep_potential) {
  const int N = g.n_side;
  const int d = g.d;
  for (Index c = 0; c < g.cell_count(); ++c) {
    auto idx = g.unflatten(c);
    Real k[3] = {0, 0, 0};
    Real k2 = 0;
    bool nyquist = false;
    for (int a = 0; a < d; ++a) {
      if (idx[a] == N / 2) nyquist = true;
      k[a] = signed_freq(idx[a], N);
      k2 += k[a] * k[a];
    }
    if (k2 == 0.0 || nyquist) {
      if (keep_potential)
        for (int j = 0; j < d; ++j) u[j][c] = Cplx(0, 0);
      else if (k2 == 0.0)
        for (int j = 0; j < d; ++j) u[j][c] = Cplx(0, 0);
      continue;
    }
    Cplx kdotu(0, 0);
    for (int j = 0; j < d; ++j) kdotu += k[j] * u[j][c];
    const Cplx factor = kdotu / k2;
    for (int j = 0; j < d; ++j) {
      const Cplx pot = k[j] * factor;
      u[j][c] = keep_potential ? pot : u[j][c] - pot;
    }
  }
}

}  // namespace

HelmholtzParts helmholtz_split(const DiscreteField& field) {
  require(field.components() == field.grid().d, "helmholtz_split: needs n == d components");
  const PeriodicGrid& g = field.grid();
  auto spectra = forward(field);
  Vec mean(g.d);
  for (int j = 0; j < g.d; ++j) mean[j] = spectra[j][0].real() / g.cell_count();
  auto pot_spectra = spectra;
  project_spectra(g, pot_spectra, /*keep_potential=*/true);

  HelmholtzParts parts;
  parts.mean = mean;
  parts.potential = inverse(g, pot_spectra);
  parts.solenoidal = DiscreteField(g, g.d);
  parts.solenoidal.values() = field.values() - parts.potential.values();
  parts.solenoidal.values().rowwise() -= mean.transpose().array();
  return parts;
}

DiscreteField project_potential_zero_mean(const DiscreteField& field) {
  require(field.components() == field.grid().d, "projection: needs n == d components");
  auto spectra = forward(field);
  project_spectra(field.grid(), spectra, true);
  return inverse(field.grid(), spectra);
}

DiscreteField project_solenoidal_zero_mean(const DiscreteField& field) {
  require(field.components() == field.grid().d, "projection: needs n == d components");
  auto spectra = forward(field);
  for (int j = 0; j < field.grid().d; ++j) spectra[j][0] = Cplx(0, 0);  // drop the mean
  project_spectra(field.grid(), spectra, false);
  return inverse(field.grid(), spectra);
}

Real pairing_mean(const DiscreteField& u, const DiscreteField& v) {
  require(u.grid() == v.grid(), "pairing_mean: grid mismatch");
  require(u.components() == v.components(), "pairing_mean: component mismatch");
  return (u.values() * v.values()).sum() / static_cast<Real>(u.grid().cell_count());
}

NormBoundReport mean_zero_norm_bound(const DiscreteField& field, const Vec& xi, Real p) {
  require(xi.size() == field.components(), "mean_zero_norm_bound: xi size mismatch");
  require(p >= 1, "mean_zero_norm_bound: p must be >= 1");
  Eigen::ArrayXXd u = field.values();
  u.rowwise() -= field.values().colwise().mean();
  const Index cells = u.rows();
  Real lhs = 0, avg_up = 0;
  for (Index c = 0; c < cells; ++c) {
    Real s2 = 0, t2 = 0;
    for (Index j = 0; j < u.cols(); ++j) {
      const Real uj = u(c, j);
      s2 += (xi[j] + uj) * (xi[j] + uj);
      t2 += uj * uj;
    }
    lhs += std::pow(s2, p / 2);
    avg_up += std::pow(t2, p / 2);
  }
  lhs /= cells;
  avg_up /= cells;
  NormBoundReport rep;
  rep.lhs = lhs;
  rep.rhs = std::pow(xi.squaredNorm(), p / 2) + avg_up;
  rep.c_empirical = rep.rhs > 0 ? rep.lhs / rep.rhs : 1.0;
  require(rep.c_empirical > 0, "mean_zero_norm_bound: vanishing constant");
  return rep;
}

namespace {

// Derivative along one axis in spectral space; Nyquist zeroed.
void differentiate_axis(const PeriodicGrid& g, const Spectrum& in, Spectrum& out, int axis) {
  const int N = g.n_side;
  out.resize(in.size());
  for (Index c = 0; c < g.cell_count(); ++c) {
    auto idx = g.unflatten(c);
    if (idx[axis] == N / 2) {
      out[c] = Cplx(0, 0);
      continue;
    }
    const Real k = signed_freq(idx[axis], N);
    out[c] = Cplx(0, 2.0 * M_PI * k) * in[c];
  }
}

}  // namespace

DiscreteField spectral_gradient(const DiscreteField& scalar) {
  require(scalar.components() == 1, "spectral_gradient: scalar input expected");
  const PeriodicGrid& g = scalar.grid();
  auto spectra = forward(scalar);
  std::vector<Spectrum> grad(g.d);
  for (int a = 0; a < g.d; ++a) differentiate_axis(g, spectra[0], grad[a], a);
  return inverse(g, grad);
}

DiscreteField spectral_divergence(const DiscreteField& vec) {
  require(vec.components() == vec.grid().d, "spectral_divergence: needs n == d");
  const PeriodicGrid& g = vec.grid();
  auto spectra = forward(vec);
  std::vector<Spectrum> div(1, Spectrum(g.cell_count(), Cplx(0, 0)));
  Spectrum tmp;
  for (int a = 0; a < g.d; ++a) {
    differentiate_axis(g, spectra[a], tmp, a);
    for (Index c = 0; c < g.cell_count(); ++c) div[0][c] += tmp[c];
  }
  return inverse(g, div);
}

DiscreteField perp_gradient(const DiscreteField& scalar) {
  require(scalar.grid().d == 2, "perp_gradient: 2-d only");
  require(scalar.components() == 1, "perp_gradient: scalar input expected");
  const PeriodicGrid& g = scalar.grid();
  auto spectra = forward(scalar);
  std::vector<Spectrum> out(2);
  differentiate_axis(g, spectra[0], out[0], 1);  // -d2 psi
  for (auto& z : out[0]) z = -z;
  differentiate_axis(g, spectra[0], out[1], 0);  // d1 psi
  return inverse(g, out);
}

DiscreteField spectral_curl2(const DiscreteField& vec2) {
  require(vec2.grid().d == 2 && vec2.components() == 2, "spectral_curl2: 2-d vector expected");
  const PeriodicGrid& g = vec2.grid();
  auto spectra = forward(vec2);
  Spectrum d1v2, d2v1;
  differentiate_axis(g, spectra[1], d1v2, 0);
  differentiate_axis(g, spectra[0], d2v1, 1);
  std::vector<Spectrum> out(1, Spectrum(g.cell_count()));
  for (Index c = 0; c < g.cell_count(); ++c) out[0][c] = d1v2[c] - d2v1[c];
  return inverse(g, out);
}

DiscreteField poisson_solve_torus(const DiscreteField& rhs) {
  require(rhs.components() == 1, "poisson_solve_torus: scalar rhs expected");
  const PeriodicGrid& g = rhs.grid();
  const int N = g.n_side;
  auto spectra = forward(rhs);
  for (Index c = 0; c < g.cell_count(); ++c) {
    auto idx = g.unflatten(c);
    Real k2 = 0;
    for (int a = 0; a < g.d; ++a) {
      const Real k = signed_freq(idx[a], N);
      k2 += k * k;
    }
    spectra[0][c] = k2 == 0 ? Cplx(0, 0) : spectra[0][c] / (-4.0 * M_PI * M_PI * k2);
  }
  return inverse(g, spectra);
}

}  // namespace effectop
