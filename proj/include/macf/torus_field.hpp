#pragma once

// Real fields on the flat torus T^d = [0,1)^d, d <= 3, stored as Fourier
// coefficients on an N^d grid.
//
// Convention: u(x) = sum_k c_k exp(2 pi i k.x) with c_k = N^-d sum_x u(x)
// exp(-2 pi i k.x). Hence ||u||_{L2}^2 = sum_k |c_k|^2, the Laplacian has
// symbol -4 pi^2 |k|^2 and the H^s norm is
//
//     ||u||_{H^s}^2 = sum_k (1 + 4 pi^2 |k|^2)^s |c_k|^2.
//
// Coefficients are kept in FFT order, row-major over the axes: grid index i
// on an axis stands for wavenumber k = i for i <= N/2 and k = i - N above.
// Products of fields are evaluated on a 3N/2 grid and truncated back to the
// sub-Nyquist band |k_j| < N/2.

#include <Eigen/Core>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "macf/errors.hpp"

namespace macf {

inline constexpr int kMaxDim = 3;

/// Integer wavevector; components beyond the field dimension are zero.
using Wavevector = std::array<int, kMaxDim>;

/// Sobolev regularity order s of H^s(T^d).
struct SobolevIndex {
  double s = 0.0;
  constexpr SobolevIndex() = default;
  constexpr SobolevIndex(double order) : s(order) {}  // NOLINT: implicit by design of call sites
};

namespace detail {

inline Eigen::Index grid_volume(int dim, int n) {
  Eigen::Index v = 1;
  for (int a = 0; a < dim; ++a) v *= n;
  return v;
}

inline int wavenumber(int index, int n) { return index <= n / 2 ? index : index - n; }

inline int grid_index(int k, int n) { return k >= 0 ? k : k + n; }

inline void check_shape(int dim, int n) {
  if (dim < 1 || dim > kMaxDim) {
    throw std::invalid_argument("torus dimension must be 1, 2 or 3, got " + std::to_string(dim));
  }
  if (n <= 0 || n % 2 != 0) {
    throw std::invalid_argument("grid size must be positive and even, got " + std::to_string(n));
  }
}

template <typename Scalar>
Eigen::FFT<Scalar>& fft_engine() {
  thread_local Eigen::FFT<Scalar> engine = [] {
    Eigen::FFT<Scalar> e;
    e.SetFlag(Eigen::FFT<Scalar>::Unscaled);
    return e;
  }();
  return engine;
}

// Unnormalized multidimensional transform, one axis at a time.
template <typename Scalar>
void transform_axes(std::complex<Scalar>* data, int dim, int n, bool forward) {
  auto& fft = fft_engine<Scalar>();
  thread_local std::vector<std::complex<Scalar>> in;
  thread_local std::vector<std::complex<Scalar>> out;
  in.resize(static_cast<std::size_t>(n));
  out.resize(static_cast<std::size_t>(n));
  const Eigen::Index volume = grid_volume(dim, n);
  for (int axis = 0; axis < dim; ++axis) {
    const Eigen::Index stride = grid_volume(dim - 1 - axis, n);
    const Eigen::Index outer = volume / (stride * n);
    for (Eigen::Index o = 0; o < outer; ++o) {
      for (Eigen::Index s = 0; s < stride; ++s) {
        std::complex<Scalar>* line = data + o * n * stride + s;
        if (dim == 1) {
          if (forward) {
            fft.fwd(out.data(), line, n);
          } else {
            fft.inv(out.data(), line, n);
          }
        } else {
          for (int j = 0; j < n; ++j) in[j] = line[j * stride];
          if (forward) {
            fft.fwd(out.data(), in.data(), n);
          } else {
            fft.inv(out.data(), in.data(), n);
          }
        }
        for (int j = 0; j < n; ++j) line[j * stride] = out[j];
      }
    }
  }
}

}  // namespace detail

/// A real-valued field on T^d held by its (Hermitian-symmetric) Fourier
/// coefficients. Value type; all operations on it are pure functions.
template <typename Scalar>
class BasicSpectralField {
 public:
  using Complex = std::complex<Scalar>;
  using CoeffVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
  using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicSpectralField() = default;

  /// Zero field.
  BasicSpectralField(int dim, int grid_size) : dim_(dim), n_(grid_size) {
    detail::check_shape(dim, grid_size);
    coeffs_ = CoeffVector::Zero(detail::grid_volume(dim, grid_size));
  }

  BasicSpectralField(int dim, int grid_size, CoeffVector coeffs)
      : dim_(dim), n_(grid_size), coeffs_(std::move(coeffs)) {
    detail::check_shape(dim, grid_size);
    if (coeffs_.size() != detail::grid_volume(dim, grid_size)) {
      throw ShapeError("coefficient vector has " + std::to_string(coeffs_.size()) +
                       " entries, expected N^d = " +
                       std::to_string(detail::grid_volume(dim, grid_size)));
    }
  }

  static BasicSpectralField constant(int dim, int grid_size, Scalar value) {
    BasicSpectralField f(dim, grid_size);
    f.coeffs_[0] = value;
    return f;
  }

  /// a e_k + conj(a) e_{-k}; for a real this is 2a cos(2 pi k.x).
  static BasicSpectralField mode(int dim, int grid_size, const Wavevector& k, Complex amplitude) {
    BasicSpectralField f(dim, grid_size);
    const Eigen::Index i = f.index(k);
    const Eigen::Index j = f.index(negate(k));
    if (i == j) {
      f.coeffs_[i] = Complex(amplitude.real(), 0);
    } else {
      f.coeffs_[i] = amplitude;
      f.coeffs_[j] = std::conj(amplitude);
    }
    return f;
  }

  int dim() const noexcept { return dim_; }
  int grid_size() const noexcept { return n_; }
  Eigen::Index size() const noexcept { return coeffs_.size(); }

  const CoeffVector& coeffs() const noexcept { return coeffs_; }
  CoeffVector& coeffs() noexcept { return coeffs_; }

  Wavevector wavevector(Eigen::Index i) const {
    Wavevector k{0, 0, 0};
    for (int a = dim_ - 1; a >= 0; --a) {
      k[a] = detail::wavenumber(static_cast<int>(i % n_), n_);
      i /= n_;
    }
    return k;
  }

  /// |k|^2 of the mode stored at flat index i.
  Scalar wavenumber_sq(Eigen::Index i) const {
    Scalar sum = 0;
    for (int a = dim_ - 1; a >= 0; --a) {
      const int k = detail::wavenumber(static_cast<int>(i % n_), n_);
      sum += Scalar(k) * Scalar(k);
      i /= n_;
    }
    return sum;
  }

  /// Flat index of wavevector k (taken modulo N on each axis).
  Eigen::Index index(const Wavevector& k) const {
    Eigen::Index i = 0;
    for (int a = 0; a < dim_; ++a) {
      const int ka = ((k[a] % n_) + n_) % n_;
      i = i * n_ + ka;
    }
    return i;
  }

  Complex coeff(const Wavevector& k) const { return coeffs_[index(k)]; }

  /// True when every component satisfies |k_j| < N/2.
  bool sub_nyquist(Eigen::Index i) const {
    for (int a = 0; a < dim_; ++a) {
      if (i % n_ == n_ / 2) return false;
      i /= n_;
    }
    return true;
  }

  Scalar mean() const { return coeffs_[0].real(); }

  bool same_shape(const BasicSpectralField& other) const noexcept {
    return dim_ == other.dim_ && n_ == other.n_;
  }

  BasicSpectralField& operator+=(const BasicSpectralField& rhs) {
    require_same_shape(rhs);
    coeffs_ += rhs.coeffs_;
    return *this;
  }
  BasicSpectralField& operator-=(const BasicSpectralField& rhs) {
    require_same_shape(rhs);
    coeffs_ -= rhs.coeffs_;
    return *this;
  }
  BasicSpectralField& operator*=(Scalar a) {
    coeffs_ *= a;
    return *this;
  }

  friend BasicSpectralField operator+(BasicSpectralField lhs, const BasicSpectralField& rhs) {
    return lhs += rhs;
  }
  friend BasicSpectralField operator-(BasicSpectralField lhs, const BasicSpectralField& rhs) {
    return lhs -= rhs;
  }
  friend BasicSpectralField operator*(Scalar a, BasicSpectralField f) { return f *= a; }
  friend BasicSpectralField operator*(BasicSpectralField f, Scalar a) { return f *= a; }
  friend BasicSpectralField operator-(BasicSpectralField f) { return f *= Scalar(-1); }

  friend bool operator==(const BasicSpectralField& a, const BasicSpectralField& b) {
    return a.same_shape(b) && a.coeffs_ == b.coeffs_;
  }

  void require_same_shape(const BasicSpectralField& other) const {
    if (!same_shape(other)) {
      std::ostringstream msg;
      msg << "field shape mismatch: (d=" << dim_ << ", N=" << n_ << ") vs (d=" << other.dim_
          << ", N=" << other.n_ << ")";
      throw ShapeError(msg.str());
    }
  }

 private:
  static Wavevector negate(const Wavevector& k) { return {-k[0], -k[1], -k[2]}; }

  int dim_ = 0;
  int n_ = 0;
  CoeffVector coeffs_;
};

using SpectralField = BasicSpectralField<double>;
using RealGrid = SpectralField::RealVector;

template <typename Scalar>
constexpr Scalar four_pi_sq() {
  return Scalar(4) * std::numbers::pi_v<Scalar> * std::numbers::pi_v<Scalar>;
}

/// (1 + 4 pi^2 |k|^2)^s
template <typename Scalar>
Scalar sobolev_weight(Scalar k_sq, SobolevIndex s) {
  const Scalar base = Scalar(1) + four_pi_sq<Scalar>() * k_sq;
  if (s.s == 1.0) return base;
  if (s.s == 0.0) return Scalar(1);
  if (s.s == -1.0) return Scalar(1) / base;
  return std::pow(base, Scalar(s.s));
}

/// Physical coordinates of grid point `i` (x_j = i_j / N).
template <typename Scalar = double>
std::array<Scalar, kMaxDim> grid_point(int dim, int n, Eigen::Index i) {
  std::array<Scalar, kMaxDim> x{0, 0, 0};
  for (int a = dim - 1; a >= 0; --a) {
    x[a] = Scalar(i % n) / Scalar(n);
    i /= n;
  }
  return x;
}

/// Largest |c_k - conj(c_{-k})| over the stored modes.
template <typename Scalar>
Scalar hermitian_defect(const BasicSpectralField<Scalar>& f) {
  Scalar worst = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const Wavevector k = f.wavevector(i);
    const auto partner = f.coeff({-k[0], -k[1], -k[2]});
    worst = std::max(worst, std::abs(f.coeffs()[i] - std::conj(partner)));
  }
  return worst;
}

/// Projects onto the Hermitian-symmetric (real-field) subspace.
template <typename Scalar>
BasicSpectralField<Scalar> enforce_hermitian(const BasicSpectralField<Scalar>& f) {
  BasicSpectralField<Scalar> out = f;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const Wavevector k = f.wavevector(i);
    const auto partner = f.coeff({-k[0], -k[1], -k[2]});
    out.coeffs()[i] = (f.coeffs()[i] + std::conj(partner)) / Scalar(2);
  }
  return out;
}

template <typename Scalar>
BasicSpectralField<Scalar> to_fourier(int dim, int n,
                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& samples) {
  detail::check_shape(dim, n);
  const Eigen::Index volume = detail::grid_volume(dim, n);
  if (samples.size() != volume) {
    throw ShapeError("sample grid has " + std::to_string(samples.size()) +
                     " points, expected N^d = " + std::to_string(volume));
  }
  typename BasicSpectralField<Scalar>::CoeffVector c = samples.template cast<std::complex<Scalar>>();
  detail::transform_axes(c.data(), dim, n, /*forward=*/true);
  c /= Scalar(volume);
  return enforce_hermitian(BasicSpectralField<Scalar>(dim, n, std::move(c)));
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> from_fourier(const BasicSpectralField<Scalar>& f) {
  typename BasicSpectralField<Scalar>::CoeffVector c = f.coeffs();
  detail::transform_axes(c.data(), f.dim(), f.grid_size(), /*forward=*/false);
  return c.real();
}

/// Multiplies mode k by `symbol(|k|^2)`.
template <typename Scalar, typename Symbol>
BasicSpectralField<Scalar> apply_multiplier(const BasicSpectralField<Scalar>& f, Symbol&& symbol) {
  BasicSpectralField<Scalar> out = f;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    out.coeffs()[i] *= symbol(f.wavenumber_sq(i));
  }
  return out;
}

/// Real inner product <f, g>_{H^s}.
template <typename Scalar>
Scalar sobolev_inner(const BasicSpectralField<Scalar>& f, const BasicSpectralField<Scalar>& g,
                     SobolevIndex s) {
  f.require_same_shape(g);
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    sum += sobolev_weight(f.wavenumber_sq(i), s) *
           (f.coeffs()[i] * std::conj(g.coeffs()[i])).real();
  }
  return sum;
}

template <typename Scalar>
Scalar l2_inner(const BasicSpectralField<Scalar>& f, const BasicSpectralField<Scalar>& g) {
  f.require_same_shape(g);
  return (f.coeffs().dot(g.coeffs())).real();
}

template <typename Scalar>
Scalar sobolev_norm(const BasicSpectralField<Scalar>& f, SobolevIndex s) {
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    sum += sobolev_weight(f.wavenumber_sq(i), s) * std::norm(f.coeffs()[i]);
  }
  return std::sqrt(sum);
}

template <typename Scalar>
Scalar l2_norm(const BasicSpectralField<Scalar>& f) {
  return f.coeffs().norm();
}

/// ||grad f||_{L2}^2 = sum 4 pi^2 |k|^2 |c_k|^2.
template <typename Scalar>
Scalar dirichlet_energy(const BasicSpectralField<Scalar>& f) {
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    sum += four_pi_sq<Scalar>() * f.wavenumber_sq(i) * std::norm(f.coeffs()[i]);
  }
  return sum;
}

template <typename Scalar>
BasicSpectralField<Scalar> laplacian(const BasicSpectralField<Scalar>& f) {
  return apply_multiplier(f, [](Scalar k_sq) { return -four_pi_sq<Scalar>() * k_sq; });
}

/// (I - delta Laplacian)^{-1}
template <typename Scalar>
BasicSpectralField<Scalar> resolvent(const BasicSpectralField<Scalar>& f, Scalar delta) {
  if (!(delta >= 0)) {
    throw std::invalid_argument("resolvent parameter must be nonnegative");
  }
  if (delta == 0) return f;
  return apply_multiplier(
      f, [delta](Scalar k_sq) { return Scalar(1) / (Scalar(1) + delta * four_pi_sq<Scalar>() * k_sq); });
}

/// Heat semigroup exp(t Laplacian).
template <typename Scalar>
BasicSpectralField<Scalar> heat_flow(const BasicSpectralField<Scalar>& f, Scalar t) {
  return apply_multiplier(f, [t](Scalar k_sq) { return std::exp(-four_pi_sq<Scalar>() * k_sq * t); });
}

/// Convolution on T^d: coefficient-wise product j_k u_k.
template <typename Scalar>
BasicSpectralField<Scalar> convolve(const BasicSpectralField<Scalar>& j,
                                    const BasicSpectralField<Scalar>& u) {
  j.require_same_shape(u);
  BasicSpectralField<Scalar> out = u;
  out.coeffs() = j.coeffs().cwiseProduct(u.coeffs());
  return out;
}

/// Keeps the modes with |k_j| < min(N, M)/2 and places them on an M grid.
template <typename Scalar>
BasicSpectralField<Scalar> resample(const BasicSpectralField<Scalar>& f, int m) {
  BasicSpectralField<Scalar> out(f.dim(), m);
  const int limit = std::min(f.grid_size(), m) / 2;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const Wavevector k = f.wavevector(i);
    bool keep = true;
    for (int a = 0; a < f.dim(); ++a) keep = keep && std::abs(k[a]) < limit;
    if (keep) out.coeffs()[out.index(k)] = f.coeffs()[i];
  }
  return out;
}

/// Drops the Nyquist modes.
template <typename Scalar>
BasicSpectralField<Scalar> project_sub_nyquist(const BasicSpectralField<Scalar>& f) {
  BasicSpectralField<Scalar> out = f;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (!f.sub_nyquist(i)) out.coeffs()[i] = 0;
  }
  return out;
}

inline int padded_size(int n) { return 3 * n / 2; }

/// Physical samples on the dealiasing grid of size 3N/2.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> padded_samples(const BasicSpectralField<Scalar>& f) {
  return from_fourier(resample(f, padded_size(f.grid_size())));
}

/// Inverse of padded_samples up to truncation to the sub-Nyquist band of N.
template <typename Scalar>
BasicSpectralField<Scalar> from_padded_samples(int dim, int n,
                                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& samples) {
  return resample(to_fourier(dim, padded_size(n), samples), n);
}

/// Dealiased product of a field with a function sampled on its padded grid.
template <typename Scalar>
BasicSpectralField<Scalar> multiply_padded(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& weight,
                                           const BasicSpectralField<Scalar>& f) {
  const Eigen::Index expected = detail::grid_volume(f.dim(), padded_size(f.grid_size()));
  if (weight.size() != expected) {
    throw ShapeError("padded weight has " + std::to_string(weight.size()) + " samples, expected " +
                     std::to_string(expected));
  }
  // A uniform weight is an exact scalar multiple.
  if ((weight.array() == weight[0]).all()) return weight[0] * project_sub_nyquist(f);
  auto samples = padded_samples(f);
  samples.array() *= weight.array();
  return from_padded_samples(f.dim(), f.grid_size(), samples);
}

/// Dealiased pointwise product f g.
template <typename Scalar>
BasicSpectralField<Scalar> multiply(const BasicSpectralField<Scalar>& f,
                                    const BasicSpectralField<Scalar>& g) {
  f.require_same_shape(g);
  return multiply_padded(padded_samples(g), f);
}

/// Applies g at the points of a sample grid, reporting the first non-finite
/// result with its location.
template <typename Scalar, typename Fn>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> map_samples(Fn&& g,
                                                     const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& samples,
                                                     int dim, int n) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(samples.size());
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    out[i] = g(samples[i]);
    if (!std::isfinite(out[i])) {
      const auto x = grid_point<Scalar>(dim, n, i);
      std::ostringstream msg;
      msg << "non-finite value " << out[i] << " at grid point " << i << " x=(" << x[0];
      for (int a = 1; a < dim; ++a) msg << ", " << x[a];
      msg << ") from input " << samples[i];
      throw NumericalError(msg.str());
    }
  }
  return out;
}

/// g(f) evaluated pseudo-spectrally on the 3N/2 grid.
template <typename Scalar, typename Fn>
BasicSpectralField<Scalar> pointwise_apply(Fn&& g, const BasicSpectralField<Scalar>& f) {
  const int m = padded_size(f.grid_size());
  const auto values = map_samples<Scalar>(g, padded_samples(f), f.dim(), m);
  return from_padded_samples(f.dim(), f.grid_size(), values);
}

/// A field with finitely many nonzero modes and no grid, for exact
/// products of band-limited fields at any resolution.
template <typename Scalar>
struct BasicSparseSpectrum {
  int dim = 1;
  std::map<Wavevector, std::complex<Scalar>> modes;

  /// Adds a e_k + conj(a) e_{-k}.
  void add_mode(const Wavevector& k, std::complex<Scalar> a) {
    const Wavevector mk{-k[0], -k[1], -k[2]};
    if (k == mk) {
      modes[k] += std::complex<Scalar>(a.real(), 0);
    } else {
      modes[k] += a;
      modes[mk] += std::conj(a);
    }
  }
};

using SparseSpectrum = BasicSparseSpectrum<double>;

template <typename Scalar>
Scalar squared_length(const Wavevector& k) {
  return Scalar(k[0]) * k[0] + Scalar(k[1]) * k[1] + Scalar(k[2]) * k[2];
}

template <typename Scalar>
Scalar sobolev_norm(const BasicSparseSpectrum<Scalar>& f, SobolevIndex s) {
  Scalar sum = 0;
  for (const auto& [k, c] : f.modes) sum += sobolev_weight(squared_length<Scalar>(k), s) * std::norm(c);
  return std::sqrt(sum);
}

/// Exact product (discrete convolution of the mode sets).
template <typename Scalar>
BasicSparseSpectrum<Scalar> multiply(const BasicSparseSpectrum<Scalar>& f,
                                     const BasicSparseSpectrum<Scalar>& g) {
  if (f.dim != g.dim) throw ShapeError("sparse spectra of different dimension");
  BasicSparseSpectrum<Scalar> out;
  out.dim = f.dim;
  for (const auto& [kf, cf] : f.modes) {
    for (const auto& [kg, cg] : g.modes) {
      out.modes[{kf[0] + kg[0], kf[1] + kg[1], kf[2] + kg[2]}] += cf * cg;
    }
  }
  return out;
}

/// Places a sparse spectrum on an N grid; modes outside |k_j| < N/2 are rejected.
template <typename Scalar>
BasicSpectralField<Scalar> to_dense(const BasicSparseSpectrum<Scalar>& f, int n) {
  BasicSpectralField<Scalar> out(f.dim, n);
  for (const auto& [k, c] : f.modes) {
    for (int a = 0; a < f.dim; ++a) {
      if (std::abs(k[a]) >= n / 2) throw ShapeError("sparse mode not resolved by the grid");
    }
    out.coeffs()[out.index(k)] += c;
  }
  return out;
}

}  // namespace macf
