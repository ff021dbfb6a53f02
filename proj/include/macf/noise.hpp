#pragma once

// Truncated L2-cylindrical Wiener process alpha = sum_k beta^k e_k and the
// noise operator B(v) psi = sqrt(2 sigma(v)) (j * psi).
//
// Every Brownian increment is a pure function of (seed, replicate, step,
// wavevector), so runs with different grids, step counts or thread
// schedules see literally the same noise.

#include <cstdint>

#include "macf/model.hpp"
#include "macf/torus_field.hpp"

namespace macf {

/// Reproducible collection of per-mode Brownian increments on a fine time grid
/// of `steps` increments of length `inner_dt`. Modes with |k_j| < max_grid/2
/// are available.
class NoisePath {
 public:
  NoisePath(std::uint64_t seed, std::uint32_t replicate, double inner_dt, long steps, int max_grid);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint32_t replicate() const noexcept { return replicate_; }
  double inner_dt() const noexcept { return inner_dt_; }
  long steps() const noexcept { return steps_; }
  int max_grid() const noexcept { return max_grid_; }

  /// Same path with another replicate id.
  NoisePath with_replicate(std::uint32_t replicate) const;

  /// Negative control: every odd fine step repeats the preceding even step.
  NoisePath with_reused_pairs() const;
  bool reuses_pairs() const noexcept { return reuse_pairs_; }

  /// Increment of the canonical representative k over fine step `step`:
  /// real and imaginary parts each N(0, dt/2), or a real N(0, dt) for k = 0.
  std::complex<double> mode_increment(long step, const Wavevector& k) const;

 private:
  std::uint64_t seed_;
  std::uint32_t replicate_;
  double inner_dt_;
  long steps_;
  int max_grid_;
  bool reuse_pairs_ = false;
};

/// alpha(end) - alpha(begin) in fine steps, on the sub-Nyquist modes of an
/// N^d grid. Summation runs step by step in increasing order.
SpectralField wiener_increment(const NoisePath& path, long begin, long end, int dim, int n);

/// sqrt(2 sigma(v)) sampled on the dealiasing grid of v.
RealGrid noise_weight(const SpectralField& v, const Mobility& m);

/// B(v) psi = sqrt(2 sigma(v)) (j * psi).
SpectralField apply_B(const SpectralField& v, const SpectralField& psi, const Mobility& m,
                      const NoiseKernel& j);

/// B(v)^* psi = j * (sqrt(2 sigma(v)) psi).
SpectralField apply_B_adjoint(const SpectralField& v, const SpectralField& psi, const Mobility& m,
                              const NoiseKernel& j);

/// Tr(B(v) B(v)^*) = sum over retained modes of ||B(v) e_k||^2.
double hs_trace(const SpectralField& v, const Mobility& m, const NoiseKernel& j);

/// 2 int [j * (sqrt(sigma(v)) phi)]^2 dx, the quadratic-variation rate of
/// <u, phi> driven by B(v) d alpha.
double martingale_increment_variance(const SpectralField& v, const SpectralField& phi,
                                     const Mobility& m, const NoiseKernel& j);

}  // namespace macf
