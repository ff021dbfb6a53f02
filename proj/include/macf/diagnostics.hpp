#pragma once

#include <string>
#include <vector>

#include "macf/model.hpp"
#include "macf/trajectory.hpp"

namespace macf {

struct FunctionalValue {
  std::string name;
  double value = 0.0;
  double time = 0.0;
};

/// int [ |grad u|^2 / 2 + W(u) ] dx
double free_energy(const SpectralField& u, const Potential& p);

/// int [ |grad u|^2 / 2 + W_l(R_eta u) ] dx
double regularized_free_energy(const SpectralField& u, const TruncatedPotential& tp, double eta);

/// int sigma(u) [Lap u - W'(u)]^2 dx
double willmore(const SpectralField& u, const Potential& p, const Mobility& m);

/// sup over sampled |t - s| <= delta of ||u_t - u_s||_{L2}.
double modulus_of_continuity(const TrajectoryRecord& rec, double delta);

/// Test function active from `start` until the next slice begins.
struct PsiSlice {
  double start = 0.0;
  SpectralField psi;
};

struct MartingaleSeries {
  std::vector<double> times;
  std::vector<double> M;        // M^psi_t
  std::vector<double> qv_pred;  // 2 int int [j * (sqrt(sigma(u)) psi)]^2
  /// |I_h - I_2h| / int |drift| for the drift integral over the whole record
  /// (trapezoid on all checkpoints vs every other checkpoint).
  double drift_quadrature_error = 0.0;
  bool coarse = false;  // drift_quadrature_error > 10%
};

/// M^psi_t = <u_t, psi> - <u_0, psi> - int_0^t <sigma(u)(Lap u - W'(u)), psi> ds,
/// with the drift integral by trapezoid over the checkpoints.
MartingaleSeries martingale_statistic(const TrajectoryRecord& rec, const std::vector<PsiSlice>& psi,
                                      const Potential& p, const Mobility& m, const NoiseKernel& j);

MartingaleSeries martingale_statistic(const TrajectoryRecord& rec, const SpectralField& psi,
                                      const Potential& p, const Mobility& m, const NoiseKernel& j);

/// cos(2 pi x_1) on the given grid.
SpectralField default_test_function(int dim, int n);

/// h(u) = int_0^u dr / sigma(r), applied pointwise.
SpectralField h_field(const SpectralField& u, const Mobility& m);

/// Psi = || h(u) - h(v) ||_{H^-1}^2 / 2
double uniqueness_metric(const SpectralField& u, const SpectralField& v, const Mobility& m);

/// Variant reusing precomputed h fields.
double uniqueness_metric_from_h(const SpectralField& hu, const SpectralField& hv);

/// ||f g||_{H^-1} / (||f||_{H^1} ||g||_{H^-1/2}) with the product taken exactly.
double interpolation_ratio(const SparseSpectrum& f, const SparseSpectrum& g);
double interpolation_ratio(const SpectralField& f, const SpectralField& g);

/// Exact product of two fields band-limited to |k_j| < N/2, on a 2N grid.
SpectralField exact_product(const SpectralField& f, const SpectralField& g);

}  // namespace macf
