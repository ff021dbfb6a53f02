#include "macf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "macf/noise.hpp"

namespace macf {

double free_energy(const SpectralField& u, const Potential& p) {
  const RealGrid x = padded_samples(u);
  double potential = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) potential += p.value(x[i]);
  return 0.5 * dirichlet_energy(u) + potential / static_cast<double>(x.size());
}

double regularized_free_energy(const SpectralField& u, const TruncatedPotential& tp, double eta) {
  const RealGrid x = padded_samples(resolvent(u, eta));
  double potential = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) potential += tp.value(x[i]);
  return 0.5 * dirichlet_energy(u) + potential / static_cast<double>(x.size());
}

double willmore(const SpectralField& u, const Potential& p, const Mobility& m) {
  const RealGrid x = padded_samples(u);
  const RealGrid lap = padded_samples(laplacian(u));
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double r = lap[i] - p.d1(x[i]);
    sum += m.value(x[i]) * r * r;
  }
  return sum / static_cast<double>(x.size());
}

double modulus_of_continuity(const TrajectoryRecord& rec, double delta) {
  if (rec.checkpoints.size() < 2 || rec.checkpoints.size() != rec.times.size()) {
    throw std::invalid_argument("modulus of continuity needs at least two checkpoints");
  }
  const double slack = 1e-12 * std::max(1.0, rec.times.back());
  double worst = 0.0;
  for (std::size_t a = 0; a < rec.times.size(); ++a) {
    for (std::size_t b = a + 1; b < rec.times.size(); ++b) {
      if (rec.times[b] - rec.times[a] > delta + slack) break;
      worst = std::max(worst, l2_norm(rec.checkpoints[b] - rec.checkpoints[a]));
    }
  }
  return worst;
}

namespace {

// Drift <sigma(u)(Lap u - W'(u)), psi> and QV rate of <u, psi> per checkpoint
// and test function, each computed once.
class IntegrandCache {
 public:
  IntegrandCache(const TrajectoryRecord& rec, const std::vector<PsiSlice>& psi, const Potential& p,
                 const Mobility& m, const NoiseKernel& j)
      : rec_(rec), psi_(psi), p_(p), m_(m), j_(j) {
    for (const auto& slice : psi_) test_samples_.push_back(padded_samples(slice.psi));
  }

  // Index of the slice active at time t.
  std::size_t slice_at(double t) const {
    std::size_t current = 0;
    for (std::size_t s = 0; s < psi_.size(); ++s) {
      if (psi_[s].start <= t + 1e-12) current = s;
    }
    return current;
  }

  const SpectralField& test(std::size_t slice) const { return psi_[slice].psi; }

  double drift(std::size_t i, std::size_t slice) { return lookup(i, slice).first; }
  double qv_rate(std::size_t i, std::size_t slice) { return lookup(i, slice).second; }

 private:
  const std::pair<double, double>& lookup(std::size_t i, std::size_t slice) {
    const auto key = std::make_pair(i, slice);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    const SpectralField& u = rec_.checkpoints[i];
    const RealGrid x = padded_samples(u);
    const RealGrid lap = padded_samples(laplacian(u));
    const RealGrid& test = test_samples_[slice];
    double sum = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) sum += m_.value(x[k]) * (lap[k] - p_.d1(x[k])) * test[k];
    const double drift = sum / static_cast<double>(x.size());
    const double qv = martingale_increment_variance(u, psi_[slice].psi, m_, j_);
    return cache_.emplace(key, std::make_pair(drift, qv)).first->second;
  }

  const TrajectoryRecord& rec_;
  const std::vector<PsiSlice>& psi_;
  const Potential& p_;
  const Mobility& m_;
  const NoiseKernel& j_;
  std::vector<RealGrid> test_samples_;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<double, double>> cache_;
};

}  // namespace

MartingaleSeries martingale_statistic(const TrajectoryRecord& rec, const std::vector<PsiSlice>& psi,
                                      const Potential& p, const Mobility& m, const NoiseKernel& j) {
  if (rec.checkpoints.size() != rec.times.size() || rec.checkpoints.empty()) {
    throw std::invalid_argument("martingale statistic needs a checkpoint at every sample time");
  }
  if (psi.empty()) throw std::invalid_argument("martingale statistic needs a test function");
  const std::size_t count = rec.times.size();
  MartingaleSeries out;
  out.times = rec.times;
  out.M.assign(count, 0.0);
  out.qv_pred.assign(count, 0.0);
  IntegrandCache cache(rec, psi, p, m, j);

  // The test function active at the left end is used on the whole interval.
  double fine_integral = 0.0;
  double abs_integral = 0.0;
  for (std::size_t a = 0; a + 1 < count; ++a) {
    const std::size_t s = cache.slice_at(rec.times[a]);
    const double dt = rec.times[a + 1] - rec.times[a];
    const double drift = 0.5 * dt * (cache.drift(a, s) + cache.drift(a + 1, s));
    const double jump = l2_inner(rec.checkpoints[a + 1] - rec.checkpoints[a], cache.test(s));
    out.M[a + 1] = out.M[a] + jump - drift;
    out.qv_pred[a + 1] = out.qv_pred[a] + 0.5 * dt * (cache.qv_rate(a, s) + cache.qv_rate(a + 1, s));
    fine_integral += drift;
    abs_integral += 0.5 * dt * (std::abs(cache.drift(a, s)) + std::abs(cache.drift(a + 1, s)));
  }

  // Same drift integral on every other checkpoint.
  double coarse_integral = 0.0;
  std::size_t a = 0;
  for (; a + 2 < count; a += 2) {
    const std::size_t s = cache.slice_at(rec.times[a]);
    coarse_integral += 0.5 * (rec.times[a + 2] - rec.times[a]) * (cache.drift(a, s) + cache.drift(a + 2, s));
  }
  for (; a + 1 < count; ++a) {
    const std::size_t s = cache.slice_at(rec.times[a]);
    coarse_integral += 0.5 * (rec.times[a + 1] - rec.times[a]) * (cache.drift(a, s) + cache.drift(a + 1, s));
  }
  out.drift_quadrature_error = abs_integral > 0.0 ? std::abs(fine_integral - coarse_integral) / abs_integral
                                                  : std::abs(coarse_integral);
  out.coarse = out.drift_quadrature_error > 0.1;
  return out;
}

MartingaleSeries martingale_statistic(const TrajectoryRecord& rec, const SpectralField& psi,
                                      const Potential& p, const Mobility& m, const NoiseKernel& j) {
  return martingale_statistic(rec, std::vector<PsiSlice>{{0.0, psi}}, p, m, j);
}

SpectralField default_test_function(int dim, int n) {
  return SpectralField::mode(dim, n, {1, 0, 0}, {0.5, 0.0});
}

SpectralField h_field(const SpectralField& u, const Mobility& m) {
  return pointwise_apply([&m](double x) { return h_antiderivative(m, x); }, u);
}

double uniqueness_metric_from_h(const SpectralField& hu, const SpectralField& hv) {
  const double norm = sobolev_norm(hu - hv, -1.0);
  return 0.5 * norm * norm;
}

double uniqueness_metric(const SpectralField& u, const SpectralField& v, const Mobility& m) {
  u.require_same_shape(v);
  return uniqueness_metric_from_h(h_field(u, m), h_field(v, m));
}

double interpolation_ratio(const SparseSpectrum& f, const SparseSpectrum& g) {
  const double denom = sobolev_norm(f, 1.0) * sobolev_norm(g, -0.5);
  if (denom == 0.0) return 0.0;
  return sobolev_norm(multiply(f, g), -1.0) / denom;
}

SpectralField exact_product(const SpectralField& f, const SpectralField& g) {
  f.require_same_shape(g);
  const int fine = 2 * f.grid_size();
  RealGrid a = from_fourier(resample(f, fine));
  a.array() *= from_fourier(resample(g, fine)).array();
  return to_fourier(f.dim(), fine, a);
}

double interpolation_ratio(const SpectralField& f, const SpectralField& g) {
  const double denom = sobolev_norm(f, 1.0) * sobolev_norm(g, -0.5);
  if (denom == 0.0) return 0.0;
  return sobolev_norm(exact_product(f, g), -1.0) / denom;
}

}  // namespace macf
