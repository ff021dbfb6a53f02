#include "macf/noise.hpp"

#include <sstream>
#include <stdexcept>

#include "macf/philox.hpp"

namespace macf {
namespace {

constexpr int kModeBits = 10;
constexpr int kModeOffset = 1 << (kModeBits - 1);

std::uint32_t mode_id(const Wavevector& k) {
  std::uint32_t id = 0;
  for (int a = 0; a < kMaxDim; ++a) {
    id = (id << kModeBits) | static_cast<std::uint32_t>(k[a] + kModeOffset);
  }
  return id;
}

bool canonical(const Wavevector& k) {
  for (int a = 0; a < kMaxDim; ++a) {
    if (k[a] != 0) return k[a] > 0;
  }
  return true;  // k = 0
}

struct ModePair {
  Eigen::Index plus;
  Eigen::Index minus;
  Wavevector k;
};

std::vector<ModePair> canonical_modes(const SpectralField& f) {
  std::vector<ModePair> pairs;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (!f.sub_nyquist(i)) continue;
    const Wavevector k = f.wavevector(i);
    if (!canonical(k)) continue;
    pairs.push_back({i, f.index({-k[0], -k[1], -k[2]}), k});
  }
  return pairs;
}

}  // namespace

NoisePath::NoisePath(std::uint64_t seed, std::uint32_t replicate, double inner_dt, long steps,
                     int max_grid)
    : seed_(seed), replicate_(replicate), inner_dt_(inner_dt), steps_(steps), max_grid_(max_grid) {
  if (!(inner_dt > 0.0)) throw std::invalid_argument("noise path needs a positive inner_dt");
  if (steps < 0) throw std::invalid_argument("noise path needs a nonnegative step count");
  if (max_grid <= 0 || max_grid % 2 != 0 || max_grid / 2 >= kModeOffset) {
    throw std::invalid_argument("noise path grid must be even and at most " +
                                std::to_string(2 * kModeOffset - 2));
  }
}

NoisePath NoisePath::with_replicate(std::uint32_t replicate) const {
  NoisePath p = *this;
  p.replicate_ = replicate;
  return p;
}

NoisePath NoisePath::with_reused_pairs() const {
  NoisePath p = *this;
  p.reuse_pairs_ = true;
  return p;
}

std::complex<double> NoisePath::mode_increment(long step, const Wavevector& k) const {
  if (reuse_pairs_) step -= step % 2;
  const auto ustep = static_cast<std::uint64_t>(step);
  const PhiloxCounter ctr{mode_id(k), replicate_, static_cast<std::uint32_t>(ustep),
                          static_cast<std::uint32_t>(ustep >> 32)};
  const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  const auto z = philox_normal_pair(ctr, key);
  if (k == Wavevector{0, 0, 0}) return {std::sqrt(inner_dt_) * z[0], 0.0};
  const double scale = std::sqrt(0.5 * inner_dt_);
  return {scale * z[0], scale * z[1]};
}

SpectralField wiener_increment(const NoisePath& path, long begin, long end, int dim, int n) {
  if (begin < 0 || end < begin || end > path.steps()) {
    std::ostringstream msg;
    msg << "step range [" << begin << ", " << end << ") outside the noise horizon [0, "
        << path.steps() << "]";
    throw std::out_of_range(msg.str());
  }
  if (n > path.max_grid()) {
    throw ShapeError("grid N=" + std::to_string(n) + " needs modes the noise path (N=" +
                     std::to_string(path.max_grid()) + ") does not resolve");
  }
  SpectralField dw(dim, n);
  if (begin == end) return dw;
  const auto pairs = canonical_modes(dw);
  auto& c = dw.coeffs();
  for (long step = begin; step < end; ++step) {
    for (const auto& p : pairs) {
      const auto z = path.mode_increment(step, p.k);
      c[p.plus] += z;
      if (p.minus != p.plus) c[p.minus] += std::conj(z);
    }
  }
  return dw;
}

RealGrid noise_weight(const SpectralField& v, const Mobility& m) {
  const int mgrid = padded_size(v.grid_size());
  return map_samples<double>([&m](double x) { return std::sqrt(2.0 * m.value(x)); }, padded_samples(v),
                             v.dim(), mgrid);
}

SpectralField apply_B(const SpectralField& v, const SpectralField& psi, const Mobility& m,
                      const NoiseKernel& j) {
  v.require_same_shape(psi);
  return multiply_padded(noise_weight(v, m), convolve(j.field(psi.dim(), psi.grid_size()), psi));
}

SpectralField apply_B_adjoint(const SpectralField& v, const SpectralField& psi, const Mobility& m,
                              const NoiseKernel& j) {
  v.require_same_shape(psi);
  return convolve(j.field(psi.dim(), psi.grid_size()), multiply_padded(noise_weight(v, m), psi));
}

double hs_trace(const SpectralField& v, const Mobility& m, const NoiseKernel& j) {
  const RealGrid weight = noise_weight(v, m);
  const SpectralField jf = j.field(v.dim(), v.grid_size());
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  double trace = 0.0;
  for (const auto& p : canonical_modes(v)) {
    const double jk = jf.coeffs()[p.plus].real();
    if (jk == 0.0) continue;
    if (p.plus == p.minus) {
      const SpectralField e = SpectralField::constant(v.dim(), v.grid_size(), jk);
      trace += std::pow(l2_norm(multiply_padded(weight, e)), 2);
      continue;
    }
    // Real orthonormal pair sqrt2 cos, sqrt2 sin spanning e_k, e_{-k}.
    const auto cosine = SpectralField::mode(v.dim(), v.grid_size(), p.k, {jk * inv_sqrt2, 0.0});
    const auto sine = SpectralField::mode(v.dim(), v.grid_size(), p.k, {0.0, -jk * inv_sqrt2});
    trace += std::pow(l2_norm(multiply_padded(weight, cosine)), 2);
    trace += std::pow(l2_norm(multiply_padded(weight, sine)), 2);
  }
  return trace;
}

double martingale_increment_variance(const SpectralField& v, const SpectralField& phi,
                                     const Mobility& m, const NoiseKernel& j) {
  const double norm = l2_norm(project_sub_nyquist(apply_B_adjoint(v, phi, m, j)));
  return norm * norm;
}

}  // namespace macf
