#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "macf/noise.hpp"
#include "macf/philox.hpp"
#include "macf/semigroup.hpp"

using namespace macf;

namespace {

struct Stats {
  double mean = 0.0, var = 0.0, se_var = 0.0;
};

// Sample variance and its standard error (from the sample fourth moment).
Stats stats(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  Stats s;
  for (double v : x) s.mean += v / n;
  double m4 = 0.0;
  for (double v : x) {
    const double d = v - s.mean;
    s.var += d * d / (n - 1);
    m4 += d * d * d * d / n;
  }
  s.se_var = std::sqrt((m4 - s.var * s.var) / n);
  return s;
}

NoiseKernel flat_kernel() {
  NoiseKernel j;
  j.decay_exponent = 0.0;
  return j;
}

}  // namespace

TEST_CASE("philox known answers") {
  const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
  CHECK(zero == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  const auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  CHECK(ones == PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  const auto pi = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  CHECK(pi == PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("increments are pure functions of their keys") {
  const NoisePath a(7, 3, 1e-3, 64, 32);
  const NoisePath b(7, 3, 1e-3, 64, 32);
  for (long step : {0L, 5L, 63L}) {
    for (const Wavevector& k : {Wavevector{0, 0, 0}, Wavevector{3, 0, 0}, Wavevector{-2, 1, 0}}) {
      CHECK(a.mode_increment(step, k) == b.mode_increment(step, k));
    }
  }
  CHECK(a.mode_increment(1, {1, 0, 0}) != a.with_replicate(4).mode_increment(1, {1, 0, 0}));
  CHECK(a.mode_increment(1, {1, 0, 0}) != NoisePath(8, 3, 1e-3, 64, 32).mode_increment(1, {1, 0, 0}));
  CHECK(a.mode_increment(0, {0, 0, 0}).imag() == 0.0);

  // Coarser grids see the same low modes.
  const SpectralField fine = wiener_increment(a, 0, 4, 2, 32);
  const SpectralField coarse = wiener_increment(a, 0, 4, 2, 8);
  CHECK(resample(fine, 8) == coarse);
}

TEST_CASE("additivity and Hermitian pairing") {
  const NoisePath path(1, 0, 1.0 / 256, 256, 16);
  for (int dim = 1; dim <= 3; ++dim) {
    const int n = dim == 3 ? 8 : 16;
    CHECK(l2_norm(wiener_increment(path, 5, 5, dim, n)) == 0.0);
    SpectralField sum(dim, n);
    for (long s = 0; s < 8; ++s) sum += wiener_increment(path, s, s + 1, dim, n);
    const SpectralField whole = wiener_increment(path, 0, 8, dim, n);
    CHECK(sum == whole);
    CHECK(wiener_increment(path, 0, 2, dim, n) == wiener_increment(path, 0, 1, dim, n) + wiener_increment(path, 1, 2, dim, n));
    CHECK(hermitian_defect(whole) == 0.0);
    CHECK(from_fourier(whole).allFinite());
  }
}

TEST_CASE("reused-pairs control repeats even steps") {
  const NoisePath path = NoisePath(2, 0, 0.01, 16, 8).with_reused_pairs();
  CHECK(path.reuses_pairs());
  CHECK(path.mode_increment(3, {1, 0, 0}) == path.mode_increment(2, {1, 0, 0}));
  CHECK(path.mode_increment(2, {1, 0, 0}) != path.mode_increment(1, {1, 0, 0}));
}

TEST_CASE("per-mode variance and cross-mode independence") {
  const int draws = 10000;
  const double dt = 1.0 / 64;
  const NoisePath path(11, 0, dt, draws, 64);
  std::vector<double> re0, re1, im1, re5;
  for (long s = 0; s < draws; ++s) {
    const SpectralField dw = wiener_increment(path, s, s + 1, 1, 64);
    re0.push_back(dw.coeff({0, 0, 0}).real());
    re1.push_back(dw.coeff({1, 0, 0}).real());
    im1.push_back(dw.coeff({1, 0, 0}).imag());
    re5.push_back(dw.coeff({-31, 0, 0}).real());
  }
  const Stats s0 = stats(re0), s1 = stats(re1), s2 = stats(im1), s3 = stats(re5);
  CHECK(std::abs(s0.var - dt) <= 3 * s0.se_var);
  CHECK(std::abs(s1.var - dt / 2) <= 3 * s1.se_var);
  CHECK(std::abs(s2.var - dt / 2) <= 3 * s2.se_var);
  CHECK(std::abs(s3.var - dt / 2) <= 3 * s3.se_var);

  auto corr = [&](const std::vector<double>& x, const std::vector<double>& y) {
    const Stats sx = stats(x), sy = stats(y);
    double c = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) c += (x[i] - sx.mean) * (y[i] - sy.mean);
    return c / (x.size() - 1) / std::sqrt(sx.var * sy.var);
  };
  const double bound = 3.0 / std::sqrt(static_cast<double>(draws));
  CHECK(std::abs(corr(re0, re1)) < bound);
  CHECK(std::abs(corr(re1, im1)) < bound);
  CHECK(std::abs(corr(re1, re5)) < bound);
}

TEST_CASE("noise operator closed forms") {
  const int n = 16;
  const SpectralField v = random_field(1, n, 3, 0);
  const SpectralField psi = project_sub_nyquist(random_field(1, n, 4, 0, 1.0));
  const Mobility half = Mobility::constant(0.5);
  CHECK(l2_norm(apply_B(v, psi, half, flat_kernel()) - psi) < 1e-13);
  CHECK(l2_norm(apply_B(v, SpectralField(1, n), Mobility::standard(), NoiseKernel{})) == 0.0);

  const SpectralField phi = SpectralField::mode(1, n, {1, 0, 0}, {0.5, 0.0});
  CHECK(martingale_increment_variance(v, phi, half, flat_kernel()) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(martingale_increment_variance(v, SpectralField(1, n), half, flat_kernel()) == 0.0);

  for (int dim = 1; dim <= 3; ++dim) {
    const int g = 8;
    const NoiseKernel j;
    const SpectralField jf = j.field(dim, g);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < jf.size(); ++i) {
      if (jf.sub_nyquist(i)) sum += std::norm(jf.coeffs()[i]);
    }
    const SpectralField w = random_field(dim, g, 5, 0);
    CHECK(std::abs(hs_trace(w, Mobility::constant(1.7), j) - 2 * 1.7 * sum) < 1e-10 * sum);
    NoiseKernel zero;
    zero.amplitude = 0.0;
    CHECK(hs_trace(w, Mobility::standard(), zero) == 0.0);
    NoiseKernel twice;
    twice.amplitude = 2.0;
    CHECK(hs_trace(w, Mobility::standard(), twice) == doctest::Approx(4 * hs_trace(w, Mobility::standard(), j)));
  }
}

TEST_CASE("apply_B against a physical-space oracle") {
  const int n = 32, fine = 256;
  const SpectralField v = 0.5 * resample(random_field(1, 8, 6, 0, 2.0), n);
  const SpectralField psi = project_sub_nyquist(random_field(1, n, 7, 0, 1.0));
  const Mobility m = Mobility::standard();
  const NoiseKernel j;
  const SpectralField jpsi = convolve(j.field(1, n), psi);
  RealGrid vx = from_fourier(resample(v, fine));
  RealGrid jx = from_fourier(resample(jpsi, fine));
  RealGrid prod(fine);
  for (int i = 0; i < fine; ++i) prod[i] = std::sqrt(2 * m.value(vx[i])) * jx[i];
  const SpectralField oracle = project_sub_nyquist(resample(to_fourier(1, fine, prod), n));
  const SpectralField got = apply_B(v, psi, m, j);
  CHECK(l2_norm(got - oracle) <= 1e-8 * l2_norm(oracle));
  // adjoint in the coefficient inner product
  const SpectralField chi = project_sub_nyquist(random_field(1, n, 8, 0, 1.0));
  CHECK(l2_inner(apply_B(v, psi, m, j), chi) ==
        doctest::Approx(l2_inner(psi, apply_B_adjoint(v, chi, m, j))).epsilon(1e-12));
}

TEST_CASE("Ito isometry for a frozen state") {
  const int n = 32, draws = 10000;
  const double dt = 1e-3;
  const SpectralField v = random_field(1, n, 9, 0);
  const SpectralField phi = SpectralField::mode(1, n, {1, 0, 0}, {0.5, 0.0}) +
                            SpectralField::mode(1, n, {2, 0, 0}, {0.0, 0.3});
  const Mobility m = Mobility::standard();
  const NoiseKernel j;
  const NoisePath path(5, 0, dt, draws, n);
  const SpectralField adj = apply_B_adjoint(v, phi, m, j);
  std::vector<double> x;
  for (long s = 0; s < draws; ++s) x.push_back(l2_inner(wiener_increment(path, s, s + 1, 1, n), adj));
  const Stats st = stats(x);
  const double predicted = martingale_increment_variance(v, phi, m, j) * dt;
  CHECK(std::abs(st.var - predicted) <= 3 * st.se_var);
}
