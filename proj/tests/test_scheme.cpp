#include <doctest.h>

#include <cmath>
#include <numbers>

#include "macf/diagnostics.hpp"
#include "macf/errors.hpp"
#include "macf/scheme.hpp"
#include "macf/semigroup.hpp"

using namespace macf;

namespace {

constexpr double kFourPiSq = 4 * std::numbers::pi * std::numbers::pi;

SchemeConfig small_config() {
  SchemeConfig cfg;
  cfg.dim = 1;
  cfg.grid = 64;
  cfg.horizon = 0.25;
  cfg.outer_steps = 8;
  cfg.inner_steps = 4;
  cfg.eta = 1e-3;
  cfg.ell = 10.0;
  return cfg;
}

SchemeConfig deterministic(SchemeConfig cfg) {
  cfg.model.kernel.amplitude = 0.0;
  return cfg;
}

SpectralField cosine(int n, double a) { return SpectralField::mode(1, n, {1, 0, 0}, {a / 2, 0.0}); }

}  // namespace

TEST_CASE("mollifier") {
  const SpectralField c = SpectralField::constant(2, 8, 1.3);
  CHECK(mollify_initial(c, 5) == c);
  const SpectralField u = cosine(32, 1.0);
  const SpectralField m = mollify_initial(u, 16);
  CHECK(m.coeff({1, 0, 0}).real() == doctest::Approx(0.5 * std::exp(-kFourPiSq / 16)).epsilon(1e-14));
  CHECK(m.coeff({-1, 0, 0}).real() == doctest::Approx(0.5 * std::exp(-kFourPiSq / 16)).epsilon(1e-14));
  const SpectralField r = random_field(1, 32, 1, 0, 1.0);
  double prev = INFINITY;
  for (int n : {2, 4, 8, 16, 32, 64}) {
    const double e = l2_norm(mollify_initial(r, n) - r);
    CHECK(e < prev);
    prev = e;
  }
}

TEST_CASE("linear step is a backward Euler heat step") {
  SchemeConfig cfg = deterministic(small_config());
  cfg.model.potential = Potential::zero();
  cfg.model.mobility = Mobility::constant(1.0);
  cfg.initial = project_sub_nyquist(random_field(1, 64, 2, 0));
  const Scheme scheme(cfg);
  SchemeState s = scheme.initial_state();
  const SpectralField u0 = s.u;
  scheme.inner_step(s, SpectralField(1, 64));
  const double dt = cfg.inner_dt();
  const SpectralField expected = apply_multiplier(u0, [&](double k2) { return 1.0 / (1.0 + dt * kFourPiSq * k2); });
  CHECK(l2_norm(s.u - expected) < 1e-14);
  CHECK(s.step == 1);
}

TEST_CASE("deterministic increment is first order in dt") {
  // Low modes only, and dt small enough that dt s_max 4 pi^2 |k|^2 << 1 on the drift.
  SchemeConfig cfg = deterministic(small_config());
  cfg.horizon = 0.01;
  cfg.initial = cosine(64, 0.8) + 0.3 * resample(random_field(1, 8, 3, 0, 1.0), 64);
  double prev = 0.0;
  std::vector<double> orders;
  for (int m : {64, 128, 256, 512}) {
    cfg.inner_steps = m;
    const Scheme scheme(cfg);
    SchemeState s = scheme.initial_state();
    const SpectralField u = s.u;
    const SpectralField drift = multiply_padded(s.frozen_sigma, scheme.gradient_direction(u));
    scheme.inner_step(s, SpectralField(1, 64));
    const double err = l2_norm((s.u - u) * (1.0 / cfg.inner_dt()) - drift);
    if (prev > 0.0) orders.push_back(std::log2(prev / err));
    prev = err;
  }
  for (double p : orders) CHECK(p >= 0.99);
}

TEST_CASE("constant stationary point") {
  SchemeConfig cfg = deterministic(small_config());
  cfg.initial = SpectralField::constant(1, 64, 1.0);
  const Scheme scheme(cfg);
  SchemeState s = scheme.initial_state();
  for (int i = 0; i < 10; ++i) scheme.inner_step(s, SpectralField(1, 64));
  CHECK(l2_norm(s.u - cfg.initial) < 1e-12);
}

TEST_CASE("interval average and refreeze") {
  SchemeConfig cfg = deterministic(small_config());
  cfg.inner_steps = 2;
  cfg.model.potential = Potential::zero();
  cfg.initial = SpectralField::constant(1, 64, 0.4);
  {
    const Scheme scheme(cfg);
    SchemeState s = scheme.initial_state();
    scheme.inner_step(s, SpectralField(1, 64));
    scheme.inner_step(s, SpectralField(1, 64));
    scheme.close_outer_interval(s);
    CHECK(l2_norm(s.v - cfg.initial) < 1e-15);
  }
  cfg.initial = cosine(64, 0.5);
  const Scheme scheme(cfg);
  SchemeState s = scheme.initial_state();
  const SpectralField f = s.u;
  CHECK_THROWS_AS(scheme.close_outer_interval(s), std::logic_error);
  scheme.inner_step(s, SpectralField(1, 64));
  const SpectralField g = s.u;
  scheme.inner_step(s, SpectralField(1, 64));
  const RefreezeRecord rec = scheme.close_outer_interval(s);
  CHECK(l2_norm(s.v - 0.5 * (f + g)) < 1e-15);

  const RealGrid vx = padded_samples(s.v);
  for (Eigen::Index i = 0; i < vx.size(); ++i) {
    CHECK(s.frozen_sigma[i] == doctest::Approx(cfg.model.mobility.value(vx[i])).epsilon(1e-15));
  }
  CHECK(rec.min_sigma >= cfg.model.mobility.inf_sigma);
  CHECK(rec.grad_v <= rec.max_grad_u + 1e-10);

  // free-function form agrees
  SchemeState a = scheme.initial_state();
  a = inner_step(a, SpectralField(1, 64), cfg);
  a = inner_step(a, SpectralField(1, 64), cfg);
  a = close_outer_interval(a, cfg);
  CHECK(a.v == s.v);
}

TEST_CASE("run: constant minimizer and determinism") {
  SchemeConfig cfg = deterministic(small_config());
  cfg.initial = SpectralField::constant(1, 64, 1.0);
  const NoisePath path = make_noise_path(cfg, 1, 0);
  const TrajectoryRecord rec = run(cfg, path, uniform_times(cfg.horizon, 8));
  for (const auto& d : rec.diagnostics) {
    CHECK(std::abs(d.F) < 1e-14);
    CHECK(std::abs(d.l2 - 1.0) < 1e-12);
  }

  SchemeConfig noisy = small_config();
  const NoisePath p2 = make_noise_path(noisy, 9, 2);
  RunOptions opts;
  opts.checkpoints = true;
  const TrajectoryRecord a = run(noisy, p2, uniform_times(noisy.horizon, 8), opts);
  const TrajectoryRecord b = run(noisy, p2, uniform_times(noisy.horizon, 8), opts);
  REQUIRE(a.checkpoints.size() == b.checkpoints.size());
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) CHECK(a.checkpoints[i] == b.checkpoints[i]);
  CHECK(a.summary.sup_F == b.summary.sup_F);
  CHECK(a.summary.dissipation_integral == b.summary.dissipation_integral);
}

TEST_CASE("run: deterministic energy decay") {
  SchemeConfig cfg = deterministic(small_config());
  cfg.initial = cosine(64, 0.2);
  for (int m : {4, 8}) {
    cfg.inner_steps = m;
    const TrajectoryRecord rec = run(cfg, make_noise_path(cfg, 1, 0), uniform_times(cfg.horizon, 32));
    for (std::size_t i = 1; i < rec.diagnostics.size(); ++i) {
      CHECK(rec.diagnostics[i].F < rec.diagnostics[i - 1].F);
    }
  }
}

TEST_CASE("run: refreeze invariants along a noisy path") {
  const SchemeConfig cfg = small_config();
  const TrajectoryRecord rec = run(cfg, make_noise_path(cfg, 4, 0), uniform_times(cfg.horizon, 8));
  CHECK(rec.refreezes.size() == static_cast<std::size_t>(cfg.outer_steps - 1));
  for (const auto& r : rec.refreezes) {
    CHECK(r.min_sigma >= cfg.model.mobility.inf_sigma);
    CHECK(r.grad_v <= r.max_grad_u + 1e-10);
  }
}

TEST_CASE("run: level changes above the visited range change nothing") {
  SchemeConfig a = small_config();
  RunOptions opts;
  opts.checkpoints = true;
  const NoisePath path = make_noise_path(a, 3, 0);
  const TrajectoryRecord ra = run(a, path, uniform_times(a.horizon, 8), opts);
  REQUIRE(ra.summary.sup_linf < 10.0);
  SchemeConfig b = a;
  b.ell = 20.0;
  const TrajectoryRecord rb = run(b, path, uniform_times(b.horizon, 8), opts);
  for (std::size_t i = 0; i < ra.checkpoints.size(); ++i) CHECK(ra.checkpoints[i] == rb.checkpoints[i]);
}

TEST_CASE("run: eta halvings converge") {
  SchemeConfig cfg = small_config();
  RunOptions opts;
  opts.checkpoints = true;
  cfg.eta = 8e-3;
  const NoisePath path = make_noise_path(cfg, 6, 0);
  std::vector<TrajectoryRecord> recs;
  for (double eta : {8e-3, 4e-3, 2e-3, 1e-3}) {
    cfg.eta = eta;
    recs.push_back(run(cfg, path, uniform_times(cfg.horizon, 8), opts));
  }
  double prev = INFINITY;
  for (std::size_t k = 1; k < recs.size(); ++k) {
    double dist = 0.0;
    for (std::size_t i = 0; i < recs[k].checkpoints.size(); ++i) {
      dist = std::max(dist, l2_norm(recs[k].checkpoints[i] - recs[k - 1].checkpoints[i]));
    }
    CHECK(dist < prev);
    prev = dist;
  }
}

TEST_CASE("run: path compatibility and sample alignment") {
  SchemeConfig cfg = small_config();
  SchemeConfig fine = cfg;
  fine.inner_steps = 8;
  const NoisePath fine_path = make_noise_path(fine, 1, 0);
  // a coarser scheme on a finer path sums consecutive increments
  CHECK_NOTHROW(run(cfg, fine_path, uniform_times(cfg.horizon, 4)));
  CHECK_THROWS(run(fine, make_noise_path(cfg, 1, 0), uniform_times(cfg.horizon, 4)));
  CHECK_THROWS_AS(run(cfg, fine_path, {0.0, 0.001}), ConfigError);
}

TEST_CASE("blow-up is reported, not clipped") {
  SchemeConfig cfg;
  cfg.dim = 1;
  cfg.grid = 32;
  cfg.horizon = 1.0;
  cfg.outer_steps = 1;
  cfg.inner_steps = 4;
  cfg.eta = 0.0;
  cfg.ell = 2.0;
  cfg.initial = cosine(32, 2.0);
  cfg.model.kernel.amplitude = 100.0;
  try {
    run(cfg, make_noise_path(cfg, 1, 0), uniform_times(1.0, 4));
    FAIL("expected a blow-up");
  } catch (const BlowUpError& e) {
    CHECK(e.time() > 0.0);
    CHECK(e.step() >= 1);
  }
}

TEST_CASE("config validation names the key") {
  SchemeConfig cfg = small_config();
  cfg.grid = 7;
  try {
    cfg.validate();
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "scheme.N");
  }
  cfg = small_config();
  cfg.ell = 1.0;
  CHECK_THROWS_AS(Scheme{cfg}, ConfigError);
  cfg = small_config();
  cfg.inner_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
