#include <doctest.h>

#include <cmath>
#include <set>

#include "macf/diagnostics.hpp"
#include "macf/errors.hpp"
#include "macf/experiments.hpp"

using namespace macf;

namespace {

SchemeConfig desk() {
  SchemeConfig cfg;
  cfg.dim = 1;
  cfg.grid = 64;
  cfg.horizon = 0.25;
  cfg.outer_steps = 16;
  cfg.inner_steps = 4;
  cfg.eta = 1e-3;
  cfg.ell = 10.0;
  return cfg;
}

SchemeConfig linear_reference() {
  SchemeConfig cfg;
  cfg.dim = 1;
  cfg.grid = 8;
  cfg.horizon = 0.05;
  cfg.outer_steps = 1;
  cfg.inner_steps = 256;
  cfg.eta = 0.0;
  cfg.model.potential = Potential::zero();
  cfg.model.mobility = Mobility::constant(1.0);
  cfg.initial = SpectralField(1, 8);
  return cfg;
}

bool strictly_decreasing(const std::vector<CouplingReport>& reps) {
  for (std::size_t i = 1; i < reps.size(); ++i) {
    if (!(reps[i].sup_l2 < reps[i - 1].sup_l2)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("moments and parallel loop") {
  const MomentEstimate m1 = moment({1.0, 2.0, 3.0, 4.0}, 1);
  CHECK(m1.mean == doctest::Approx(2.5));
  CHECK(m1.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(moment({1.0, 2.0, 3.0}, 2).mean == doctest::Approx(14.0 / 3.0));

  std::vector<int> hits(100, 0);
  parallel_for(100, 4, [&](int i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](int i) {
                    if (i == 7) throw NumericalError("boom");
                  }),
                  NumericalError);
  CHECK(resolve_thread_count(3) >= 1);
}

TEST_CASE("deterministic ensemble has zero variance") {
  SchemeConfig cfg = desk();
  cfg.model.kernel.amplitude = 0.0;
  const EnsembleReport rep = run_ensemble(cfg, 8, 1, 1);
  const TrajectoryRecord one = run(cfg, make_noise_path(cfg, 1, 0), uniform_times(cfg.horizon, 1));
  REQUIRE(rep.sup_F_le.size() == 2);
  CHECK(rep.sup_F_le[0].se == 0.0);
  CHECK(rep.sup_F_le[0].mean == doctest::Approx(one.summary.sup_F_le).epsilon(1e-14));
  CHECK(rep.dissipation[0].mean == doctest::Approx(one.summary.dissipation_integral).epsilon(1e-14));
}

TEST_CASE("desk ensemble: finite moments, standard error shrinks like 1/sqrt(M)") {
  const SchemeConfig cfg = desk();
  const EnsembleReport a = run_ensemble(cfg, 64, 5, 2);
  const EnsembleReport b = run_ensemble(cfg, 128, 5, 2);
  CHECK(a.blowups == 0);
  CHECK_FALSE(a.failed());
  for (const auto* ms : {&a.sup_F, &a.sup_F_le, &a.dissipation, &a.sup_h1}) {
    for (const auto& m : *ms) {
      CHECK(std::isfinite(m.mean));
      CHECK(std::isfinite(m.se));
    }
  }
  const double ratio = b.sup_F_le[0].se / a.sup_F_le[0].se;
  CHECK(ratio == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.2));

  // thread count does not change the report
  const EnsembleReport c = run_ensemble(cfg, 64, 5, 1);
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].sup_F_le == c.rows[i].sup_F_le);
    CHECK(a.rows[i].dissipation == c.rows[i].dissipation);
  }
}

TEST_CASE("refinement studies") {
  const SchemeConfig cfg = desk();
  const auto ell = refinement_study(cfg, RefinementAxis::ell, {10, 20, 40}, 3);
  for (const auto& r : ell) CHECK(r.sup_l2 == 0.0);

  CHECK(strictly_decreasing(refinement_study(cfg, RefinementAxis::m, {4, 8, 16}, 3)));
  CHECK(strictly_decreasing(refinement_study(cfg, RefinementAxis::eta, {4e-3, 2e-3, 1e-3}, 3)));

  CHECK(parse_axis("eta") == RefinementAxis::eta);
  CHECK(axis_name(RefinementAxis::N) == "N");
  CHECK_THROWS_AS(parse_axis("dt"), ConfigError);
  CHECK(at_level(cfg, RefinementAxis::n, 32).outer_steps == 32);
  CHECK_THROWS(refinement_study(cfg, RefinementAxis::m, {8, 4, 16}, 3));
}

TEST_CASE("coupling: identical configs, refinement vs independent baseline") {
  const SchemeConfig a = desk();
  const CouplingReport same = coupling_experiment(a, a, {4, 4, 0}, 16);
  for (double p : same.psi) CHECK(p == 0.0);

  SchemeConfig b = a;
  b.outer_steps *= 2;
  double shared = 0.0, independent = 0.0;
  for (std::uint32_t r = 0; r < 4; ++r) {
    const CouplingReport s = coupling_experiment(a, b, {4, 4, r}, 16);
    const CouplingReport i = coupling_experiment(a, b, {4, 99, r}, 16);
    shared += s.sup_psi;
    independent += i.sup_psi;
    CHECK(std::isfinite(s.log_psi_slope));
  }
  CHECK(shared < 0.1 * independent);

  SchemeConfig other = a;
  other.model.potential = Potential::zero();
  CHECK_THROWS_AS(require_same_equation(a, other), ConfigError);
  other = a;
  other.horizon = 0.5;
  CHECK_THROWS_AS(require_same_equation(a, other), ConfigError);
}

TEST_CASE("martingale test: degenerate, reference and reused-noise control") {
  SchemeConfig det = linear_reference();
  det.model.kernel.amplitude = 0.0;
  const MartingaleReport d = martingale_test(det, 16, default_test_function(1, 8), uniform_times(det.horizon, 4));
  CHECK(d.degenerate);
  CHECK_FALSE(d.pass);

  const SchemeConfig cfg = linear_reference();
  MartingaleOptions opts;
  opts.seed = 1;
  opts.threads = 2;
  const MartingaleReport ok = martingale_test(cfg, 2000, default_test_function(1, 8), uniform_times(cfg.horizon, 4), opts);
  CHECK(ok.pass);
  CHECK(ok.max_abs_z < 4.0);
  CHECK(ok.intervals.size() == 4);
  CHECK_FALSE(ok.coarse);

  opts.reuse_pairs = true;
  const MartingaleReport bad =
      martingale_test(cfg, 2000, default_test_function(1, 8), uniform_times(cfg.horizon, 4), opts);
  CHECK_FALSE(bad.pass);
  double var_z = 0.0;
  for (const auto& s : bad.intervals) var_z = std::max(var_z, std::abs(s.var_z));
  CHECK(var_z >= 4.0);
}
