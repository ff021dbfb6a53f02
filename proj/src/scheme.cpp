#include "macf/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "macf/diagnostics.hpp"

namespace macf {
namespace {

std::string str(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

double sup_norm(const SpectralField& u) {
  return from_fourier(u).cwiseAbs().maxCoeff();
}

}  // namespace

void SchemeConfig::validate() const {
  if (dim < 1 || dim > 3) throw ConfigError("scheme.d", "must be 1, 2 or 3, got " + std::to_string(dim));
  if (grid <= 0 || grid % 2 != 0) throw ConfigError("scheme.N", "must be positive and even, got " + std::to_string(grid));
  if (!(horizon > 0.0)) throw ConfigError("scheme.T", "must be positive");
  if (outer_steps < 1) throw ConfigError("scheme.n", "must be >= 1");
  if (inner_steps < 1) throw ConfigError("scheme.m", "must be >= 1");
  if (!(eta >= 0.0)) throw ConfigError("scheme.eta", "must be >= 0");
  if (!(ell > model.potential.convex_edge)) {
    throw ConfigError("scheme.ell", "must exceed the edge " + str(model.potential.convex_edge) +
                                        " of the non-convex region");
  }
  if (initial.size() != 0 && initial.dim() != dim) {
    throw ConfigError("initial", "initial datum has dimension " + std::to_string(initial.dim()));
  }
}

SpectralField SchemeConfig::initial_field() const {
  if (initial.size() == 0) return SpectralField::mode(dim, grid, {1, 0, 0}, {0.05, 0.0});
  if (initial.grid_size() == grid) return initial;
  return resample(initial, grid);
}

SpectralField mollify_initial(const SpectralField& u0, int n) {
  if (n < 1) throw std::invalid_argument("mollifier index must be >= 1");
  return heat_flow(u0, 1.0 / static_cast<double>(n));
}

Scheme::Scheme(SchemeConfig cfg)
    : cfg_((cfg.validate(), std::move(cfg))),
      potential_(truncate(cfg_.model.potential, cfg_.ell)),
      kernel_(cfg_.model.kernel.field(cfg_.dim, cfg_.grid)) {}

void Scheme::freeze(SchemeState& state, SpectralField v) const {
  state.v = std::move(v);
  const int mgrid = padded_size(cfg_.grid);
  state.frozen_sigma = map_samples<double>(cfg_.model.mobility.value, padded_samples(state.v), cfg_.dim, mgrid);
  state.noise_weight = (2.0 * state.frozen_sigma.array()).sqrt().matrix();
  state.sigma_max = state.frozen_sigma.maxCoeff();
  state.accumulator = SpectralField(cfg_.dim, cfg_.grid);
  state.accumulated = 0;
  state.max_grad_u = 0.0;
}

SchemeState Scheme::initial_state() const {
  SchemeState state;
  state.u = project_sub_nyquist(cfg_.initial_field());
  freeze(state, mollify_initial(state.u, cfg_.outer_steps));
  return state;
}

SpectralField Scheme::gradient_direction(const SpectralField& u) const {
  const double eta = cfg_.eta;
  const SpectralField reaction =
      resolvent(pointwise_apply([this](double x) { return potential_.d1(x); }, resolvent(u, eta)), eta);
  return laplacian(u) - reaction;
}

double Scheme::dissipation(const SchemeState& state) const {
  const RealGrid w = padded_samples(gradient_direction(state.u));
  return (state.frozen_sigma.array() * w.array().square()).mean();
}

void Scheme::inner_step(SchemeState& state, const SpectralField& dW) const {
  state.u.require_same_shape(dW);
  const double dt = cfg_.inner_dt();
  const double s_max = state.sigma_max;

  state.accumulator += state.u;
  ++state.accumulated;
  state.max_grad_u = std::max(state.max_grad_u, std::sqrt(dirichlet_energy(state.u)));

  const SpectralField lap = laplacian(state.u);
  SpectralField rhs = state.u;
  rhs += dt * (multiply_padded(state.frozen_sigma, gradient_direction(state.u)) - s_max * lap);
  if (cfg_.model.kernel.amplitude != 0.0) {
    rhs += multiply_padded(state.noise_weight, convolve(kernel_, dW));
  }
  state.u = apply_multiplier(
      rhs, [dt, s_max](double k_sq) { return 1.0 / (1.0 + dt * s_max * four_pi_sq<double>() * k_sq); });
  ++state.step;

  const double t = static_cast<double>(state.step) * dt;
  if (!state.u.coeffs().allFinite()) {
    throw BlowUpError("non-finite field after step " + std::to_string(state.step) + " (t=" + str(t) + ")", t,
                      state.step);
  }
  // sum |c_k| bounds the sup norm, so the transform is only needed past it.
  const double limit = 10.0 * cfg_.ell;
  if (state.u.coeffs().cwiseAbs().sum() > limit) {
    const double sup = sup_norm(state.u);
    if (sup > limit) {
      throw BlowUpError("sup norm " + str(sup) + " exceeds 10 ell at step " + std::to_string(state.step) +
                            " (t=" + str(t) + ")",
                        t, state.step);
    }
  }
}

RefreezeRecord Scheme::close_outer_interval(SchemeState& state) const {
  if (state.accumulated != cfg_.inner_steps) {
    throw std::logic_error("close_outer_interval called mid-interval (" + std::to_string(state.accumulated) +
                           " of " + std::to_string(cfg_.inner_steps) + " substeps accumulated)");
  }
  RefreezeRecord rec;
  rec.t = static_cast<double>(state.step) * cfg_.inner_dt();
  rec.max_grad_u = state.max_grad_u;
  SpectralField v = state.accumulator;
  v *= 1.0 / static_cast<double>(state.accumulated);
  freeze(state, std::move(v));
  rec.grad_v = std::sqrt(dirichlet_energy(state.v));
  rec.min_sigma = state.frozen_sigma.minCoeff();
  return rec;
}

SchemeState inner_step(const SchemeState& state, const SpectralField& dW, const SchemeConfig& cfg) {
  SchemeState next = state;
  Scheme(cfg).inner_step(next, dW);
  return next;
}

SchemeState close_outer_interval(const SchemeState& state, const SchemeConfig& cfg) {
  SchemeState next = state;
  Scheme(cfg).close_outer_interval(next);
  return next;
}

NoisePath make_noise_path(const SchemeConfig& cfg, std::uint64_t seed, std::uint32_t replicate) {
  return NoisePath(seed, replicate, cfg.inner_dt(), cfg.total_steps(), cfg.grid);
}

std::vector<double> uniform_times(double horizon, int count) {
  std::vector<double> times(static_cast<std::size_t>(count) + 1);
  for (int i = 0; i <= count; ++i) times[static_cast<std::size_t>(i)] = horizon * i / count;
  return times;
}

std::vector<long> sample_steps(const SchemeConfig& cfg, const std::vector<double>& sample_times) {
  const double dt = cfg.inner_dt();
  std::vector<long> steps;
  for (double t : sample_times) {
    if (t < -1e-12 || t > cfg.horizon * (1 + 1e-12)) {
      throw ConfigError("sampling.times", "time " + str(t) + " outside [0, T]");
    }
    const double idx = t / dt;
    const long s = std::lround(idx);
    if (std::abs(idx - static_cast<double>(s)) > 1e-6) {
      throw ConfigError("sampling.times", "time " + str(t) + " is not on the substep grid (dt=" + str(dt) + ")");
    }
    if (!steps.empty() && s <= steps.back()) {
      throw ConfigError("sampling.times", "times must be strictly increasing");
    }
    steps.push_back(s);
  }
  return steps;
}

TrajectoryRecord run(const SchemeConfig& cfg, const NoisePath& path, const std::vector<double>& sample_times,
                     const RunOptions& options) {
  const Scheme scheme(cfg);
  const double dt = cfg.inner_dt();
  const long total = cfg.total_steps();

  const double ratio_real = dt / path.inner_dt();
  const long ratio = std::lround(ratio_real);
  if (ratio < 1 || std::abs(ratio_real - static_cast<double>(ratio)) > 1e-9 * ratio_real) {
    throw ConfigError("scheme", "substep " + str(dt) + " is not a multiple of the noise path step " +
                                    str(path.inner_dt()));
  }
  if (total * ratio > path.steps()) {
    throw ConfigError("scheme.T", "horizon exceeds the noise path");
  }
  if (cfg.grid > path.max_grid()) {
    throw ShapeError("grid N=" + std::to_string(cfg.grid) + " finer than the noise path mode set (N=" +
                     std::to_string(path.max_grid()) + ")");
  }

  const std::vector<long> sample_steps = macf::sample_steps(cfg, sample_times);

  TrajectoryRecord rec;
  const auto& model = cfg.model;
  auto record = [&](const SchemeState& state) {
    const double t = static_cast<double>(state.step) * dt;
    rec.times.push_back(t);
    if (options.checkpoints) rec.checkpoints.push_back(state.u);
    if (options.diagnostics) {
      DiagnosticSample d;
      d.t = t;
      d.F = free_energy(state.u, model.potential);
      d.F_le = regularized_free_energy(state.u, scheme.potential(), cfg.eta);
      d.willmore = willmore(state.u, model.potential, model.mobility);
      d.l2 = sobolev_norm(state.u, 0.0);
      d.h1 = sobolev_norm(state.u, 1.0);
      d.h2 = sobolev_norm(state.u, 2.0);
      rec.diagnostics.push_back(d);
    }
  };
  auto summarize = [&](const SchemeState& state, bool integrate) {
    if (!options.summary) return;
    auto& s = rec.summary;
    s.sup_F = std::max(s.sup_F, free_energy(state.u, model.potential));
    s.sup_F_le = std::max(s.sup_F_le, regularized_free_energy(state.u, scheme.potential(), cfg.eta));
    s.sup_h1 = std::max(s.sup_h1, sobolev_norm(state.u, 1.0));
    s.sup_linf = std::max(s.sup_linf, padded_samples(state.u).cwiseAbs().maxCoeff());
    if (integrate) s.dissipation_integral += dt * scheme.dissipation(state);
  };

  SchemeState state = scheme.initial_state();
  std::size_t next_sample = 0;
  auto maybe_record = [&] {
    while (next_sample < sample_steps.size() && sample_steps[next_sample] == state.step) {
      record(state);
      ++next_sample;
    }
  };

  for (int outer = 0; outer < cfg.outer_steps; ++outer) {
    if (outer > 0) rec.refreezes.push_back(scheme.close_outer_interval(state));
    for (int inner = 0; inner < cfg.inner_steps; ++inner) {
      maybe_record();
      summarize(state, true);
      const long begin = state.step * ratio;
      scheme.inner_step(state, wiener_increment(path, begin, begin + ratio, cfg.dim, cfg.grid));
    }
  }
  maybe_record();
  summarize(state, false);
  rec.summary.steps = total;
  return rec;
}

}  // namespace macf
