#pragma once

// Frozen-mobility approximation scheme. The horizon [0, T] is cut into n
// outer intervals; on each the mobility is frozen at sigma(v), v being the
// time average of u over the previous interval (the mollified initial datum
// on the first), and
//
//     du = sigma_i (Lap u - R_eta W'_l(R_eta u)) dt + sqrt(2 sigma_i) j * d alpha
//
// is integrated with m stabilized IMEX Euler-Maruyama substeps:
//
//     (I - dt s_max Lap) u+ = u + dt [s (Lap u - R W'_l(R u)) - s_max Lap u]
//                               + sqrt(2 s) (j * dW),
//
// s = sigma_i on the grid and s_max = max s.

#include <functional>
#include <vector>

#include "macf/model.hpp"
#include "macf/noise.hpp"
#include "macf/trajectory.hpp"

namespace macf {

struct SchemeConfig {
  int dim = 1;
  int grid = 128;
  double horizon = 1.0;
  int outer_steps = 32;
  int inner_steps = 8;
  double eta = 1e-3;
  double ell = 10.0;
  Model model = default_model();
  SpectralField initial;  // u0; empty means 0.1 cos(2 pi x_1)

  double inner_dt() const { return horizon / (static_cast<double>(outer_steps) * inner_steps); }
  long total_steps() const { return static_cast<long>(outer_steps) * inner_steps; }

  /// Throws ConfigError naming the offending key.
  void validate() const;
  /// The initial datum on this config's grid.
  SpectralField initial_field() const;
};

struct SchemeState {
  SpectralField u;
  SpectralField v;           // current frozen average
  RealGrid frozen_sigma;     // sigma(v) on the dealiasing grid
  RealGrid noise_weight;     // sqrt(2 sigma(v)) on the dealiasing grid
  double sigma_max = 0.0;
  SpectralField accumulator; // sum of left-endpoint states of the open interval
  int accumulated = 0;
  double max_grad_u = 0.0;   // over the accumulated states
  long step = 0;
};

/// Heat-kernel mollifier exp(-4 pi^2 |k|^2 / n): positive, unit mass.
SpectralField mollify_initial(const SpectralField& u0, int n);

/// Integrator bound to a validated configuration.
class Scheme {
 public:
  explicit Scheme(SchemeConfig cfg);

  const SchemeConfig& config() const noexcept { return cfg_; }
  const TruncatedPotential& potential() const noexcept { return potential_; }

  /// u = u0, v = mollified u0, mobility frozen at sigma(v).
  SchemeState initial_state() const;

  /// One substep driven by the Brownian increment dW over this substep.
  void inner_step(SchemeState& state, const SpectralField& dW) const;

  /// v <- mean of the accumulated states; refreeze sigma. Only valid once the
  /// accumulator spans exactly one outer interval.
  RefreezeRecord close_outer_interval(SchemeState& state) const;

  /// Lap u - R_eta W'_l(R_eta u).
  SpectralField gradient_direction(const SpectralField& u) const;

  /// int sigma_i (Lap u - R_eta W'_l(R_eta u))^2 dx with the state's frozen sigma.
  double dissipation(const SchemeState& state) const;

 private:
  void freeze(SchemeState& state, SpectralField v) const;

  SchemeConfig cfg_;
  TruncatedPotential potential_;
  SpectralField kernel_;
};

/// Free-function form of Scheme::inner_step.
SchemeState inner_step(const SchemeState& state, const SpectralField& dW, const SchemeConfig& cfg);
/// Free-function form of Scheme::close_outer_interval.
SchemeState close_outer_interval(const SchemeState& state, const SchemeConfig& cfg);

struct RunOptions {
  bool diagnostics = true;   // scalar diagnostics at sample times
  bool checkpoints = false;  // field copies at sample times
  bool summary = true;       // per-step aggregates (costs a few transforms per step)
};

/// Noise path for a config: fine steps = the config's own steps, modes up to its grid.
NoisePath make_noise_path(const SchemeConfig& cfg, std::uint64_t seed, std::uint32_t replicate);

/// Substep indices of the sample times. Throws ConfigError ("sampling.times")
/// for times outside [0, T], off the substep grid or not increasing.
std::vector<long> sample_steps(const SchemeConfig& cfg, const std::vector<double>& sample_times);

/// Runs the full scheme. The config's substep must be an integer multiple of
/// the path's inner_dt; sample times must lie on the substep grid of [0, T].
TrajectoryRecord run(const SchemeConfig& cfg, const NoisePath& path, const std::vector<double>& sample_times,
                     const RunOptions& options = {});

/// n + 1 equispaced times 0, T/n, ..., T.
std::vector<double> uniform_times(double horizon, int count);

}  // namespace macf
