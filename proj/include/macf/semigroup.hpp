#pragma once

// Frozen-coefficient operators on H = H^1:
//
//     A u   = sigma(v) Lap u
//     A_d u = sigma(R_d v) R_d Lap R_d u,   R_d = (I - d Lap)^-1
//
// with dissipativity shifts, resolvent solves, the generated semigroups and
// the commutator (I - d Lap)[sigma(R_d v), R_d].

#include <cstdint>
#include <vector>

#include "macf/model.hpp"

namespace macf {

struct FrozenOperator {
  SpectralField v;
  double delta = 0.0;  // 0 gives A
  Mobility mobility;
  RealGrid sigma;      // sigma(R_d v) on the dealiasing grid
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double sigma_mean = 0.0;
  double m0 = 0.0;     // set by estimate_m0
};

/// Throws NumericalError unless sigma(R_d v) > 0 on the grid.
FrozenOperator make_operator(const SpectralField& v, double delta, const Mobility& mobility);

SpectralField apply(const FrozenOperator& op, const SpectralField& u);
/// Transpose of apply in the coefficient (L2) inner product.
SpectralField apply_transpose(const FrozenOperator& op, const SpectralField& u);

/// <f, g>_{H^1}
double h1_inner(const SpectralField& f, const SpectralField& g);

struct M0Estimate {
  double m0 = 0.0;              // max(sup sigma, rayleigh_max): the certified shift
  double rayleigh_max = 0.0;    // max over ascended probes of <A u, u>_H / ||u||_H^2
  double probe_max = 0.0;       // the same quotient over the initial probes
  double analytic_proxy = 0.0;  // sup sigma + ||sigma'||_inf ||v||_{H^2}
  int probes = 0;
  int iterations = 0;           // largest iteration count used by a probe
  bool converged = false;
};

struct M0Options {
  std::uint64_t seed = 1;
  int max_iterations = 500;
  double tolerance = 1e-9;  // relative residual of the Rayleigh-Ritz pair
};

/// Maximizes the H^1 Rayleigh quotient of A from `probes` random starts by
/// preconditioned Rayleigh-Ritz ascent. Stores the result in op.m0.
M0Estimate estimate_m0(FrozenOperator& op, int probes, const M0Options& opts = {});

struct SolveResult {
  SpectralField u;
  double residual = 0.0;  // ||((m + m0) I - A) u - f||_H / ||f||_H
  int iterations = 0;
};

/// Solves ((m + m0) I - A) u = f by GMRES in the H^1 inner product,
/// right-preconditioned with ((m + m0) I - sigma_mean Lap)^-1. Throws
/// NumericalError when the residual does not reach `tolerance` within
/// `max_iterations`.
SolveResult resolvent_solve(const FrozenOperator& op, double m, const SpectralField& f, double tolerance = 1e-8,
                            int max_iterations = 10000);

/// S(t) u0 by exponential Euler with the linear part c R_d Lap R_d,
/// c = sup sigma. Exact when sigma is constant.
SpectralField evolve(const FrozenOperator& op, const SpectralField& u0, double t, int steps);

struct CommutatorEstimate {
  double norm = 0.0;  // lower bound on ||(I - d Lap)[sigma(R_d v), R_d]||_{L2_0 -> L2}
  int probes = 0;
  int iterations = 0;
};

/// Power iteration on K^T K over mean-zero probes, K the commutator above.
CommutatorEstimate commutator_norm(const SpectralField& v, double delta, const Mobility& mobility, int probes,
                                   std::uint64_t seed = 1, int max_iterations = 200);

struct SemigroupRow {
  double delta = 0.0;
  double commutator_estimate = 0.0;
  double m0 = 0.0;
  double max_growth_ratio = 0.0;  // max over probes of ||S_d(t) u|| / (e^{m0 t} ||u||)
};

/// Random band-limited field with coefficients decaying like (1 + |k|^2)^(-decay/2).
SpectralField random_field(int dim, int n, std::uint64_t seed, std::uint32_t stream, double decay = 2.0,
                           bool mean_zero = false);

}  // namespace macf
