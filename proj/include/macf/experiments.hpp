#pragma once

// Monte Carlo ensembles, shared-noise coupling, refinement studies and the
// martingale-property test.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "macf/scheme.hpp"

namespace macf {

/// Worker count: MACF_THREADS if set, else `configured` if positive, else the
/// number of hardware threads.
int resolve_thread_count(int configured);

/// Runs body(0) ... body(count - 1) on `threads` workers. Results must be
/// written to per-index slots; the first exception is rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& body);

struct ReplicateSummary {
  std::uint32_t replicate = 0;
  double sup_F = 0.0;
  double sup_F_le = 0.0;
  double dissipation = 0.0;  // int sigma(v)(Lap u - R W'_l(R u))^2 dt
  double sup_h1 = 0.0;
  bool blew_up = false;
  double blowup_time = 0.0;
};

struct MomentEstimate {
  int p = 1;
  double mean = 0.0;
  double se = 0.0;  // sample std of X^p over sqrt(M)
};

struct EnsembleReport {
  int replicates = 0;
  std::uint64_t seed = 0;
  std::vector<ReplicateSummary> rows;  // ordered by replicate id
  int blowups = 0;
  // p = 1, 2 over the replicates that did not blow up.
  std::vector<MomentEstimate> sup_F;
  std::vector<MomentEstimate> sup_F_le;
  std::vector<MomentEstimate> dissipation;
  std::vector<MomentEstimate> sup_h1;

  double blowup_fraction() const;
  /// More than 5% of the replicates blew up.
  bool failed() const;
};

/// Replicate r uses replicate id r of `seed`.
EnsembleReport run_ensemble(const SchemeConfig& cfg, int replicates, std::uint64_t seed, int threads = 1);

/// Mean and standard error of x^p.
MomentEstimate moment(const std::vector<double>& x, int p);

struct CouplingReport {
  std::string label_a;
  std::string label_b;
  std::vector<double> times;
  std::vector<double> psi;      // Psi_t = ||h(u_t) - h(u'_t)||_{H^-1}^2 / 2
  std::vector<double> l2;       // ||u_t - u'_t||_{L2}
  double sup_l2 = 0.0;
  double sup_psi = 0.0;
  double final_psi = 0.0;
  /// Least-squares slope of log Psi_t against t over the second half of the
  /// samples with Psi_t > 0. NaN when fewer than two such samples exist.
  double log_psi_slope = 0.0;
};

enum class RefinementAxis { n, m, eta, ell, N };

RefinementAxis parse_axis(const std::string& name);
std::string axis_name(RefinementAxis axis);

/// `base` with the axis parameter set to `level`.
SchemeConfig at_level(SchemeConfig base, RefinementAxis axis, double level);

/// Runs every level on one master noise path (finest substep, largest grid)
/// and compares consecutive levels at the sample times of the coarsest time
/// grid. Fields are compared on the finer of the two grids.
std::vector<CouplingReport> refinement_study(const SchemeConfig& base, RefinementAxis axis,
                                             const std::vector<double>& levels, std::uint64_t seed,
                                             std::uint32_t replicate = 0, int threads = 1);

/// Two configurations of the same equation driven by paths of (seed_a, seed_b).
/// Equal seeds mean shared noise.
struct CouplingNoise {
  std::uint64_t seed_a = 0;
  std::uint64_t seed_b = 0;
  std::uint32_t replicate = 0;
};

/// Psi_t and the L2 distance of the pair at `sample_count` + 1 uniform times.
CouplingReport coupling_experiment(const SchemeConfig& a, const SchemeConfig& b, const CouplingNoise& noise,
                                   int sample_count);

/// Throws ConfigError unless both configs solve the same equation on the same
/// (d, T).
void require_same_equation(const SchemeConfig& a, const SchemeConfig& b);

struct IntervalScore {
  double t0 = 0.0;
  double t1 = 0.0;
  double mean = 0.0;      // mean of M_t1 - M_t0
  double mean_z = 0.0;
  double second_moment = 0.0;  // mean of (M_t1 - M_t0)^2
  double qv_pred = 0.0;        // mean predicted quadratic-variation increment
  double var_z = 0.0;
};

struct MartingaleReport {
  int replicates = 0;
  int blowups = 0;
  bool degenerate = false;  // j = 0: no martingale part, nothing scored
  bool coarse = false;      // drift quadrature flagged as too coarse in some replicate
  std::vector<IntervalScore> intervals;
  double max_abs_z = 0.0;
  bool pass = false;  // not degenerate and every |z| < 4
};

struct MartingaleOptions {
  std::uint64_t seed = 0;
  bool reuse_pairs = false;  // negative control
  int threads = 1;
  double z_threshold = 4.0;
};

/// For every interval [s, t] of `test_times` estimates E[M_t - M_s] and
/// E[(M_t - M_s)^2 - QV increment] with z-scores. The drift integral uses the
/// trapezoid over every substep.
MartingaleReport martingale_test(const SchemeConfig& cfg, int replicates, const SpectralField& psi,
                                 const std::vector<double>& test_times, const MartingaleOptions& opts = {});

}  // namespace macf
