#pragma once

#include <vector>

#include "macf/torus_field.hpp"

namespace macf {

/// Scalar diagnostics of one sampled state.
struct DiagnosticSample {
  double t = 0.0;
  double F = 0.0;         // free energy
  double F_le = 0.0;      // regularized free energy F_{l,eta}
  double willmore = 0.0;  // int sigma(u) (Lap u - W'(u))^2
  double l2 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
};

/// Quantities recorded at every refreeze of the mobility.
struct RefreezeRecord {
  double t = 0.0;
  double min_sigma = 0.0;   // min of the frozen mobility over the grid
  double grad_v = 0.0;      // ||grad v^n|| of the new time average
  double max_grad_u = 0.0;  // max ||grad u|| over the states it averages
};

/// Aggregates over every inner step of a run.
struct RunSummary {
  double sup_F = 0.0;
  double sup_F_le = 0.0;
  double dissipation_integral = 0.0;  // int int sigma(v)(Lap u - R W'_l(R u))^2
  double sup_h1 = 0.0;
  double sup_linf = 0.0;
  long steps = 0;
};

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<DiagnosticSample> diagnostics;  // empty when not requested
  std::vector<SpectralField> checkpoints;     // empty when not requested
  std::vector<RefreezeRecord> refreezes;
  RunSummary summary;
};

}  // namespace macf
