#pragma once

#include <functional>
#include <string>
#include <vector>

#include "macf/torus_field.hpp"

namespace macf {

using ScalarFn = std::function<double(double)>;

/// Double-well-type potential W with its first two derivatives.
/// Non-convexity is confined to K = [-convex_edge, convex_edge].
struct Potential {
  std::string name;
  ScalarFn value;
  ScalarFn d1;
  ScalarFn d2;
  double convex_edge = 0.0;

  /// W(u) = (u^2 - 1)^2 / 4, K = [-1.2, 1.2].
  static Potential double_well();
  /// W(u) = sum_i c_i u^i; K is located numerically.
  static Potential polynomial(std::vector<double> coeffs);
  /// W = 0. Only useful for linear reference runs.
  static Potential zero();
};

/// W_l: W on [-l, l], continued by its second-order Taylor polynomial in |u|.
class TruncatedPotential {
 public:
  const Potential& base() const noexcept { return base_; }
  double level() const noexcept { return level_; }

  double value(double u) const;
  double d1(double u) const;
  double d2(double u) const;

  /// Global Lipschitz constant of W'_l, max |W''| over [-l, l].
  double lipschitz_bound() const noexcept { return lipschitz_; }

 private:
  friend TruncatedPotential truncate(const Potential& base, double level);
  TruncatedPotential(Potential base, double level);

  Potential base_;
  double level_;
  double w_at_;
  double w1_at_;
  double w2_at_;
  double lipschitz_;
};

/// Rejects levels inside K or where W''(level) < 0.
TruncatedPotential truncate(const Potential& base, double level);

/// Mobility sigma with derivatives, bounds and (optionally) a closed-form
/// antiderivative of 1/sigma.
struct Mobility {
  std::string name;
  ScalarFn value;
  ScalarFn d1;
  ScalarFn d2;
  double inf_sigma = 1.0;
  double sup_sigma = 1.0;
  ScalarFn h_closed_form;  // empty when unavailable

  /// sigma(u) = 1 + 1/(1 + u^2): inf 1, sup 2.
  static Mobility standard();
  static Mobility constant(double c);
  /// sigma = P/Q with P, Q given by ascending coefficient lists. Bounds are
  /// estimated by sampling [-bound_range, bound_range].
  static Mobility rational(std::vector<double> numerator, std::vector<double> denominator,
                           double bound_range = 100.0);
};

/// Colored-noise kernel j with Fourier symbol amplitude (1 + 4 pi^2 |k|^2)^(-r).
struct NoiseKernel {
  double decay_exponent = 1.5;
  double amplitude = 1.0;

  double symbol(double k_sq) const;
  /// j on the N^d grid (as Fourier coefficients).
  SpectralField field(int dim, int n) const;
  /// sum_k (1 + 4 pi^2 |k|^2) |j_k|^2 over the N^d grid.
  double h1_sum(int dim, int n) const;
};

struct Model {
  Potential potential;
  Mobility mobility;
  NoiseKernel kernel;
};

Model default_model();

/// h(u) = int_0^u dr / sigma(r). Uses the closed form when registered.
double h_antiderivative(const Mobility& m, double u);
/// Same integral, always by adaptive Gauss-Kronrod quadrature.
double h_quadrature(const Mobility& m, double u);

struct AssumptionItem {
  int id = 0;
  std::string name;
  bool pass = false;
  double constant = 0.0;  // smallest sampled witness constant
  double witness = 0.0;   // sample point that decided the item
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionItem> items;  // the six items, in order
  AssumptionItem kernel;              // j in H^1 proxy
  bool all_pass() const;
  const AssumptionItem& item(int id) const;
};

struct AssumptionCheckOptions {
  double lo = -20.0;
  double hi = 20.0;
  long samples = 100000;
  int dim = 1;
  int grid = 64;
};

AssumptionReport check_assumptions(const Potential& p, const Mobility& m, const NoiseKernel& j,
                                   const AssumptionCheckOptions& opts = {});

}  // namespace macf
