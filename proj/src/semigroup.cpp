#include "macf/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace macf {

SpectralField random_field(int dim, int n, std::uint64_t seed, std::uint32_t stream, double decay, bool mean_zero) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + stream);
  std::normal_distribution<double> normal;
  SpectralField f(dim, n);
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double scale = std::pow(1.0 + f.wavenumber_sq(i), -0.5 * decay);
    f.coeffs()[i] = {scale * normal(rng), scale * normal(rng)};
  }
  f = project_sub_nyquist(enforce_hermitian(f));
  if (mean_zero) f.coeffs()[0] = 0.0;
  return f;
}

FrozenOperator make_operator(const SpectralField& v, double delta, const Mobility& mobility) {
  if (delta < 0.0) throw std::invalid_argument("delta must be >= 0");
  FrozenOperator op;
  op.v = v;
  op.delta = delta;
  op.mobility = mobility;
  const SpectralField smoothed = delta > 0.0 ? resolvent(v, delta) : v;
  op.sigma = map_samples<double>(mobility.value, padded_samples(smoothed), v.dim(), padded_size(v.grid_size()));
  op.sigma_min = op.sigma.minCoeff();
  op.sigma_max = op.sigma.maxCoeff();
  op.sigma_mean = op.sigma.mean();
  if (!(op.sigma_min > 0.0)) {
    std::ostringstream msg;
    msg << "frozen mobility is not positive (min " << op.sigma_min << ")";
    throw NumericalError(msg.str());
  }
  return op;
}

SpectralField apply(const FrozenOperator& op, const SpectralField& u) {
  op.v.require_same_shape(u);
  if (op.delta == 0.0) return multiply_padded(op.sigma, laplacian(u));
  return multiply_padded(op.sigma, resolvent(laplacian(resolvent(u, op.delta)), op.delta));
}

SpectralField apply_transpose(const FrozenOperator& op, const SpectralField& u) {
  op.v.require_same_shape(u);
  if (op.delta == 0.0) return laplacian(multiply_padded(op.sigma, u));
  return resolvent(laplacian(resolvent(multiply_padded(op.sigma, u), op.delta)), op.delta);
}

double h1_inner(const SpectralField& f, const SpectralField& g) { return sobolev_inner(f, g, 1.0); }

namespace {

// In y = G^{1/2} u coordinates (G the H^1 weight) the H^1 Rayleigh quotient of
// A is the Euclidean one of S = (B + B^T) / 2, B = G^{1/2} A G^{-1/2}.
SpectralField weight_power(const SpectralField& f, double p) {
  return apply_multiplier(f, [p](double k_sq) { return std::pow(1.0 + four_pi_sq<double>() * k_sq, p); });
}

SpectralField symmetric_part(const FrozenOperator& op, const SpectralField& y) {
  const SpectralField b = weight_power(apply(op, weight_power(y, -0.5)), 0.5);
  const SpectralField bt = weight_power(apply_transpose(op, weight_power(y, 0.5)), -0.5);
  return 0.5 * (b + bt);
}

double rayleigh_h1(const FrozenOperator& op, const SpectralField& u) {
  return h1_inner(apply(op, u), u) / h1_inner(u, u);
}

// Orthonormalizes `basis` in place (modified Gram-Schmidt), dropping
// near-dependent vectors.
void orthonormalize(std::vector<SpectralField>& basis) {
  std::vector<SpectralField> out;
  for (auto b : basis) {
    const double initial = l2_norm(b);
    if (initial == 0.0) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : out) b -= l2_inner(b, q) * q;
    }
    const double norm = l2_norm(b);
    if (norm > 1e-10 * initial) out.push_back((1.0 / norm) * b);
  }
  basis = std::move(out);
}

}  // namespace

M0Estimate estimate_m0(FrozenOperator& op, int probes, const M0Options& opts) {
  if (probes < 16) throw std::invalid_argument("estimate_m0 needs at least 16 probes");
  M0Estimate est;
  est.probes = probes;
  est.converged = true;
  est.rayleigh_max = -std::numeric_limits<double>::infinity();
  est.probe_max = -std::numeric_limits<double>::infinity();
  const int dim = op.v.dim(), n = op.v.grid_size();
  const double shift = op.sigma_mean;
  // Preconditioner ~ inverse of the stiff part of -S, which grows like |k|^2.
  auto precondition = [shift](const SpectralField& r) {
    return apply_multiplier(r, [shift](double k_sq) { return 1.0 / (1.0 + shift * four_pi_sq<double>() * k_sq); });
  };

  for (int p = 0; p < probes; ++p) {
    const SpectralField u0 = random_field(dim, n, opts.seed, static_cast<std::uint32_t>(p), 1.0);
    est.probe_max = std::max(est.probe_max, rayleigh_h1(op, u0));

    SpectralField x = weight_power(u0, 0.5);
    x *= 1.0 / l2_norm(x);
    SpectralField sx = symmetric_part(op, x);
    double q = l2_inner(x, sx);
    SpectralField prev(dim, n);
    bool done = false;
    int it = 0;
    for (; it < opts.max_iterations; ++it) {
      const SpectralField r = sx - q * x;
      if (l2_norm(r) <= opts.tolerance * std::max(1.0, std::abs(q))) {
        done = true;
        break;
      }
      std::vector<SpectralField> basis{x, precondition(r)};
      if (it > 0) basis.push_back(prev);
      orthonormalize(basis);
      std::vector<SpectralField> images;
      for (const auto& b : basis) images.push_back(symmetric_part(op, b));
      const auto k = static_cast<Eigen::Index>(basis.size());
      Eigen::MatrixXd h(k, k);
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) h(i, j) = l2_inner(basis[i], images[j]);
      }
      h = 0.5 * (h + h.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
      const Eigen::VectorXd c = eig.eigenvectors().col(k - 1);
      SpectralField next(dim, n), next_image(dim, n);
      for (Eigen::Index i = 0; i < k; ++i) {
        next += c[i] * basis[i];
        next_image += c[i] * images[i];
      }
      // Search direction: the part of the new iterate outside x.
      prev = next - l2_inner(next, x) * x;
      const double norm = l2_norm(next);
      x = (1.0 / norm) * next;
      sx = (1.0 / norm) * next_image;
      q = l2_inner(x, sx);
    }
    est.iterations = std::max(est.iterations, it);
    est.converged = est.converged && done;
    // Report the quotient of the H^1 iterate itself.
    est.rayleigh_max = std::max(est.rayleigh_max, rayleigh_h1(op, weight_power(x, -0.5)));
  }

  const SpectralField smoothed = op.delta > 0.0 ? resolvent(op.v, op.delta) : op.v;
  const RealGrid dsigma =
      map_samples<double>(op.mobility.d1, padded_samples(smoothed), dim, padded_size(n)).cwiseAbs();
  est.analytic_proxy = op.sigma_max + dsigma.maxCoeff() * sobolev_norm(op.v, 2.0);
  est.m0 = std::max(op.sigma_max, est.rayleigh_max);
  op.m0 = est.m0;
  return est;
}

SolveResult resolvent_solve(const FrozenOperator& op, double m, const SpectralField& f, double tolerance,
                            int max_iterations) {
  if (!(m > 0.0)) throw std::invalid_argument("resolvent parameter m must be positive");
  op.v.require_same_shape(f);
  const double alpha = m + op.m0;
  const double sbar = op.sigma_mean;
  auto op_apply = [&](const SpectralField& u) { return alpha * u - apply(op, u); };
  auto precondition = [&](const SpectralField& r) {
    return apply_multiplier(r, [alpha, sbar](double k_sq) { return 1.0 / (alpha + sbar * four_pi_sq<double>() * k_sq); });
  };
  auto norm_h = [](const SpectralField& g) { return std::sqrt(std::max(0.0, h1_inner(g, g))); };

  SolveResult out;
  out.u = SpectralField(f.dim(), f.grid_size());
  const double fnorm = norm_h(f);
  if (fnorm == 0.0) return out;

  const int restart = 60;
  SpectralField r = f;
  double beta = fnorm;
  while (out.iterations < max_iterations) {
    std::vector<SpectralField> vbasis{(1.0 / beta) * r};
    std::vector<SpectralField> zbasis;
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(restart + 1, restart);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(restart + 1);
    g[0] = beta;
    std::vector<double> cs(restart), sn(restart);
    int j = 0;
    double res = beta;
    for (; j < restart && out.iterations < max_iterations; ++j, ++out.iterations) {
      zbasis.push_back(precondition(vbasis[static_cast<std::size_t>(j)]));
      SpectralField w = op_apply(zbasis.back());
      for (int i = 0; i <= j; ++i) {
        hess(i, j) = h1_inner(w, vbasis[static_cast<std::size_t>(i)]);
        w -= hess(i, j) * vbasis[static_cast<std::size_t>(i)];
      }
      hess(j + 1, j) = norm_h(w);
      if (hess(j + 1, j) > 0.0) vbasis.push_back((1.0 / hess(j + 1, j)) * w);
      for (int i = 0; i < j; ++i) {
        const double t = cs[i] * hess(i, j) + sn[i] * hess(i + 1, j);
        hess(i + 1, j) = -sn[i] * hess(i, j) + cs[i] * hess(i + 1, j);
        hess(i, j) = t;
      }
      const double rr = std::hypot(hess(j, j), hess(j + 1, j));
      cs[j] = hess(j, j) / rr;
      sn[j] = hess(j + 1, j) / rr;
      hess(j, j) = rr;
      hess(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      res = std::abs(g[j + 1]);
      if (res <= tolerance * fnorm || vbasis.size() <= static_cast<std::size_t>(j + 1)) {
        ++j;
        ++out.iterations;
        break;
      }
    }
    const Eigen::VectorXd y =
        hess.topLeftCorner(j, j).triangularView<Eigen::Upper>().solve(g.head(j));
    for (int i = 0; i < j; ++i) out.u += y[i] * zbasis[static_cast<std::size_t>(i)];
    r = f - op_apply(out.u);
    beta = norm_h(r);
    out.residual = beta / fnorm;
    if (out.residual <= tolerance) return out;
  }
  std::ostringstream msg;
  msg << "resolvent solve did not converge in " << max_iterations << " iterations (relative residual "
      << out.residual << ")";
  throw NumericalError(msg.str());
}

SpectralField evolve(const FrozenOperator& op, const SpectralField& u0, double t, int steps) {
  if (t < 0.0) throw std::invalid_argument("evolve needs t >= 0");
  if (steps < 1) throw std::invalid_argument("evolve needs at least one step");
  op.v.require_same_shape(u0);
  if (t == 0.0) return u0;
  const double h = t / steps;
  const double c = op.sigma_max;
  const double delta = op.delta;
  auto symbol = [c, delta](double k_sq) {
    const double lap = -four_pi_sq<double>() * k_sq;
    const double r = 1.0 / (1.0 - delta * lap);
    return c * lap * r * r;
  };
  auto propagator = [&](double k_sq) { return std::exp(h * symbol(k_sq)); };
  auto phi1 = [&](double k_sq) {
    const double z = h * symbol(k_sq);
    return std::abs(z) < 1e-8 ? h * (1.0 + 0.5 * z) : h * std::expm1(z) / z;
  };
  SpectralField u = u0;
  const double limit = 1e6 * std::max(1.0, sobolev_norm(u0, 1.0));
  for (int s = 0; s < steps; ++s) {
    const SpectralField nonlinear = apply(op, u) - apply_multiplier(u, symbol);
    u = apply_multiplier(u, propagator) + apply_multiplier(nonlinear, phi1);
    if (!u.coeffs().allFinite() || sobolev_norm(u, 1.0) > limit) {
      throw BlowUpError("semigroup evolution left the admissible range at step " + std::to_string(s + 1),
                        (s + 1) * h, s + 1);
    }
  }
  return u;
}

CommutatorEstimate commutator_norm(const SpectralField& v, double delta, const Mobility& mobility, int probes,
                                   std::uint64_t seed, int max_iterations) {
  if (probes < 8) throw std::invalid_argument("commutator_norm needs at least 8 probes");
  if (!(delta > 0.0)) throw std::invalid_argument("commutator_norm needs delta > 0");
  const FrozenOperator op = make_operator(v, delta, mobility);
  // K = (I - d Lap) s R - s and K^T = R s (I - d Lap) - s, s = sigma(R v).
  auto k_apply = [&](const SpectralField& w) {
    const SpectralField sr = multiply_padded(op.sigma, resolvent(w, delta));
    return apply_multiplier(sr, [delta](double k_sq) { return 1.0 + delta * four_pi_sq<double>() * k_sq; }) -
           multiply_padded(op.sigma, w);
  };
  auto kt_apply = [&](const SpectralField& w) {
    const SpectralField lifted =
        apply_multiplier(w, [delta](double k_sq) { return 1.0 + delta * four_pi_sq<double>() * k_sq; });
    return resolvent(multiply_padded(op.sigma, lifted), delta) - multiply_padded(op.sigma, w);
  };
  auto mean_free = [](SpectralField w) {
    w.coeffs()[0] = 0.0;
    return w;
  };

  CommutatorEstimate est;
  est.probes = probes;
  for (int p = 0; p < probes; ++p) {
    SpectralField w = random_field(v.dim(), v.grid_size(), seed, static_cast<std::uint32_t>(1000 + p), 0.0, true);
    w *= 1.0 / l2_norm(w);
    double value = 0.0;
    int it = 0;
    for (; it < max_iterations; ++it) {
      const SpectralField kw = k_apply(w);
      const double current = l2_norm(kw);
      SpectralField next = mean_free(kt_apply(kw));
      const double norm = l2_norm(next);
      const bool settled = std::abs(current - value) <= 1e-10 * std::max(current, 1e-300);
      value = std::max(value, current);
      if (norm == 0.0 || settled) break;
      w = (1.0 / norm) * next;
    }
    est.iterations = std::max(est.iterations, it);
    est.norm = std::max(est.norm, value);
  }
  return est;
}

}  // namespace macf
