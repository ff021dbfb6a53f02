#include "macf/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace macf {
namespace {

struct Poly {
  std::vector<double> c;  // ascending

  double operator()(double u) const {
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * u + *it;
    return acc;
  }

  Poly derivative() const {
    Poly d;
    for (std::size_t i = 1; i < c.size(); ++i) d.c.push_back(static_cast<double>(i) * c[i]);
    if (d.c.empty()) d.c.push_back(0.0);
    return d;
  }
};

// Linearly spaced samples with an odd count, so a symmetric range hits 0.
std::vector<double> sample_points(double lo, double hi, long count) {
  if (count < 3) count = 3;
  if (count % 2 == 0) ++count;
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (long i = 0; i < count; ++i) {
    xs[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return xs;
}

// Largest |u| in [0, reach] at which W'' <= 0, found by dense sampling.
double locate_convex_edge(const ScalarFn& d2, double reach = 100.0) {
  double last_bad = 0.0;
  const long count = 200001;
  for (long i = 0; i < count; ++i) {
    const double u = reach * static_cast<double>(i) / static_cast<double>(count - 1);
    if (d2(u) <= 0.0 || d2(-u) <= 0.0) last_bad = u;
  }
  return last_bad + 0.2 * std::max(1.0, last_bad);
}

// Growth exponent of a nonnegative ratio between the half range and the edge.
double growth_exponent(const std::function<double(double)>& ratio, double lo, double hi) {
  const double edge = std::max(ratio(lo), ratio(hi));
  const double half = std::max(ratio(lo / 2), ratio(hi / 2));
  if (edge <= 0.0) return -std::numeric_limits<double>::infinity();
  if (half <= 0.0) return std::numeric_limits<double>::infinity();
  return std::log2(edge / half);
}

constexpr double kGrowthExponentLimit = 0.5;

AssumptionItem growth_item(int id, std::string name, const std::vector<double>& xs,
                           const std::function<double(double)>& ratio, double lo, double hi) {
  AssumptionItem item;
  item.id = id;
  item.name = std::move(name);
  double worst = 0.0;
  double at = 0.0;
  for (double u : xs) {
    const double r = ratio(u);
    if (!(r <= worst)) {
      worst = r;
      at = u;
    }
  }
  const double p = growth_exponent(ratio, lo, hi);
  item.constant = worst;
  item.pass = std::isfinite(worst) && p <= kGrowthExponentLimit;
  item.witness = item.pass ? at : (std::abs(hi) >= std::abs(lo) ? hi : lo);
  std::ostringstream msg;
  msg << "max ratio " << worst << " at u=" << at << ", growth exponent " << p;
  item.detail = msg.str();
  return item;
}

}  // namespace

Potential Potential::double_well() {
  Potential p;
  p.name = "double_well";
  p.value = [](double u) { return 0.25 * (u * u - 1.0) * (u * u - 1.0); };
  p.d1 = [](double u) { return u * u * u - u; };
  p.d2 = [](double u) { return 3.0 * u * u - 1.0; };
  p.convex_edge = 1.2;
  return p;
}

Potential Potential::polynomial(std::vector<double> coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("polynomial potential needs coefficients");
  Poly w{std::move(coeffs)};
  Poly w1 = w.derivative();
  Poly w2 = w1.derivative();
  Potential p;
  p.name = "polynomial";
  p.value = w;
  p.d1 = w1;
  p.d2 = w2;
  p.convex_edge = locate_convex_edge(p.d2);
  return p;
}

Potential Potential::zero() {
  Potential p;
  p.name = "zero";
  p.value = [](double) { return 0.0; };
  p.d1 = [](double) { return 0.0; };
  p.d2 = [](double) { return 0.0; };
  p.convex_edge = 0.0;
  return p;
}

TruncatedPotential::TruncatedPotential(Potential base, double level)
    : base_(std::move(base)), level_(level) {
  w_at_ = base_.value(level_);
  w1_at_ = base_.d1(level_);
  w2_at_ = base_.d2(level_);
  // W is even only for symmetric potentials; the tail uses the values at +l
  // for both signs, as in the definition through |u|.
  lipschitz_ = 0.0;
  const long count = 4001;
  for (long i = 0; i < count; ++i) {
    const double u = -level_ + 2.0 * level_ * static_cast<double>(i) / static_cast<double>(count - 1);
    lipschitz_ = std::max(lipschitz_, std::abs(base_.d2(u)));
  }
}

double TruncatedPotential::value(double u) const {
  const double a = std::abs(u);
  if (a <= level_) return base_.value(u);
  const double e = a - level_;
  return w_at_ + w1_at_ * e + 0.5 * w2_at_ * e * e;
}

double TruncatedPotential::d1(double u) const {
  const double a = std::abs(u);
  if (a <= level_) return base_.d1(u);
  const double e = a - level_;
  return std::copysign(w1_at_ + w2_at_ * e, u);
}

double TruncatedPotential::d2(double u) const {
  if (std::abs(u) <= level_) return base_.d2(u);
  return w2_at_;
}

TruncatedPotential truncate(const Potential& base, double level) {
  if (!(level > 0.0)) throw std::invalid_argument("truncation level must be positive");
  if (level <= base.convex_edge) {
    std::ostringstream msg;
    msg << "truncation level " << level << " lies inside the non-convex region K = [-"
        << base.convex_edge << ", " << base.convex_edge << "] of potential " << base.name;
    throw std::invalid_argument(msg.str());
  }
  if (base.d2(level) < 0.0) {
    std::ostringstream msg;
    msg << "W''(" << level << ") = " << base.d2(level) << " < 0 for potential " << base.name;
    throw std::invalid_argument(msg.str());
  }
  return TruncatedPotential(base, level);
}

Mobility Mobility::standard() {
  Mobility m;
  m.name = "standard";
  m.value = [](double u) { return 1.0 + 1.0 / (1.0 + u * u); };
  m.d1 = [](double u) {
    const double q = 1.0 + u * u;
    return -2.0 * u / (q * q);
  };
  m.d2 = [](double u) {
    const double q = 1.0 + u * u;
    return (6.0 * u * u - 2.0) / (q * q * q);
  };
  m.inf_sigma = 1.0;
  m.sup_sigma = 2.0;
  m.h_closed_form = [](double u) {
    return u - std::atan(u / std::numbers::sqrt2) / std::numbers::sqrt2;
  };
  for (double u : {-7.5, -1.0, 0.3, 2.0, 11.0}) {
    if (std::abs(m.h_closed_form(u) - h_quadrature(m, u)) > 1e-10) {
      throw NumericalError("closed-form h disagrees with quadrature for mobility " + m.name);
    }
  }
  return m;
}

Mobility Mobility::constant(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("constant mobility must be positive");
  Mobility m;
  m.name = "constant";
  m.value = [c](double) { return c; };
  m.d1 = [](double) { return 0.0; };
  m.d2 = [](double) { return 0.0; };
  m.inf_sigma = c;
  m.sup_sigma = c;
  m.h_closed_form = [c](double u) { return u / c; };
  return m;
}

Mobility Mobility::rational(std::vector<double> numerator, std::vector<double> denominator,
                            double bound_range) {
  if (numerator.empty() || denominator.empty()) {
    throw std::invalid_argument("rational mobility needs numerator and denominator coefficients");
  }
  Poly p{std::move(numerator)};
  Poly q{std::move(denominator)};
  Poly p1 = p.derivative(), p2 = p1.derivative();
  Poly q1 = q.derivative(), q2 = q1.derivative();
  Mobility m;
  m.name = "rational";
  m.value = [p, q](double u) { return p(u) / q(u); };
  m.d1 = [p, q, p1, q1](double u) {
    const double qu = q(u);
    return (p1(u) * qu - p(u) * q1(u)) / (qu * qu);
  };
  m.d2 = [p, q, p1, q1, p2, q2](double u) {
    const double qu = q(u), q1u = q1(u);
    return p2(u) / qu - 2.0 * p1(u) * q1u / (qu * qu) - p(u) * q2(u) / (qu * qu) +
           2.0 * p(u) * q1u * q1u / (qu * qu * qu);
  };
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double u : sample_points(-bound_range, bound_range, 200001)) {
    const double s = m.value(u);
    lo = std::min(lo, s);
    hi = std::max(hi, s);
  }
  m.inf_sigma = lo;
  m.sup_sigma = hi;
  return m;
}

double NoiseKernel::symbol(double k_sq) const {
  if (amplitude == 0.0) return 0.0;
  return amplitude * std::pow(1.0 + four_pi_sq<double>() * k_sq, -decay_exponent);
}

SpectralField NoiseKernel::field(int dim, int n) const {
  SpectralField j(dim, n);
  for (Eigen::Index i = 0; i < j.size(); ++i) j.coeffs()[i] = symbol(j.wavenumber_sq(i));
  return j;
}

double NoiseKernel::h1_sum(int dim, int n) const {
  const SpectralField j = field(dim, n);
  const double norm = sobolev_norm(j, 1.0);
  return norm * norm;
}

Model default_model() {
  return Model{Potential::double_well(), Mobility::standard(), NoiseKernel{1.5, 1.0}};
}

double h_quadrature(const Mobility& m, double u) {
  if (u == 0.0) return 0.0;
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [&m](double r) { return 1.0 / m.value(r); }, 0.0, u, 20, 1e-14, &error, &l1);
  if (!std::isfinite(value) || error > 1e-12 * std::max(1.0, l1)) {
    std::ostringstream msg;
    msg << "quadrature for h(" << u << ") did not converge (error estimate " << error << ")";
    throw NumericalError(msg.str());
  }
  return value;
}

double h_antiderivative(const Mobility& m, double u) {
  if (m.h_closed_form) return m.h_closed_form(u);
  return h_quadrature(m, u);
}

bool AssumptionReport::all_pass() const {
  return std::all_of(items.begin(), items.end(), [](const AssumptionItem& i) { return i.pass; }) &&
         kernel.pass;
}

const AssumptionItem& AssumptionReport::item(int id) const {
  for (const auto& it : items) {
    if (it.id == id) return it;
  }
  throw std::out_of_range("no assumption item " + std::to_string(id));
}

AssumptionReport check_assumptions(const Potential& p, const Mobility& m, const NoiseKernel& j,
                                   const AssumptionCheckOptions& opts) {
  const auto xs = sample_points(opts.lo, opts.hi, opts.samples);
  AssumptionReport report;

  {
    AssumptionItem item;
    item.id = 1;
    item.name = "W >= 0, C^2, uniformly convex outside K";
    double min_w = std::numeric_limits<double>::infinity(), at_w = 0.0;
    double min_w2 = std::numeric_limits<double>::infinity(), at_w2 = 0.0;
    for (double u : xs) {
      const double w = p.value(u);
      if (w < min_w) {
        min_w = w;
        at_w = u;
      }
      if (std::abs(u) >= p.convex_edge) {
        const double w2 = p.d2(u);
        if (w2 < min_w2) {
          min_w2 = w2;
          at_w2 = u;
        }
      }
    }
    const bool nonneg = min_w >= -1e-12;
    const bool convex = min_w2 > 0.0;
    item.pass = nonneg && convex;
    item.constant = convex ? 1.0 / min_w2 : std::numeric_limits<double>::infinity();
    item.witness = !nonneg ? at_w : at_w2;
    std::ostringstream msg;
    msg << "min W = " << min_w << ", min W'' outside |u| < " << p.convex_edge << " = " << min_w2
        << " at u=" << at_w2;
    item.detail = msg.str();
    report.items.push_back(item);
  }

  report.items.push_back(growth_item(
      2, "|W| <= C(|u|^4 + 1)", xs,
      [&](double u) { return std::abs(p.value(u)) / (std::pow(u, 4) + 1.0); }, opts.lo, opts.hi));
  report.items.push_back(growth_item(
      3, "|W'| <= C(|u|^3 + 1)", xs,
      [&](double u) { return std::abs(p.d1(u)) / (std::pow(std::abs(u), 3) + 1.0); }, opts.lo,
      opts.hi));
  report.items.push_back(growth_item(
      4, "|W''| <= C(sqrt(W) + 1)", xs,
      [&](double u) { return std::abs(p.d2(u)) / (std::sqrt(std::max(0.0, p.value(u))) + 1.0); },
      opts.lo, opts.hi));

  {
    AssumptionItem item;
    item.id = 5;
    item.name = "1/C <= sigma <= C";
    double lo = std::numeric_limits<double>::infinity(), at_lo = 0.0;
    double hi = -lo;
    for (double u : xs) {
      const double s = m.value(u);
      if (s < lo) {
        lo = s;
        at_lo = u;
      }
      hi = std::max(hi, s);
    }
    const double p_sigma = growth_exponent([&](double u) { return std::abs(m.value(u)); }, opts.lo, opts.hi);
    const bool positive = lo > 1e-8;
    const bool bounded = std::isfinite(hi) && p_sigma <= kGrowthExponentLimit;
    item.pass = positive && bounded;
    item.constant = positive ? std::max(hi, 1.0 / lo) : std::numeric_limits<double>::infinity();
    item.witness = !positive ? at_lo : (std::abs(opts.hi) >= std::abs(opts.lo) ? opts.hi : opts.lo);
    std::ostringstream msg;
    msg << "inf sigma = " << lo << " at u=" << at_lo << ", sup sigma = " << hi
        << ", growth exponent " << p_sigma;
    item.detail = msg.str();
    report.items.push_back(item);
  }

  {
    auto d1 = growth_item(6, "sigma', sigma'' bounded", xs, [&](double u) { return std::abs(m.d1(u)); },
                          opts.lo, opts.hi);
    auto d2 = growth_item(6, "sigma', sigma'' bounded", xs, [&](double u) { return std::abs(m.d2(u)); },
                          opts.lo, opts.hi);
    AssumptionItem item = d1.pass ? d2 : d1;
    item.pass = d1.pass && d2.pass;
    item.constant = std::max(d1.constant, d2.constant);
    item.detail = "sigma': " + d1.detail + "; sigma'': " + d2.detail;
    report.items.push_back(item);
  }

  {
    AssumptionItem item;
    item.id = 7;
    item.name = "j in H^1 (truncated sum stable under grid doubling)";
    const double coarse = j.h1_sum(opts.dim, opts.grid);
    const double fine = j.h1_sum(opts.dim, 2 * opts.grid);
    const double growth = coarse > 0.0 ? fine / coarse - 1.0 : 0.0;
    item.pass = std::isfinite(fine) && growth < 0.01;
    item.constant = std::sqrt(fine);
    item.witness = growth;
    std::ostringstream msg;
    msg << "H1 sum " << coarse << " (N=" << opts.grid << ") -> " << fine << " (N=" << 2 * opts.grid
        << "), relative increase " << growth;
    item.detail = msg.str();
    report.kernel = item;
  }
  return report;
}

}  // namespace macf
