#include <doctest.h>

#include <cmath>
#include <random>

#include "macf/errors.hpp"
#include "macf/model.hpp"

using namespace macf;

namespace {

// Composite Simpson on [0, u], independent of the library's quadrature.
template <typename F>
double simpson(F f, double a, double b, int panels = 2000) {
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("default potential and mobility values") {
  const Model model = default_model();
  CHECK(model.potential.value(1.0) == 0.0);
  CHECK(model.potential.value(0.0) == doctest::Approx(0.25));
  CHECK(model.potential.d1(2.0) == doctest::Approx(6.0));
  CHECK(model.mobility.inf_sigma == 1.0);
  CHECK(model.mobility.sup_sigma == 2.0);
  CHECK(model.potential.convex_edge == doctest::Approx(1.2));
}

TEST_CASE("polynomial potential derivatives") {
  const Potential p = Potential::polynomial({0.25, 0.0, -0.5, 0.0, 0.25});
  const Potential w = Potential::double_well();
  for (double u : {-3.0, -0.4, 0.0, 0.7, 2.5}) {
    CHECK(p.value(u) == doctest::Approx(w.value(u)));
    CHECK(p.d1(u) == doctest::Approx(w.d1(u)));
    CHECK(p.d2(u) == doctest::Approx(w.d2(u)));
  }
}

TEST_CASE("truncated potential") {
  const Potential w = Potential::double_well();
  const TruncatedPotential t = truncate(w, 2.0);
  for (double u : {-2.0, -1.3, 0.0, 0.5, 2.0}) CHECK(t.value(u) == w.value(u));
  CHECK(t.value(3.0) == doctest::Approx(55.0 / 4.0));
  CHECK(t.value(-3.0) == doctest::Approx(55.0 / 4.0));
  const double eps = 1e-6;
  CHECK(std::abs(t.d1(2.0 + eps) - w.d1(2.0)) <= w.d2(2.0) * eps + 1e-10);
  // exactly quadratic beyond the level
  CHECK(t.d2(3.0) == doctest::Approx(w.d2(2.0)));
  CHECK(t.d2(7.0) == doctest::Approx(w.d2(2.0)));

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> uni(-6.0, 6.0);
  double lip = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double a = uni(rng), b = uni(rng);
    if (std::abs(a - b) > 1e-3) lip = std::max(lip, std::abs(t.d1(a) - t.d1(b)) / std::abs(a - b));
  }
  CHECK(lip <= t.lipschitz_bound() * (1 + 1e-12));

  CHECK_THROWS_AS(truncate(w, 1.0), std::invalid_argument);
}

TEST_CASE("h antiderivative") {
  const Mobility standard = Mobility::standard();
  const Mobility constant = Mobility::constant(2.5);
  CHECK(h_antiderivative(standard, 0.0) == 0.0);
  CHECK(h_antiderivative(constant, 0.0) == 0.0);
  CHECK(h_antiderivative(constant, 3.0) == doctest::Approx(3.0 / 2.5));
  const double oracle = simpson([](double r) { return (1 + r * r) / (2 + r * r); }, 0.0, 1.0);
  CHECK(std::abs(h_antiderivative(standard, 1.0) - oracle) < 1e-10);
  CHECK(std::abs(h_quadrature(standard, 1.0) - oracle) < 1e-10);
  for (double u : {-4.0, -0.3, 2.0, 9.0}) {
    CHECK(std::abs(h_antiderivative(standard, u) - h_quadrature(standard, u)) < 1e-11);
  }
  const Mobility rational = Mobility::rational({1.0, 0.0, 2.0}, {1.0, 0.0, 1.0});
  CHECK(std::abs(h_antiderivative(rational, 1.5) -
                 simpson([](double r) { return (1 + r * r) / (1 + 2 * r * r); }, 0.0, 1.5)) < 1e-10);
}

TEST_CASE("assumption check on the default model") {
  const Model model = default_model();
  const AssumptionReport rep = check_assumptions(model.potential, model.mobility, model.kernel);
  REQUIRE(rep.items.size() == 6);
  CHECK(rep.all_pass());
  CHECK(rep.item(1).constant > 0.0);
  CHECK(rep.kernel.pass);

  // |W''| <= C (sqrt(W) + 1) with the reported constant, on a dense sample.
  const double c = rep.item(4).constant;
  for (double u = -20.0; u <= 20.0; u += 1e-3) {
    CHECK_MESSAGE(std::abs(model.potential.d2(u)) <= c * (std::sqrt(model.potential.value(u)) + 1) * (1 + 1e-12),
                  "u=" << u);
  }
}

TEST_CASE("assumption check counterexamples") {
  const Model model = default_model();
  const AssumptionReport sixth =
      check_assumptions(Potential::polynomial({0, 0, 0, 0, 0, 0, 1}), model.mobility, model.kernel);
  CHECK_FALSE(sixth.item(2).pass);
  CHECK(std::abs(sixth.item(2).witness) > 1.0);
  CHECK(sixth.item(5).pass);

  const AssumptionReport vanishing =
      check_assumptions(model.potential, Mobility::rational({0, 0, 1}, {1}), model.kernel);
  CHECK_FALSE(vanishing.item(5).pass);
  CHECK(std::abs(vanishing.item(5).witness) < 1e-3);
  CHECK(vanishing.item(1).pass);
}

TEST_CASE("kernel H1 sum stabilizes") {
  const NoiseKernel j;
  for (int dim = 1; dim <= 3; ++dim) {
    const double coarse = j.h1_sum(dim, 32), fine = j.h1_sum(dim, 64);
    CHECK(fine / coarse - 1.0 < 0.01);
  }
  CHECK(j.symbol(0.0) == doctest::Approx(1.0));
}

TEST_CASE("abh inequality on random pairs") {
  const Mobility m = Mobility::standard();
  const double c = std::max(m.sup_sigma, 1.0 / m.inf_sigma);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(-10.0, 10.0);
  for (int i = 0; i < 20000; ++i) {
    const double a = uni(rng), b = uni(rng);
    const double dh = h_antiderivative(m, a) - h_antiderivative(m, b);
    const double lhs = std::max((a - b) * (a - b), dh * dh);
    REQUIRE(lhs <= c * dh * (a - b) + 1e-12);
  }
}
