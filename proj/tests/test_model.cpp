#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include "etm/model.hpp"

using namespace etm;

TEST_CASE("age grid construction and covering") {
  AgeGrid g(0.1, 10);
  CHECK(g.a_max() == doctest::Approx(1.0));
  CHECK(g.midpoint(0) == doctest::Approx(0.05));
  CHECK(g.midpoint(9) == doctest::Approx(0.95));

  AgeGrid c1 = AgeGrid::covering(0.1, 1.0);
  CHECK(c1.n_cells == 10);
  AgeGrid c2 = AgeGrid::covering(0.3, 1.0);
  CHECK(c2.n_cells == 4);
  CHECK(c2.a_max() >= 1.0);
  AgeGrid c3 = AgeGrid::covering(1.0, 0.2);
  CHECK(c3.n_cells == 1);

  CHECK_THROWS_AS(AgeGrid(0.0, 5), ValidationError);
  CHECK_THROWS_AS(AgeGrid(-0.1, 5), ValidationError);
  CHECK_THROWS_AS(AgeGrid(0.1, 0), ValidationError);
  const double nan = std::nan("");
  CHECK_THROWS_AS(AgeGrid(nan, 5), ValidationError);
  CHECK_THROWS_AS(AgeGrid::covering(0.1, -1.0), ValidationError);
}

TEST_CASE("age density mass and normalization") {
  AgeGrid g(0.25, 4);
  AgeDensity d(g, {1.0, 1.0, 1.0, 1.0});
  CHECK(d.mass() == doctest::Approx(1.0));
  AgeDensity e(g, {2.0, 0.0, 0.0, 0.0});
  e.normalize();
  CHECK(e.mass() == doctest::Approx(1.0));
  CHECK(e.cells[0] == doctest::Approx(4.0));

  CHECK_THROWS_AS(AgeDensity(g, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(AgeDensity(g, {1.0, 2.0, std::nan(""), 3.0}),
                  ValidationError);
  AgeDensity zero(g);
  CHECK_THROWS_AS(zero.normalize(), ValidationError);
}

TEST_CASE("catalogue coefficients satisfy the structural hypotheses") {
  const std::vector<FiringCoefficient> members = {
      FiringCoefficient::constant(0.7),
      FiringCoefficient::step(1.2),
      FiringCoefficient::step_sigmoid(0.5, 0.5, 0.05),
      FiringCoefficient::step_linear(0.8, 0.3, 0.2, 4.0),
  };
  std::mt19937_64 rng(99);
  for (const auto& s : members) {
    INFO("member ", s.describe());
    CHECK(s.s0() > 0);
    CHECK(s.sup_norm() >= s.s0());
    CHECK(s.sigma() >= 0);
    CHECK(s.lipschitz_ell() >= 0);
    const double extent = s.suggested_extent();
    std::uniform_real_distribution<double> ad(0.0, extent), xd(0.0, 10.0);
    for (int i = 0; i < 10000; ++i) {
      const double a = ad(rng), x = xd(rng), x2 = xd(rng);
      const double v = s(a, x);
      CHECK(v >= 0.0);
      CHECK(v <= s.sup_norm() + 1e-12);
      CHECK(std::abs(v - s(a, x2)) <=
            s.lipschitz_ell() * std::abs(x - x2) + 1e-12);
      if (a > s.sigma() + 1e-9) CHECK(v >= s.s0() - 1e-12);
      if (s.separable()) {
        const double sep = a > s.sigma() ? s.rate_factor(x) : 0.0;
        CHECK(v == sep);
      }
    }
    // The suggested extent really does push the equilibrium tail below 1e-12.
    CHECK(std::exp(-s.s0() * (extent - s.sigma())) <= 1e-12 * (1 + 1e-9));
  }
}

TEST_CASE("coefficient validation rejects out-of-hypothesis parameters") {
  CHECK_THROWS_AS(FiringCoefficient::constant(0.0), ValidationError);
  CHECK_THROWS_AS(FiringCoefficient::constant(-1.0), ValidationError);
  CHECK_THROWS_AS(FiringCoefficient::step(-0.1), ValidationError);
  CHECK_THROWS_AS(FiringCoefficient::step_sigmoid(0.5, 0.0, 0.1),
                  ValidationError);
  CHECK_THROWS_AS(FiringCoefficient::step_sigmoid(0.5, 0.5, -0.1),
                  ValidationError);
  CHECK_THROWS_AS(FiringCoefficient::step_linear(0.5, 0.5, 0.1, 0.0),
                  ValidationError);
  CHECK_THROWS_AS(
      FiringCoefficient::step_sigmoid(std::nan(""), 0.5, 0.1),
      ValidationError);
}

TEST_CASE("delay kernels are normalized over their horizon") {
  const DelayKernel exp1 = DelayKernel::exponential(1.0);
  CHECK(exp1.kind() == DelayKernel::Kind::exponential);
  CHECK(exp1.c_alpha() == 1.0);
  CHECK(exp1.beta() == 1.0);
  CHECK(exp1.horizon() == doctest::Approx(std::log(1e6)));
  CHECK(exp1.evaluate(0.0) == doctest::Approx(1.0));
  CHECK(exp1.evaluate(-1.0) == 0.0);

  const DelayKernel alg3 = DelayKernel::algebraic(3.0, 1e-6);
  CHECK(alg3.c_alpha() == 2.0);
  CHECK(alg3.horizon() == doctest::Approx(1000.0));
  CHECK(alg3.evaluate(0.0) == doctest::Approx(2.0));
  CHECK(alg3.evaluate(1.0) == doctest::Approx(0.25));

  const DelayKernel pm = DelayKernel::point_mass(0.5);
  CHECK(pm.delay() == 0.5);
  CHECK(pm.horizon() == 0.5);
  CHECK_THROWS_AS(pm.evaluate(0.1), ValidationError);

  const DelayKernel tab = DelayKernel::tabulated(
      [](double s) { return s < 1.0 ? 2.0 * (1.0 - s) : 0.0; }, 1.0);
  CHECK(tab.kind() == DelayKernel::Kind::tabulated);

  CHECK_THROWS_AS(DelayKernel::point_mass(0.0), ValidationError);
  CHECK_THROWS_AS(DelayKernel::exponential(-1.0), ValidationError);
  CHECK_THROWS_AS(DelayKernel::algebraic(1.0), ValidationError);
  // Unnormalized density must be rejected.
  CHECK_THROWS_AS(
      DelayKernel::tabulated([](double s) { return s < 1.0 ? 1.0 - s : 0.0; },
                             1.0),
      ValidationError);
}

TEST_CASE("history function lookup is exact on the grid") {
  HistoryFunction h = HistoryFunction::constant_past(2.0, 0.1);
  CHECK(h.past(-5.0) == 2.0);
  CHECK(h.lookup(-0.05) == 2.0);
  CHECK(h.computed_end() == doctest::Approx(-0.1));
  h.append(1.0);
  h.append(1.5);
  h.append(1.25);
  CHECK(h.computed_end() == doctest::Approx(0.2));
  CHECK(h.lookup(0.0) == 1.0);
  CHECK(h.lookup(0.1) == 1.5);
  CHECK(h.lookup(0.2) == 1.25);
  CHECK(h.lookup(2 * 0.1) == 1.25);  // rounding-safe grid snap
  CHECK_THROWS_AS(h.lookup(0.3), HistoryGap);
  CHECK_THROWS_AS(h.lookup(0.05), HistoryGap);
  CHECK_THROWS_AS(h.append(std::nan("")), NumericalError);
  CHECK_THROWS_AS(h.past(0.0), ValidationError);
}

TEST_CASE("tabulated past interpolates and clamps") {
  HistoryFunction h =
      HistoryFunction::tabulated_past({-2.0, -1.0, 0.0}, {1.0, 3.0, 5.0}, 0.1);
  CHECK(h.sup_bound() == 5.0);
  CHECK(h.past(-1.5) == doctest::Approx(2.0));
  CHECK(h.past(-0.5) == doctest::Approx(4.0));
  CHECK(h.past(-3.0) == 1.0);

  CHECK_THROWS_AS(
      HistoryFunction::tabulated_past({-1.0, -2.0}, {1.0, 1.0}, 0.1),
      ValidationError);
  CHECK_THROWS_AS(
      HistoryFunction::tabulated_past({-1.0, 0.0}, {1.0, -1.0}, 0.1),
      ValidationError);
  CHECK_THROWS_AS(HistoryFunction::constant_past(-1.0, 0.1), ValidationError);
}

TEST_CASE("density csv round-trips bit-exactly") {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> vd(0.0, 3.0);
  AgeGrid g(0.013, 1000);
  std::vector<double> cells(1000);
  for (auto& c : cells) c = vd(rng);
  AgeDensity d(g, cells);

  std::stringstream buf;
  write_density_csv(buf, d);
  AgeDensity back = read_density_csv(buf);

  CHECK(back.grid.n_cells == d.grid.n_cells);
  CHECK(back.grid.delta == doctest::Approx(d.grid.delta).epsilon(1e-15));
  REQUIRE(back.cells.size() == d.cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i)
    CHECK(back.cells[i] == d.cells[i]);
  CHECK(back.mass() == d.mass());

  std::stringstream bad("nonsense\n1,2\n");
  CHECK_THROWS_AS(read_density_csv(bad), ValidationError);
}
