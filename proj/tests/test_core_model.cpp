#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pnpbo/directions.hpp"
#include "pnpbo/oracle.hpp"
#include "pnpbo/problems/quadratic.hpp"
#include "pnpbo/rng.hpp"
#include "support/callback_problem.hpp"

using namespace pnpbo;
using testing::make_iterate;
using testing::scalar_toy;

namespace {

Vector random_vector(RngStream& rng, int dim) {
  Vector out(dim);
  for (int k = 0; k < dim; ++k) out[k] = 2.0 * rng.next_double() - 1.0;
  return out;
}

}  // namespace

TEST_CASE("direction_x on the worked scalar case") {
  auto p = scalar_toy();
  const std::vector<int> all{0};
  CHECK(direction_x(p, make_iterate(2, 5, 3), all, all)[0] == doctest::Approx(3.0));
  CHECK(direction_x(p, make_iterate(2, 5, 0), all, all)[0] == doctest::Approx(0.0));
}

TEST_CASE("direction_y on the worked scalar case") {
  auto p = scalar_toy();
  const std::vector<int> all{0};
  CHECK(direction_y(p, make_iterate(2, 5, 0), all)[0] == doctest::Approx(3.0));
  // At y = y*(x) the direction vanishes.
  CHECK(direction_y(p, make_iterate(2, 2, 0), all)[0] == doctest::Approx(0.0));
}

TEST_CASE("direction_z on the worked scalar case") {
  auto p = scalar_toy();
  const std::vector<int> all{0};
  CHECK(direction_z(p, make_iterate(2, 5, 3), all, all)[0] == doctest::Approx(-2.0));
  // At y = y*(x), z = z*(x) the direction vanishes.
  CHECK(direction_z(p, make_iterate(2, 2, 2), all, all)[0] == doctest::Approx(0.0));
}

TEST_CASE("directions on a random quadratic instance match straight-line sums") {
  QuadraticSpec spec;
  spec.seed = 11;
  spec.n = 4;
  spec.m = 4;
  spec.dim_x = 3;
  spec.dim_y = 3;
  spec.dispersion = 0.3;
  auto p = make_quadratic(spec);
  RngStream rng(5);
  Iterate it;
  it.x = random_vector(rng, 3);
  it.y = random_vector(rng, 3);
  it.z = random_vector(rng, 3);

  const std::vector<int> i0{0}, j1{1};
  const Vector dx = direction_x(*p, it, i0, j1);
  const Vector expected_x = p->grad1_f(0, it.x, it.y) - p->jvp12_g(1, it.x, it.y, it.z);
  CHECK((dx - expected_x).norm() == doctest::Approx(0.0));

  const std::vector<int> j02{0, 2};
  const Vector dy = direction_y(*p, it, j02);
  const Vector expected_y =
      0.5 * (p->grad2_g(0, it.x, it.y) + p->grad2_g(2, it.x, it.y));
  CHECK((dy - expected_y).norm() == doctest::Approx(0.0).epsilon(1e-14));

  const std::vector<int> i1{1}, j0{0};
  const Vector dz = direction_z(*p, it, i1, j0);
  const Vector expected_z =
      p->hvp22_g(0, it.x, it.y, it.z) - p->grad2_f(1, it.x, it.y);
  CHECK((dz - expected_z).norm() == doctest::Approx(0.0));
}

TEST_CASE("empty index sets are rejected") {
  auto p = scalar_toy();
  const std::vector<int> all{0}, none;
  const Iterate it = make_iterate(1, 1, 1);
  CHECK_THROWS_AS(direction_x(p, it, none, all), std::invalid_argument);
  CHECK_THROWS_AS(direction_x(p, it, all, none), std::invalid_argument);
  CHECK_THROWS_AS(direction_y(p, it, none), std::invalid_argument);
  CHECK_THROWS_AS(direction_z(p, it, none, all), std::invalid_argument);
}

TEST_CASE("minibatch linearity over disjoint equal-size sets") {
  QuadraticSpec spec;
  spec.seed = 3;
  spec.n = 6;
  spec.m = 6;
  spec.dim_x = 4;
  spec.dim_y = 4;
  spec.dispersion = 0.4;
  auto p = make_quadratic(spec);
  RngStream rng(17);
  Iterate it;
  it.x = random_vector(rng, 4);
  it.y = random_vector(rng, 4);
  it.z = random_vector(rng, 4);

  const std::vector<int> a{0, 2, 4}, b{1, 3, 5}, both{0, 1, 2, 3, 4, 5};
  const std::vector<int> allf{0, 1, 2, 3, 4, 5};

  const Vector mean_j =
      0.5 * (direction_x(*p, it, allf, a) + direction_x(*p, it, allf, b));
  CHECK((direction_x(*p, it, allf, both) - mean_j).norm() < 1e-12);

  const Vector mean_i =
      0.5 * (direction_x(*p, it, a, allf) + direction_x(*p, it, b, allf));
  CHECK((direction_x(*p, it, both, allf) - mean_i).norm() < 1e-12);

  const Vector mean_y = 0.5 * (direction_y(*p, it, a) + direction_y(*p, it, b));
  CHECK((direction_y(*p, it, both) - mean_y).norm() < 1e-12);
}

TEST_CASE("full-batch direction_x at the oracle solution equals the hypergradient") {
  QuadraticSpec spec;
  spec.seed = 21;
  spec.n = 20;
  spec.m = 20;
  spec.dim_x = 4;
  spec.dim_y = 5;
  auto p = make_quadratic(spec);
  RngStream rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector x = random_vector(rng, 4);
    const Vector ystar = solve_lower(*p, x);
    const Vector zstar = solve_implicit(*p, x, ystar);
    Iterate it{x, ystar, zstar};
    const SampleDraw full = full_batch(20, 20);
    const Vector dx = direction_x(*p, it, full.f_indices, full.g_indices);
    const Vector grad = hypergradient(*p, x);
    CHECK((dx - grad).norm() <= 1e-6 * (1.0 + grad.norm()));
  }
}

TEST_CASE("hvp22_g symmetry and strong convexity probes") {
  QuadraticSpec spec;
  spec.seed = 33;
  spec.n = 8;
  spec.m = 8;
  spec.dim_x = 3;
  spec.dim_y = 6;
  spec.mu = 0.7;
  spec.lmax = 2.5;
  auto p = make_quadratic(spec);
  RngStream rng(1);
  const Vector x = random_vector(rng, 3);
  const Vector y = random_vector(rng, 6);
  for (int probe = 0; probe < 20; ++probe) {
    const Vector u = random_vector(rng, 6);
    const Vector v = random_vector(rng, 6);
    const int j = probe % 8;
    const double uv = u.dot(p->hvp22_g(j, x, y, v));
    const double vu = v.dot(p->hvp22_g(j, x, y, u));
    CHECK(std::abs(uv - vu) <= 1e-10 * (1.0 + std::abs(uv)));

    Vector avg = Vector::Zero(6);
    for (int jj = 0; jj < 8; ++jj) avg += p->hvp22_g(jj, x, y, v);
    avg /= 8.0;
    CHECK(v.dot(avg) >= 0.7 * v.squaredNorm() - 1e-9);
  }
}

TEST_CASE("hvp22_g agrees with finite differences of grad2_g") {
  QuadraticSpec spec;
  spec.seed = 13;
  spec.n = 5;
  spec.m = 5;
  spec.dim_x = 3;
  spec.dim_y = 4;
  spec.dispersion = 0.3;
  auto p = make_quadratic(spec);
  RngStream rng(2);
  const Vector x = random_vector(rng, 3);
  const Vector y = random_vector(rng, 4);
  const double h = 1e-5;
  for (int j = 0; j < 5; ++j) {
    const Vector v = random_vector(rng, 4);
    const Vector fd =
        (p->grad2_g(j, x, y + h * v) - p->grad2_g(j, x, y - h * v)) / (2.0 * h);
    CHECK((p->hvp22_g(j, x, y, v) - fd).norm() <= 1e-7 * (1.0 + fd.norm()));
  }
}

TEST_CASE("clip") {
  Vector z(2);
  z << 3, 4;

  SUBCASE("inside the ball") {
    const Vector out = clip(z, 10.0);
    CHECK(out == z);
  }
  SUBCASE("rescaled to the boundary") {
    const Vector out = clip(z, 1.0);
    CHECK(out[0] == doctest::Approx(0.6));
    CHECK(out[1] == doctest::Approx(0.8));
    CHECK(out.norm() <= 1.0);
  }
  SUBCASE("zero vector fixed point") {
    const Vector zero = Vector::Zero(3);
    CHECK(clip(zero, 1.0) == zero);
  }
  SUBCASE("invalid radius") {
    CHECK_THROWS_AS(clip(z, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(clip(z, -1.0), std::invalid_argument);
  }
  SUBCASE("idempotent bitwise and non-expansive") {
    RngStream rng(77);
    for (int trial = 0; trial < 200; ++trial) {
      Vector v = random_vector(rng, 5) * std::pow(10.0, 3.0 * rng.next_double());
      const double radius = 0.1 + 2.0 * rng.next_double();
      const Vector once = clip(v, radius);
      const Vector twice = clip(once, radius);
      CHECK(once == twice);
      CHECK(once.norm() <= radius);
      CHECK(once.norm() <= v.norm() * (1.0 + 1e-15));
    }
  }
}
