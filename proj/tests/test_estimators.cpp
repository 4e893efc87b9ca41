#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pnpbo/estimators.hpp"
#include "pnpbo/problems/quadratic.hpp"
#include "support/callback_problem.hpp"

using namespace pnpbo;
using testing::make_iterate;
using testing::weighted_scalar_sum;

namespace {

// Fixed iterates shared by the hand-unrolled schedules (y - x values
// 1.5, 1.25, 1.0, 0.5).
const Iterate kItA = make_iterate(0.5, 2.0, 0.0);
const Iterate kItB = make_iterate(0.25, 1.5, 0.0);
const Iterate kItC = make_iterate(0.0, 1.0, 0.0);
const Iterate kItD = make_iterate(0.0, 0.5, 0.0);

}  // namespace

TEST_CASE("sgd estimate") {
  SUBCASE("full batch equals the full direction; n = m = 1 degenerate") {
    auto p = testing::scalar_toy();
    ChannelEvaluator eval(p, Channel::x);
    const Iterate it = make_iterate(2, 5, 3);
    const SampleDraw full = full_batch(1, 1);
    CHECK(sgd_estimate(eval, it, full)[0] == doctest::Approx(3.0));
  }
  SUBCASE("x channel with zero g-part averages the drawn f components") {
    auto p = weighted_scalar_sum({1, 2, 3, 4}, {0, 0, 0, 0});
    ChannelEvaluator eval(p, Channel::x);
    SampleDraw draw;
    draw.f_indices = {0, 3};
    draw.g_indices = {0};
    CHECK(sgd_estimate(eval, make_iterate(0, 0, 0), draw)[0] == doctest::Approx(2.5));
  }
}

TEST_CASE("zerosarah init fills tables with per-component values") {
  auto p = weighted_scalar_sum({5.0}, {2.0});
  ChannelEvaluator eval(p, Channel::y);
  auto state = zerosarah_init(eval, kItA, 0.25);
  CHECK(state.table_g.size() == 1);
  CHECK(state.table_g[0][0] == doctest::Approx(3.0));
  CHECK(state.avg_g[0] == doctest::Approx(3.0));
  CHECK(state.v_prev[0] == doctest::Approx(3.0));

  // Random-weight instance: tables equal independently recomputed values.
  auto p5 = weighted_scalar_sum({1, 2, 3, 4, 5}, {0.3, 1.7, 2.9, 0.2, 4.4});
  ChannelEvaluator ev5(p5, Channel::y);
  auto st5 = zerosarah_init(ev5, kItB, 0.1);
  double sum = 0;
  for (int j = 0; j < 5; ++j) {
    const double expected = p5.grad2_g(j, kItB.x, kItB.y)[0];
    CHECK(st5.table_g[j][0] == doctest::Approx(expected));
    sum += expected;
  }
  CHECK(st5.avg_g[0] == doctest::Approx(sum / 5));
}

TEST_CASE("zerosarah recursion") {
  auto py = weighted_scalar_sum({1.0}, {2.0, 3.0});
  ChannelEvaluator eval(py, Channel::y);

  SUBCASE("hand-unrolled two-step schedule, rho_bar = 0.25") {
    auto state = zerosarah_init(eval, kItA, 0.25);
    SampleDraw d0;
    d0.g_indices = {0};
    const Vector v1 = zerosarah_estimate(state, eval, kItB, d0);
    CHECK(v1[0] == doctest::Approx(3.25));  // frozen hand-unrolled value
    SampleDraw d1;
    d1.g_indices = {1};
    const Vector v2 = zerosarah_estimate(state, eval, kItC, d1);
    CHECK(v2[0] == doctest::Approx(2.375));  // frozen hand-unrolled value
  }

  SUBCASE("rho_bar = 0 with a full-batch draw collapses to the plain recursion") {
    auto state = zerosarah_init(eval, kItA, 0.0);
    const Vector v_prev = state.v_prev;
    SampleDraw full;
    full.g_indices = {0, 1};
    const Vector v = zerosarah_estimate(state, eval, kItB, full);
    // v = v_prev - D(prev) + D(now), both full batch.
    const double d_prev = 2.5 * 1.5;
    const double d_now = 2.5 * 1.25;
    CHECK(v[0] == doctest::Approx(v_prev[0] - d_prev + d_now));
  }

  SUBCASE("stationary iterate contracts toward the full direction") {
    auto state = zerosarah_init(eval, kItA, 0.25);
    // Push v away from the full direction by a fake previous value.
    state.v_prev[0] = 10.0;
    SampleDraw d;
    d.g_indices = {0};
    const Vector v = zerosarah_estimate(state, eval, kItA, d);
    const double full_dir = 2.5 * 1.5;
    CHECK(v[0] == doctest::Approx(0.75 * 10.0 + 0.25 * full_dir));
  }

  SUBCASE("uninitialized state throws") {
    ZeroSarahState state;
    SampleDraw d;
    d.g_indices = {0};
    CHECK_THROWS_AS(zerosarah_estimate(state, eval, kItA, d), std::logic_error);
  }
}

TEST_CASE("zerosarah never evaluates a full batch after init") {
  QuadraticSpec spec;
  spec.seed = 4;
  spec.n = 40;
  spec.m = 40;
  spec.dim_x = 3;
  spec.dim_y = 3;
  auto p = make_quadratic(spec);
  EvalCounter counter;
  ChannelEvaluator eval(*p, Channel::x, &counter);
  Iterate it;
  it.x = Vector::Zero(3);
  it.y = Vector::Zero(3);
  it.z = Vector::Zero(3);
  auto state = zerosarah_init(eval, it, 0.1);
  CHECK(counter.f == 40);
  CHECK(counter.g == 40);
  RngStream rng(6);
  const int b = 5;
  for (int step = 0; step < 200; ++step) {
    it.x.array() += 0.001;
    SampleDraw d;
    d.f_indices = rng.sample_without_replacement(40, b);
    d.g_indices = rng.sample_without_replacement(40, b);
    const EvalCounter before = counter;
    zerosarah_estimate(state, eval, it, d);
    // Two evaluation points, b components each, per function.
    CHECK(counter.f - before.f <= 2 * b);
    CHECK(counter.g - before.g <= 2 * b);
  }
}

TEST_CASE("saga estimate") {
  auto py = weighted_scalar_sum({1.0}, {1.0, 2.0, 4.0});
  ChannelEvaluator eval(py, Channel::y);

  SUBCASE("hand-computed single step") {
    auto state = saga_init(eval, kItA);
    SampleDraw d;
    d.g_indices = {0, 2};
    const Vector v = saga_estimate(state, eval, kItB, d);
    CHECK(v[0] == doctest::Approx(2.875));  // frozen table-bookkeeping value
    // Rows refreshed at the new iterate, average corrected.
    CHECK(state.table_g[0][0] == doctest::Approx(1.25));
    CHECK(state.table_g[2][0] == doctest::Approx(5.0));
    CHECK(state.avg_g[0] ==
          doctest::Approx((1.25 + 2.0 * 1.5 + 5.0) / 3.0));
  }

  SUBCASE("tables already at the iterate give the full direction") {
    auto state = saga_init(eval, kItB);
    SampleDraw d;
    d.g_indices = {1};
    const Vector v = saga_estimate(state, eval, kItB, d);
    const double full_dir = (1.0 + 2.0 + 4.0) / 3.0 * 1.25;
    CHECK(v[0] == doctest::Approx(full_dir));
  }

  SUBCASE("n = m = 1 always returns the full direction") {
    auto p1 = weighted_scalar_sum({2.0}, {3.0});
    ChannelEvaluator ex(p1, Channel::x);
    auto state = saga_init(ex, kItA);
    SampleDraw d = full_batch(1, 1);
    const Vector v = saga_estimate(state, ex, kItC, d);
    const Vector expected = ex.eval_at(kItC, d.f_indices, d.g_indices);
    CHECK(v[0] == doctest::Approx(expected[0]));
  }
}

TEST_CASE("page estimate") {
  auto py = weighted_scalar_sum({1.0}, {2.0, 3.0});
  ChannelEvaluator eval(py, Channel::y);

  SUBCASE("hand-unrolled schedule with coins heads, tails, tails") {
    auto state = page_init(eval, kItA, 0.5);
    SampleDraw d0;
    d0.g_indices = {0};
    const Vector v0 = page_estimate(state, eval, kItB, d0, /*coin_full=*/true);
    CHECK(v0[0] == doctest::Approx(3.125));  // frozen
    const Vector v1 = page_estimate(state, eval, kItC, d0, /*coin_full=*/false);
    CHECK(v1[0] == doctest::Approx(2.625));  // frozen
    SampleDraw d1;
    d1.g_indices = {1};
    const Vector v2 = page_estimate(state, eval, kItD, d1, /*coin_full=*/false);
    CHECK(v2[0] == doctest::Approx(1.125));  // frozen
  }

  SUBCASE("heads returns exactly the full direction") {
    auto state = page_init(eval, kItA, 0.5);
    SampleDraw d;
    d.g_indices = {1};
    const Vector v = page_estimate(state, eval, kItC, d, true);
    CHECK(v[0] == doctest::Approx(2.5 * 1.0));
  }

  SUBCASE("tails at an unchanged iterate keeps the previous estimate") {
    auto state = page_init(eval, kItA, 0.5);
    const double before = state.v_prev[0];
    SampleDraw d;
    d.g_indices = {0};
    const Vector v = page_estimate(state, eval, kItA, d, false);
    CHECK(v[0] == doctest::Approx(before));
  }
}

TEST_CASE("storm estimate") {
  auto py = weighted_scalar_sum({1.0}, {2.0, 3.0});
  ChannelEvaluator eval(py, Channel::y);

  SUBCASE("hand-unrolled two-step schedule with a = 0.5") {
    SampleDraw init_draw;
    init_draw.g_indices = {0};
    auto state = storm_init(eval, kItA, 0.5, init_draw);
    CHECK(state.v_prev[0] == doctest::Approx(3.0));
    SampleDraw d1;
    d1.g_indices = {1};
    const Vector v1 = storm_estimate(state, eval, kItB, d1);
    CHECK(v1[0] == doctest::Approx(3.0));  // frozen
    SampleDraw d0;
    d0.g_indices = {0};
    const Vector v2 = storm_estimate(state, eval, kItC, d0);
    CHECK(v2[0] == doctest::Approx(2.25));  // frozen
  }

  SUBCASE("a = 1 reduces to sgd") {
    SampleDraw d;
    d.g_indices = {1};
    auto state = storm_init(eval, kItA, 1.0, d);
    const Vector v = storm_estimate(state, eval, kItB, d);
    CHECK(v[0] == doctest::Approx(sgd_estimate(eval, kItB, d)[0]));
  }

  SUBCASE("fixed point at an unchanged iterate") {
    SampleDraw d;
    d.g_indices = {0};
    auto state = storm_init(eval, kItA, 0.5, d);
    const Vector v = storm_estimate(state, eval, kItA, d);
    CHECK(v[0] == doctest::Approx(state.v_prev[0]));
  }
}

TEST_CASE("unbiasedness of sgd and saga over fresh draws") {
  QuadraticSpec spec;
  spec.seed = 8;
  spec.n = 12;
  spec.m = 12;
  spec.dim_x = 3;
  spec.dim_y = 3;
  spec.dispersion = 0.5;
  auto p = make_quadratic(spec);
  RngStream rng(123);
  Iterate it;
  it.x = Vector::Random(3);
  it.y = Vector::Random(3);
  it.z = Vector::Random(3);
  ChannelEvaluator eval(*p, Channel::x);
  const SampleDraw full = full_batch(12, 12);
  const Vector full_dir = eval.eval_at(it, full.f_indices, full.g_indices);

  const int trials = 20000;
  const int b = 3;

  SUBCASE("sgd") {
    Vector mean = Vector::Zero(3);
    Matrix sq = Matrix::Zero(3, trials);
    for (int t = 0; t < trials; ++t) {
      SampleDraw d;
      d.f_indices = rng.sample_without_replacement(12, b);
      d.g_indices = rng.sample_without_replacement(12, b);
      const Vector v = sgd_estimate(eval, it, d);
      mean += v;
      sq.col(t) = v;
    }
    mean /= trials;
    for (int k = 0; k < 3; ++k) {
      const double sd = std::sqrt((sq.row(k).array() - mean[k]).square().sum() / (trials - 1));
      CHECK(std::abs(mean[k] - full_dir[k]) <= 4.0 * sd / std::sqrt(double(trials)) + 1e-12);
    }
  }

  SUBCASE("saga with arbitrary fixed tables") {
    auto state = saga_init(eval, it);
    // Scramble the tables at a different iterate so fresh != stored.
    Iterate other = it;
    other.y.array() += 0.7;
    other.z.array() -= 0.4;
    for (int i = 0; i < 12; ++i) {
      state.table_f[i] = eval.component_f(i, other);
    }
    for (int j = 0; j < 12; ++j) {
      state.table_g[j] = eval.component_g(j, other);
    }
    state.avg_f = Vector::Zero(3);
    for (int i = 0; i < 12; ++i) state.avg_f += state.table_f[i];
    state.avg_f /= 12.0;
    state.avg_g = Vector::Zero(3);
    for (int j = 0; j < 12; ++j) state.avg_g += state.table_g[j];
    state.avg_g /= 12.0;

    Vector mean = Vector::Zero(3);
    Matrix sq = Matrix::Zero(3, trials);
    for (int t = 0; t < trials; ++t) {
      SagaState fresh_state = state;  // keep tables fixed across draws
      SampleDraw d;
      d.f_indices = rng.sample_without_replacement(12, b);
      d.g_indices = rng.sample_without_replacement(12, b);
      const Vector v = saga_estimate(fresh_state, eval, it, d);
      mean += v;
      sq.col(t) = v;
    }
    mean /= trials;
    for (int k = 0; k < 3; ++k) {
      const double sd = std::sqrt((sq.row(k).array() - mean[k]).square().sum() / (trials - 1));
      CHECK(std::abs(mean[k] - full_dir[k]) <= 4.0 * sd / std::sqrt(double(trials)) + 1e-12);
    }
  }
}

TEST_CASE("table averages stay coherent over many random updates") {
  QuadraticSpec spec;
  spec.seed = 14;
  spec.n = 15;
  spec.m = 15;
  spec.dim_x = 4;
  spec.dim_y = 4;
  auto p = make_quadratic(spec);
  ChannelEvaluator eval(*p, Channel::z);
  RngStream rng(55);
  Iterate it;
  it.x = Vector::Random(4);
  it.y = Vector::Random(4);
  it.z = Vector::Random(4);
  auto state = zerosarah_init(eval, it, 0.2);
  for (int step = 0; step < 1000; ++step) {
    it.y.array() += 0.01 * (rng.next_double() - 0.5);
    it.z.array() += 0.01 * (rng.next_double() - 0.5);
    SampleDraw d;
    d.f_indices = rng.sample_without_replacement(15, 3);
    d.g_indices = rng.sample_without_replacement(15, 3);
    zerosarah_estimate(state, eval, it, d);
  }
  Vector recomputed_f = Vector::Zero(4), recomputed_g = Vector::Zero(4);
  for (int i = 0; i < 15; ++i) recomputed_f += state.table_f[i];
  for (int j = 0; j < 15; ++j) recomputed_g += state.table_g[j];
  recomputed_f /= 15.0;
  recomputed_g /= 15.0;
  CHECK((state.avg_f - recomputed_f).norm() <= 1e-10);
  CHECK((state.avg_g - recomputed_g).norm() <= 1e-10);
}

TEST_CASE("channel estimator facade is deterministic") {
  QuadraticSpec spec;
  spec.seed = 2;
  spec.n = 10;
  spec.m = 10;
  spec.dim_x = 3;
  spec.dim_y = 3;
  auto p = make_quadratic(spec);
  ChannelEvaluator eval(*p, Channel::x);

  auto run_sequence = [&](std::uint64_t seed) {
    EstimatorConfig cfg;
    cfg.kind = EstimatorKind::page;
    cfg.p = 0.3;
    ChannelEstimator est(cfg);
    RngStream draws(seed), coins(seed ^ 1);
    Iterate it;
    it.x = Vector::Zero(3);
    it.y = Vector::Zero(3);
    it.z = Vector::Zero(3);
    est.init(eval, it, draws, 3, 3);
    std::vector<double> out;
    for (int k = 0; k < 50; ++k) {
      it.x.array() += 0.01;
      SampleDraw d;
      d.f_indices = draws.sample_without_replacement(10, 3);
      d.g_indices = draws.sample_without_replacement(10, 3);
      const Vector v = est.estimate(eval, it, d, coins);
      out.push_back(v.sum());
    }
    return out;
  };
  const auto a = run_sequence(99);
  const auto b = run_sequence(99);
  CHECK(a == b);  // bitwise identical
  const auto c = run_sequence(100);
  CHECK(a != c);
}
