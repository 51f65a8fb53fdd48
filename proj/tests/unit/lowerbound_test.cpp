#include <doctest.h>

#include <cmath>

#include "../support/cases.hpp"
#include "../support/oracles.hpp"
#include "sleeptrack/errors.hpp"
#include "sleeptrack/lowerbound.hpp"

using namespace sleeptrack;

TEST_CASE("normal tail") {
  CHECK(normal_tail(0.0) == 0.5);
  CHECK(normal_tail(1.959963984540054) == doctest::Approx(0.025).epsilon(1e-12));
  CHECK(normal_tail(-1.0) == doctest::Approx(1.0 - normal_tail(1.0)));
}

TEST_CASE("pairwise error and its zero-distance limits") {
  CHECK(pairwise_error(0.0, 0.3, 0.3) == 0.5);
  CHECK(pairwise_error(0.0, 0.3, 0.4) == 1.0);
  CHECK(pairwise_error(0.0, 0.4, 0.3) == 0.0);
  CHECK(pairwise_error(2.0, 0.5, 0.5) == doctest::Approx(normal_tail(1.0)));
  CHECK(pairwise_error(1.5, 0.2, 0.6) == doctest::Approx(normal_tail(0.75 + std::log(1.0 / 3.0) / 1.5)));
  // approaching zero distance from above recovers the limits
  CHECK(pairwise_error(1e-9, 0.3, 0.4) == doctest::Approx(1.0));
  CHECK(pairwise_error(1e-9, 0.4, 0.3) == doctest::Approx(0.0));
  CHECK_THROWS_AS(pairwise_error(1.0, 0.0, 0.5), InvalidArgument);
}

TEST_CASE("bound tables match a from-scratch computation on network B") {
  const auto b = network_b();
  const auto tables = bound_tables(b);
  const auto& p = b.finite_kernel();
  for (int i : {0, 5, 10, 20}) {
    std::vector<int> support;
    for (int j = 0; j < 21; ++j)
      if (p.probability(i, j) > 0.0) support.push_back(j);
    auto dist = [&](int k, int j, int skip) {
      double s = 0.0;
      for (int l = 0; l < 10; ++l) {
        if (l == skip) continue;
        const double loc = b.sensors[l].location;
        const double z = oracle::rss_mean(10.0, loc, k + 1.0) - oracle::rss_mean(10.0, loc, j + 1.0);
        s += z * z;
      }
      return std::sqrt(s);
    };
    auto table_entry = [&](int skip) {
      double total = 0.0;
      for (int j : support) {
        double worst = 0.0;
        for (int k : support)
          if (k != j)
            worst = std::max(worst, pairwise_error(dist(k, j, skip), p.probability(i, j),
                                                   p.probability(i, k)));
        total += p.probability(i, j) * worst;
      }
      return total;
    };
    CHECK(tables.all_awake(i, 0) == doctest::Approx(table_entry(-1)).epsilon(1e-12));
    CHECK(tables.all_awake(i, 9) == tables.all_awake(i, 0));
    for (int l = 0; l < 10; ++l)
      CHECK(tables.one_asleep(i, l) == doctest::Approx(table_entry(l)).epsilon(1e-12));
  }
}

TEST_CASE("the bound needs a finite model with Gaussian sensors") {
  CHECK_THROWS_AS(HypothesisGeometry{network_a()}, ModelError);
  CHECK_THROWS_AS(HypothesisGeometry{network_c()}, ModelError);
}

TEST_CASE("lambda helpers") {
  Rng rng = make_stream(41);
  const auto r = LambdaMatrix::random(5, 4, rng);
  r.validate();
  LambdaMatrix::uniform(3, 4).validate();
  Eigen::MatrixXd rows(3, 2);
  rows << 0.5, 0.8, 0.3, 0.7, -1.0, 3.0;
  project_rows_to_simplex(rows);
  CHECK(rows(0, 0) == doctest::Approx(0.35));
  CHECK(rows(0, 1) == doctest::Approx(0.65));
  CHECK(rows(1, 0) == doctest::Approx(0.3));
  CHECK(rows(2, 0) == 0.0);
  CHECK(rows(2, 1) == 1.0);
  LambdaMatrix bad{Eigen::MatrixXd::Constant(2, 2, 0.7)};
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("bound solve on a hand-set chain matches timer value iteration") {
  Rng rng = make_stream(42);
  const Eigen::MatrixXd kernel = oracle::random_kernel(2, 0.1, rng);
  auto model = oracle::random_model(kernel, 2, 0.2, rng);
  BoundTables tables{Eigen::MatrixXd(2, 2), Eigen::MatrixXd(2, 2)};
  tables.all_awake << 0.05, 0.05, 0.1, 0.1;
  tables.one_asleep << 0.3, 0.6, 0.5, 0.2;
  LambdaMatrix lambda{Eigen::MatrixXd(2, 2)};
  lambda.weights << 0.25, 0.75, 0.6, 0.4;
  const auto sol = lb_solve(model, tables, lambda, 40);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(2);
  for (int l = 0; l < 2; ++l) {
    const Eigen::VectorXd w = lambda.weights.col(l).cwiseProduct(tables.one_asleep.col(l));
    const Eigen::VectorXd v = lambda.weights.col(l).cwiseProduct(tables.all_awake.col(l));
    const auto want = oracle::timer_value_iteration(kernel.topLeftCorner(2, 2), w, v, 0.2, 40);
    CHECK((sol.sensors[l].value - want.value).cwiseAbs().maxCoeff() < 1e-8);
    total += want.value;
  }
  CHECK((sol.value - total).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((sol.tracking + sol.energy - sol.value).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bound gradient predicts small changes of the bound") {
  const auto b = network_b().with_energy_price(0.05);
  const auto tables = bound_tables(b);
  Rng rng = make_stream(43);
  const auto lambda = LambdaMatrix::random(21, 10, rng);
  const int u_max = 170;
  const auto sol = lb_solve(b, tables, lambda, u_max);
  const Eigen::MatrixXd g = bound_gradient(b, tables, sol, 10);
  // zero-sum direction keeps every row on the simplex for small steps
  Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(21, 10);
  for (int i = 0; i < 21; ++i) {
    dir(i, i % 10) = 1.0;
    dir(i, (i + 3) % 10) = -1.0;
  }
  const double eps = 1e-6;
  LambdaMatrix up{lambda.weights + eps * dir}, down{lambda.weights - eps * dir};
  const double fd = (lb_solve(b, tables, up, u_max).value[10] -
                     lb_solve(b, tables, down, u_max).value[10]) / (2.0 * eps);
  CHECK(fd == doctest::Approx((g.cwiseProduct(dir)).sum()).epsilon(1e-4));
}

TEST_CASE("envelope search never loses its best value") {
  const auto b = network_b();
  EnvelopeConfig cfg;
  cfg.restarts = 2;
  cfg.steps = 4;
  const auto pts = lb_envelope(b, {0.1}, cfg);
  REQUIRE(pts.size() == 1);
  const auto& p = pts[0];
  CHECK(p.evaluations == static_cast<int>(p.history.size()));
  for (std::size_t i = 1; i < p.history.size(); ++i) CHECK(p.history[i] >= p.history[i - 1]);
  CHECK(p.bound == p.history.back());
  const double uniform =
      lb_solve(b.with_energy_price(0.1), bound_tables(b), LambdaMatrix::uniform(21, 10),
               default_u_max(p.lifetime))
          .value[10];
  CHECK(p.bound >= uniform - 1e-12);
  CHECK(p.tracking + p.energy == doctest::Approx(p.bound));
  p.lambda.validate();
}
