#include <doctest.h>

#include <cmath>

#include "../support/cases.hpp"
#include "../support/oracles.hpp"
#include "sleeptrack/errors.hpp"
#include "sleeptrack/filter.hpp"
#include "sleeptrack/tdelta.hpp"

using namespace sleeptrack;

TEST_CASE("asleep baseline on network A is exact for perfect sensors") {
  const auto a = network_a();
  Rng rng = make_stream(1);
  const auto b = a.space.state(20);
  // all asleep: {20, 22} equally likely (risk 0.5); waking either neighbour
  // resolves it, any other sensor tells nothing
  for (int l = 0; l < 41; ++l) {
    const double want = (l == 19 || l == 21) ? 0.5 : 0.0;
    CHECK(tdelta_asleep(a, b, l, 50, rng) == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("greedy baseline on network A keeps only the left neighbour") {
  const auto a = network_a();
  Rng rng = make_stream(2);
  const auto g = tdelta_greedy(a, a.space.state(20), 50, rng);
  CHECK(g.baseline == std::vector<int>{19});
  for (int l = 0; l < 41; ++l) CHECK(g.row[l] == doctest::Approx(l == 19 ? 0.5 : 0.0));
  // above the achievable reduction nothing is woken
  const auto pricey = a.with_energy_price(0.6);
  const auto none = tdelta_greedy(pricey, a.space.state(20), 50, rng);
  CHECK(none.baseline.empty());
  CHECK(none.row[19] == doctest::Approx(0.5));
}

TEST_CASE("Monte-Carlo asleep baseline is consistent with quadrature") {
  Rng rng = make_stream(3);
  for (int rep = 0; rep < 6; ++rep) {
    const Eigen::MatrixXd kernel = oracle::random_kernel(4, 0.05, rng);
    const auto model = oracle::random_model(kernel, 2, 0.1, rng);
    const int from = rep % 4;
    const int l = rep % 2;
    const int samples = 20000;
    const double got = tdelta_asleep(model, model.space.state(from), l, samples, rng);
    const auto want = oracle::one_sensor_reduction(model, kernel, from, l);
    CHECK(std::abs(got - std::abs(want.mean)) <= 3.0 * want.sd / std::sqrt(samples) + 1e-6);
  }
}

TEST_CASE("tables have the documented shapes and stream layout") {
  const auto b = network_b();
  const auto t = build_tdelta_table(b, TDeltaSource::Asleep, 20, 4);
  CHECK(t.rows() == 21);
  CHECK(t.sensors() == 10);
  CHECK_FALSE(t.interpolated());
  t.validate();
  // row r depends only on (seed, r)
  Rng rng = make_stream(4, 7, static_cast<std::uint64_t>(TDeltaSource::Asleep));
  CHECK(tdelta_asleep(b, b.space.state(7), 3, 20, rng) == doctest::Approx(t.at(7, 3)));

  const auto c = network_c();
  const auto z = TDeltaTable::zeros(c, TDeltaSource::Asleep);
  CHECK(z.interpolated());
  CHECK(z.rows() == 21);
  CHECK(z.anchors().front() == 1.0);
  CHECK(z.anchors().back() == 21.0);
}

TEST_CASE("interpolated lookup is linear between anchors and clamped outside") {
  Eigen::MatrixXd v(3, 1);
  v << 0.0, 1.0, 3.0;
  const TDeltaTable t(v, {1.0, 2.0, 4.0}, true, TDeltaSource::File);
  CHECK(t.eval_at(1.5, 0) == doctest::Approx(0.5));
  CHECK(t.eval_at(3.0, 0) == doctest::Approx(2.0));
  CHECK(t.eval_at(-7.0, 0) == 0.0);
  CHECK(t.eval_at(9.0, 0) == 3.0);
  CHECK(t.eval(ObjectState::at(2.0), 0) == 1.0);
  CHECK_THROWS_AS(t.eval(ObjectState::exited(), 0), InvalidArgument);
}

TEST_CASE("table validation") {
  Eigen::MatrixXd v(2, 1);
  v << 0.1, -0.2;
  CHECK_THROWS_AS(TDeltaTable(v, {1.0, 2.0}, false, TDeltaSource::File).validate(), InvalidArgument);
  v << 0.1, std::nan("");
  CHECK_THROWS_AS(TDeltaTable(v, {1.0, 2.0}, false, TDeltaSource::File).validate(), InvalidArgument);
}

TEST_CASE("source names") {
  CHECK(parse_tdelta_source("greedy") == TDeltaSource::Greedy);
  CHECK(parse_tdelta_source("learning") == TDeltaSource::Learned);
  CHECK(to_string(TDeltaSource::Asleep) == "asleep");
  CHECK_THROWS_AS(parse_tdelta_source("oracle"), ConfigError);
}

TEST_CASE("learning step follows the squared-error gradient") {
  Rng rng = make_stream(5);
  for (int rep = 0; rep < 5; ++rep) {
    const auto fc = cases::filter_case(rng, 1);
    const auto& model = fc.model;
    const int m = model.space.size(), n = model.num_sensors();
    Eigen::MatrixXd start = Eigen::MatrixXd::Constant(m, n, 5.0);
    TDeltaTable table(start, model.space.coordinates(), false, TDeltaSource::Learned);
    const DenseBelief p_prev{fc.prior};
    const auto& r = fc.sleep[0];
    DenseBelief p_now;
    try {
      p_now = belief_update(p_prev, model, fc.obs[0], r);
    } catch (const InconsistentObservation&) {
      continue;
    }
    if (fc.obs[0].exited) continue;
    Rng replay = make_stream(77, rep);
    Rng copy = replay;
    std::vector<double> observed(n);
    for (int l = 0; l < n; ++l)
      observed[l] = observed_increase(model, p_prev, p_now, fc.obs[0], r, l, copy);
    const double alpha = 0.01;
    learn_step(table, p_prev, p_now, fc.obs[0], r, model, alpha, replay);
    for (int l = 0; l < n; ++l)
      for (int b = 0; b < m; ++b) {
        const double h = 1e-5;
        auto loss = [&](double x) {
          TDeltaTable t(start, model.space.coordinates(), false, TDeltaSource::Learned);
          t.at(b, l) = x;
          const double e = predicted_increase(t, p_prev, l) - observed[l];
          return e * e;
        };
        const double grad = (loss(5.0 + h) - loss(5.0 - h)) / (2.0 * h);
        CHECK(std::abs((table.at(b, l) - 5.0) - (-alpha * grad)) < 1e-8);
      }
  }
}

TEST_CASE("learning clamps at zero") {
  const auto b = network_b();
  Rng rng = make_stream(6);
  auto t = TDeltaTable::zeros(b, TDeltaSource::Learned);
  t.values().setConstant(1e-3);
  const auto p_prev = DenseBelief::point(21, 10);
  const auto r = SleepState::all_awake(10);
  const auto s = observe(b, b.space.state(11), r, rng);
  const auto p_now = belief_update(p_prev, b, s, r);
  learn_step(t, p_prev, p_now, s, r, b, 1000.0, rng);
  CHECK(t.values().minCoeff() >= 0.0);
  CHECK(t.values().maxCoeff() > 1e-3);
  // only the row of the previous location moves
  CHECK(t.values().row(3).cwiseEqual(1e-3).all());
  CHECK_THROWS_AS(learn_step(t, p_prev, p_now, s, r, b, -1.0, rng), InvalidArgument);
}
