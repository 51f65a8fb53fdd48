#pragma once

// Random instances shared by the unit and acceptance tests.

#include <random>
#include <vector>

#include "oracles.hpp"
#include "sleeptrack/filter.hpp"
#include "sleeptrack/model.hpp"
#include "sleeptrack/tdelta.hpp"

namespace cases {

using namespace sleeptrack;

struct FilterCase {
  Eigen::MatrixXd kernel;
  NetworkModel model;
  Eigen::VectorXd prior;
  std::vector<Observation> obs;
  std::vector<SleepState> sleep;
};

/// Up to 6 states (terminal included), up to 3 Gaussian sensors, a random
/// prior and `steps` simulated observations under random sleep patterns.
inline FilterCase filter_case(Rng& rng, int steps = 4) {
  std::uniform_int_distribution<int> states(2, 5), sensors(1, 3), coin(0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  FilterCase fc;
  const int m = states(rng);
  fc.kernel = oracle::random_kernel(m, 0.02, rng);
  fc.model = oracle::random_model(fc.kernel, sensors(rng), 0.1, rng);
  fc.prior = Eigen::VectorXd::Zero(m + 1);
  for (int i = 0; i < m; ++i) fc.prior[i] = 0.05 + unit(rng);
  fc.prior /= fc.prior.sum();
  std::discrete_distribution<int> pick(fc.prior.data(), fc.prior.data() + m);
  ObjectState b = fc.model.space.state(pick(rng));
  for (int k = 0; k < steps; ++k) {
    SleepState r = SleepState::all_awake(fc.model.num_sensors());
    for (auto& t : r.timers) t = coin(rng) ? 0 : 1 + coin(rng);
    b = fc.model.sample_next(b, rng);
    fc.obs.push_back(observe(fc.model, b, r, rng));
    fc.sleep.push_back(r);
  }
  return fc;
}

struct ChainCase {
  Eigen::MatrixXd kernel;
  NetworkModel model;
  TDeltaTable table;
  DenseBelief belief;
};

/// Two transient states plus the terminal state, one sensor, a random
/// T-delta column, a random energy price and a random belief.
inline ChainCase chain_case(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ChainCase cc{oracle::random_kernel(2, 0.05, rng), {}, TDeltaTable::zeros(network_a(), TDeltaSource::File), {}};
  cc.model = oracle::random_model(cc.kernel, 1, 0.05 + 0.95 * unit(rng), rng);
  Eigen::MatrixXd t(2, 1);
  t << unit(rng), unit(rng);
  cc.table = TDeltaTable(t, {1.0, 2.0}, false, TDeltaSource::File);
  const double x = unit(rng), gone = 0.2 * unit(rng);
  cc.belief.mass = Eigen::Vector3d((1.0 - gone) * x, (1.0 - gone) * (1.0 - x), gone);
  return cc;
}

}  // namespace cases
