#include "sleeptrack/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "sleeptrack/errors.hpp"

namespace sleeptrack {

double normal_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double pairwise_error(double d, double pi_j, double pi_k) {
  if (!(pi_j > 0.0) || !(pi_k > 0.0)) throw InvalidArgument("priors must be positive");
  if (d < 0.0) throw InvalidArgument("distance must be non-negative");
  if (d == 0.0) {
    if (pi_j == pi_k) return 0.5;
    return pi_k > pi_j ? 1.0 : 0.0;
  }
  return normal_tail(d / 2.0 + std::log(pi_j / pi_k) / d);
}

HypothesisGeometry::HypothesisGeometry(const NetworkModel& model) {
  if (!model.is_finite()) throw ModelError("the lower bound needs a finite state space");
  const int m = model.space.size();
  const int n = model.num_sensors();
  means_.resize(m, n);
  inv_sd_.resize(n);
  for (int l = 0; l < n; ++l) {
    const auto& s = model.sensors[l];
    if (s.kind != Sensor::Kind::GaussianRss)
      throw ModelError("the lower bound needs Gaussian sensors");
    inv_sd_[l] = 1.0 / std::sqrt(s.variance);
    for (int i = 0; i < m; ++i) means_(i, l) = s.mean(model.space.coordinate(i));
  }
}

double HypothesisGeometry::distance(int k, int j, const std::vector<bool>& awake) const {
  double sum = 0.0;
  for (int l = 0; l < sensors(); ++l) {
    if (!awake[l]) continue;
    const double z = (means_(k, l) - means_(j, l)) * inv_sd_[l];
    sum += z * z;
  }
  return std::sqrt(sum);
}

BoundTables bound_tables(const NetworkModel& model) {
  const HypothesisGeometry geometry(model);
  const int m = geometry.states();
  const int n = geometry.sensors();
  const auto& kernel = model.finite_kernel();

  // Squared whitened separations per sensor, for every ordered pair.
  std::vector<Eigen::MatrixXd> sep(n, Eigen::MatrixXd(m, m));
  for (int l = 0; l < n; ++l) {
    const double inv = 1.0 / model.sensors[l].variance;
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j) {
        const double z = geometry.means()(k, l) - geometry.means()(j, l);
        sep[l](k, j) = z * z * inv;
      }
  }

  BoundTables out{Eigen::MatrixXd::Zero(m, n), Eigen::MatrixXd::Zero(m, n)};
  for (int i = 0; i < m; ++i) {
    std::vector<std::pair<int, double>> prior;
    for (const auto& [j, pr] : kernel.row(i))
      if (j < m && pr > 0.0) prior.emplace_back(j, pr);
    double t0 = 0.0;
    Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
    for (const auto& [j, pj] : prior) {
      double worst0 = 0.0;
      Eigen::VectorXd worst = Eigen::VectorXd::Zero(n);
      for (const auto& [k, pk] : prior) {
        if (k == j) continue;
        double all = 0.0;
        for (int l = 0; l < n; ++l) all += sep[l](k, j);
        worst0 = std::max(worst0, pairwise_error(std::sqrt(all), pj, pk));
        for (int l = 0; l < n; ++l) {
          double rest = 0.0;
          for (int o = 0; o < n; ++o)
            if (o != l) rest += sep[o](k, j);
          worst[l] = std::max(worst[l], pairwise_error(std::sqrt(rest), pj, pk));
        }
      }
      t0 += pj * worst0;
      t += pj * worst;
    }
    out.all_awake.row(i).setConstant(t0);
    out.one_asleep.row(i) = t.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------

LambdaMatrix LambdaMatrix::uniform(int m, int n) {
  return {Eigen::MatrixXd::Constant(m, n, 1.0 / n)};
}

LambdaMatrix LambdaMatrix::random(int m, int n, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  LambdaMatrix out{Eigen::MatrixXd(m, n)};
  for (int i = 0; i < m; ++i) {
    for (int l = 0; l < n; ++l) out.weights(i, l) = expo(rng);
    out.weights.row(i) /= out.weights.row(i).sum();
  }
  return out;
}

void LambdaMatrix::validate() const {
  if ((weights.array() < 0.0).any()) throw InvalidArgument("lambda entries must be non-negative");
  for (Eigen::Index i = 0; i < weights.rows(); ++i)
    if (std::abs(weights.row(i).sum() - 1.0) > 1e-9)
      throw InvalidArgument("lambda rows must sum to one");
}

void project_rows_to_simplex(Eigen::MatrixXd& rows) {
  const auto n = rows.cols();
  std::vector<double> sorted(n);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    for (Eigen::Index l = 0; l < n; ++l) sorted[l] = rows(i, l);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
      cum += sorted[l];
      const double t = (cum - 1.0) / static_cast<double>(l + 1);
      if (sorted[l] - t > 0.0) theta = t;
    }
    for (Eigen::Index l = 0; l < n; ++l) rows(i, l) = std::max(0.0, rows(i, l) - theta);
    rows.row(i) /= rows.row(i).sum();
  }
}

BoundSolution lb_solve(const NetworkModel& model, const BoundTables& tables,
                       const LambdaMatrix& lambda, int u_max, const SolveOptions& options) {
  const int m = model.space.size();
  if (lambda.weights.rows() != m || lambda.weights.cols() != model.num_sensors())
    throw InvalidArgument("lambda shape does not match the network");
  lambda.validate();
  SleepProblemSet problems{lambda.weights.cwiseProduct(tables.one_asleep),
                           lambda.weights.cwiseProduct(tables.all_awake), model.energy_price};
  BoundSolution out;
  out.sensors = solve_sleep_problems(model.finite_kernel(), problems, u_max, options);
  out.value = Eigen::VectorXd::Zero(m);
  out.energy = Eigen::VectorXd::Zero(m);
  for (const auto& s : out.sensors) {
    out.value += s.value;
    out.energy += s.energy;
  }
  out.tracking = out.value - out.energy;
  return out;
}

Eigen::MatrixXd bound_gradient(const NetworkModel& model, const BoundTables& tables,
                               const BoundSolution& solution, int start) {
  const auto& kernel = model.finite_kernel();
  const auto& qt = kernel.in_network_transposed();
  const int m = kernel.num_locations();
  const int n = static_cast<int>(solution.sensors.size());
  const Eigen::MatrixXd fundamental = fundamental_matrix(kernel);

  int horizon = -1;
  for (const auto& s : solution.sensors)
    for (int u : s.sleep)
      if (u != kNeverWake) horizon = std::max(horizon, u);

  // Per sensor, row b: states weighted while asleep, at the wake step, and
  // the distribution at the next decision.
  std::vector<Eigen::MatrixXd> asleep(n, Eigen::MatrixXd::Zero(m, m));
  std::vector<Eigen::MatrixXd> at_wake(n, Eigen::MatrixXd::Zero(m, m));
  std::vector<Eigen::MatrixXd> jump(n, Eigen::MatrixXd::Zero(m, m));
  for (int l = 0; l < n; ++l)
    for (int b = 0; b < m; ++b)
      if (solution.sensors[l].sleep[b] == kNeverWake) asleep[l].row(b) = fundamental.row(b);
  Eigen::MatrixXd xt = Eigen::MatrixXd::Identity(m, m);
  Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(m, m);
  for (int u = 0; u <= horizon; ++u) {
    const Eigen::MatrixXd next = qt * xt;
    for (int l = 0; l < n; ++l)
      for (int b = 0; b < m; ++b)
        if (solution.sensors[l].sleep[b] == u) {
          asleep[l].row(b) = cum.col(b).transpose();
          at_wake[l].row(b) = xt.col(b).transpose();
          jump[l].row(b) = next.col(b).transpose();
        }
    cum += xt;
    xt = next;
  }

  Eigen::MatrixXd grad(m, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
  e[start] = 1.0;
  for (int l = 0; l < n; ++l) {
    const Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(m, m) - jump[l]).transpose();
    const Eigen::VectorXd visits = a.partialPivLu().solve(e);
    const Eigen::VectorXd occ_asleep = asleep[l].transpose() * visits;
    const Eigen::VectorXd occ_wake = at_wake[l].transpose() * visits;
    grad.col(l) = occ_asleep.cwiseProduct(tables.one_asleep.col(l)) +
                  occ_wake.cwiseProduct(tables.all_awake.col(l));
  }
  return grad;
}

std::vector<EnvelopePoint> lb_envelope(const NetworkModel& model, const std::vector<double>& c_grid,
                                       const EnvelopeConfig& config) {
  if (c_grid.empty()) throw InvalidArgument("empty c grid");
  if (config.restarts < 1 || config.steps < 1)
    throw InvalidArgument("envelope search needs at least one candidate");
  const BoundTables tables = bound_tables(model);
  const int m = model.space.size();
  const int n = model.num_sensors();
  const int start = model.start.index;
  const double lifetime = absorption_times(model.finite_kernel())[start];
  const int u_max = config.u_max > 0 ? config.u_max : default_u_max(lifetime);

  std::vector<EnvelopePoint> out;
  for (std::size_t ci = 0; ci < c_grid.size(); ++ci) {
    const NetworkModel priced = model.with_energy_price(c_grid[ci]);
    EnvelopePoint point;
    point.c = c_grid[ci];
    point.lifetime = lifetime;
    point.bound = -std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < config.restarts; ++restart) {
      Rng rng = make_stream(config.seed, ci, static_cast<std::uint64_t>(restart));
      LambdaMatrix lambda =
          restart == 0 ? LambdaMatrix::uniform(m, n) : LambdaMatrix::random(m, n, rng);
      std::vector<PerSensorValue> warm;
      int stale = 0;
      for (int step = 0; step < config.steps && stale < config.patience; ++step) {
        SolveOptions options;
        options.warm_start = warm.empty() ? nullptr : &warm;
        const BoundSolution sol = lb_solve(priced, tables, lambda, u_max, options);
        ++point.evaluations;
        const double value = sol.value[start];
        if (value > point.bound + config.tol * (1.0 + std::abs(point.bound))) {
          stale = 0;
        } else {
          ++stale;
        }
        if (value > point.bound) {
          point.bound = value;
          point.tracking = sol.tracking[start];
          point.energy = sol.energy[start];
          point.lambda = lambda;
        }
        point.history.push_back(point.bound);
        if (n == 1) break;  // the simplex is a single point
        const Eigen::MatrixXd grad = bound_gradient(priced, tables, sol, start);
        const double scale = grad.cwiseAbs().maxCoeff();
        if (!(scale > 0.0)) break;
        lambda.weights += (0.5 / (scale * std::sqrt(step + 1.0))) * grad;
        project_rows_to_simplex(lambda.weights);
        warm = sol.sensors;
      }
      if (n == 1) break;
    }
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace sleeptrack
