#include "sleeptrack/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sleeptrack/errors.hpp"

namespace sleeptrack {

namespace {

// Below this in-network mass every remaining candidate is indistinguishable
// from never waking.
constexpr double kNegligibleMass = 1e-15;

double tie_slack(double v) { return 1e-12 * (1.0 + std::abs(v)); }

void require_finite_table(const NetworkModel& model, const TDeltaTable& table) {
  if (!model.is_finite()) throw InvalidArgument("this policy needs a finite state space");
  if (table.interpolated() || table.rows() != model.space.size() ||
      table.sensors() != model.num_sensors())
    throw InvalidArgument("table shape does not match the network");
}

bool fcr_wakes(double tracking, double energy, bool flipped) {
  if (flipped) return energy >= tracking;
  return tracking > 0.0 && tracking >= energy;
}

/// Candidate scan for one belief and several sensors. `x` is the in-network
/// part of the belief; the result holds the chosen input per listed sensor.
std::vector<int> scan_minimand(const FiniteKernel& kernel, Eigen::VectorXd x,
                               const Eigen::MatrixXd& asleep, const Eigen::MatrixXd& wake_value,
                               const Eigen::VectorXd& never, int u_max) {
  const auto k = asleep.cols();
  std::vector<int> choice(k, kNeverWake);
  if (!(x.sum() > 0.0)) return choice;
  Eigen::VectorXd best = Eigen::VectorXd::Constant(k, std::numeric_limits<double>::infinity());
  Eigen::VectorXd cum = Eigen::VectorXd::Zero(k);
  const auto& qt = kernel.in_network_transposed();
  for (int u = 0; u <= u_max; ++u) {
    const Eigen::VectorXd next = qt * x;
    const Eigen::VectorXd value = cum + wake_value.transpose() * next;
    for (Eigen::Index s = 0; s < k; ++s)
      if (u == 0 || value[s] < best[s] - tie_slack(best[s])) {
        best[s] = value[s];
        choice[s] = u;
      }
    cum += asleep.transpose() * x;
    x = next;
    if (x.sum() < kNegligibleMass) break;
  }
  for (Eigen::Index s = 0; s < k; ++s)
    if (never[s] < best[s] - tie_slack(best[s])) choice[s] = kNeverWake;
  return choice;
}

}  // namespace

int default_u_max(double lifetime) {
  if (!(lifetime > 0.0) || !std::isfinite(lifetime))
    throw InvalidArgument("lifetime must be positive and finite");
  return static_cast<int>(std::ceil(2.0 * lifetime - 1e-9));
}

Eigen::MatrixXd fundamental_matrix(const FiniteKernel& kernel) {
  const int m = kernel.num_locations();
  const Eigen::MatrixXd q = Eigen::MatrixXd(kernel.in_network_transposed()).transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - q);
  if (!lu.isInvertible()) throw ModelError("kernel is not absorbing: I - Q is singular");
  return lu.inverse();
}

std::vector<PerSensorValue> solve_sleep_problems(const FiniteKernel& kernel,
                                                 const SleepProblemSet& problems, int u_max,
                                                 const SolveOptions& options) {
  const int m = kernel.num_locations();
  const int n = problems.sensors();
  const Eigen::MatrixXd& w = problems.asleep_cost;
  const Eigen::MatrixXd& v = problems.wake_cost;
  const double c = problems.energy_price;
  if (w.rows() != m || v.rows() != m || v.cols() != n)
    throw InvalidArgument("sleep problem dimensions do not match the kernel");
  if (u_max < 0) throw InvalidArgument("sleep cap must be non-negative");
  if (!w.allFinite() || !v.allFinite()) throw InvalidArgument("costs must be finite");

  const auto& qt = kernel.in_network_transposed();
  const Eigen::MatrixXd fundamental = fundamental_matrix(kernel);
  const Eigen::MatrixXd never = fundamental * w;  // cost of sleeping forever

  std::vector<std::vector<int>> policy(n, std::vector<int>(m, 0));
  if (options.warm_start && static_cast<int>(options.warm_start->size()) == n)
    for (int l = 0; l < n; ++l)
      if (static_cast<int>((*options.warm_start)[l].sleep.size()) == m)
        policy[l] = (*options.warm_start)[l].sleep;

  // Evaluation: J = r + M J with r split into tracking and energy parts.
  struct Evaluation {
    Eigen::MatrixXd value, energy;
  };
  auto evaluate = [&](const std::vector<std::vector<int>>& pol) {
    int horizon = -1;
    for (const auto& col : pol)
      for (int u : col)
        if (u != kNeverWake) horizon = std::max(horizon, u);
    std::vector<Eigen::MatrixXd> jump(n, Eigen::MatrixXd::Zero(m, m));
    Eigen::MatrixXd track(m, n), energy = Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXd xt = Eigen::MatrixXd::Identity(m, m);  // column b = (e_b Q^u)^T
    for (int l = 0; l < n; ++l)
      for (int b = 0; b < m; ++b)
        if (pol[l][b] == kNeverWake) track(b, l) = never(b, l);
    for (int u = 0; u <= horizon; ++u) {
      const Eigen::MatrixXd next = qt * xt;
      const Eigen::MatrixXd at_wake = xt.transpose() * v;
      const Eigen::VectorXd survive = next.colwise().sum().transpose();
      for (int l = 0; l < n; ++l)
        for (int b = 0; b < m; ++b)
          if (pol[l][b] == u) {
            track(b, l) = cum(b, l) + at_wake(b, l);
            energy(b, l) = c * survive[b];
            jump[l].row(b) = next.col(b).transpose();
          }
      cum += xt.transpose() * w;
      xt = next;
    }
    Evaluation out{Eigen::MatrixXd(m, n), Eigen::MatrixXd(m, n)};
    for (int l = 0; l < n; ++l) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(m, m) - jump[l]);
      const Eigen::VectorXd jt = lu.solve(track.col(l));
      const Eigen::VectorXd je = lu.solve(energy.col(l));
      out.value.col(l) = jt + je;
      out.energy.col(l) = je;
    }
    return out;
  };

  // Improvement: smallest candidate within tie slack of the best.
  auto improve = [&](const Eigen::MatrixXd& value, std::vector<std::vector<int>>& pol,
                     Eigen::MatrixXd& best) {
    const Eigen::MatrixXd to_go = (value.array() + c).matrix();
    best = Eigen::MatrixXd::Constant(m, n, std::numeric_limits<double>::infinity());
    for (auto& col : pol) std::fill(col.begin(), col.end(), kNeverWake);
    Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(m, n);
    Eigen::MatrixXd xt = Eigen::MatrixXd::Identity(m, m);
    for (int u = 0; u <= u_max; ++u) {
      const Eigen::MatrixXd next = qt * xt;
      Eigen::MatrixXd cand = cum + xt.transpose() * v;
      // (e_b Q^{u+1}) . (c + J_l) for every (b, l)
      for (int l = 0; l < n; ++l) cand.col(l) += next.transpose() * to_go.col(l);
      for (int l = 0; l < n; ++l)
        for (int b = 0; b < m; ++b)
          if (u == 0 || cand(b, l) < best(b, l) - tie_slack(best(b, l))) {
            best(b, l) = cand(b, l);
            pol[l][b] = u;
          }
      cum += xt.transpose() * w;
      xt = next;
      if (xt.colwise().sum().maxCoeff() < kNegligibleMass) break;
    }
    for (int l = 0; l < n; ++l)
      for (int b = 0; b < m; ++b)
        if (never(b, l) < best(b, l) - tie_slack(best(b, l))) {
          best(b, l) = never(b, l);
          pol[l][b] = kNeverWake;
        }
  };

  Evaluation current = evaluate(policy);
  Eigen::MatrixXd previous;
  int iteration = 0;
  double residual = std::numeric_limits<double>::infinity();
  for (;;) {
    ++iteration;
    std::vector<std::vector<int>> next_policy = policy;
    Eigen::MatrixXd best;
    improve(current.value, next_policy, best);
    residual = (current.value - best).cwiseAbs().maxCoeff();
    const bool stable = next_policy == policy;
    const bool small_step =
        previous.size() > 0 && (current.value - previous).cwiseAbs().maxCoeff() < options.tol;
    if (stable || small_step) break;
    if (iteration >= options.max_iterations)
      throw ConvergenceError("policy iteration did not converge", residual);
    policy = std::move(next_policy);
    previous = current.value;
    current = evaluate(policy);
  }

  std::vector<PerSensorValue> out(n);
  for (int l = 0; l < n; ++l) {
    out[l].value = current.value.col(l);
    out[l].energy = current.energy.col(l);
    out[l].sleep = policy[l];
    out[l].tracking_to_go = never.col(l);
    out[l].u_max = u_max;
    out[l].iterations = iteration;
    out[l].residual = residual;
  }
  return out;
}

std::vector<PerSensorValue> qmdp_solve_all(const NetworkModel& model, const TDeltaTable& table,
                                           int u_max, const SolveOptions& options) {
  require_finite_table(model, table);
  SleepProblemSet problems{table.values(), Eigen::MatrixXd::Zero(table.rows(), table.sensors()),
                           model.energy_price};
  return solve_sleep_problems(model.finite_kernel(), problems, u_max, options);
}

PerSensorValue qmdp_solve(const NetworkModel& model, const TDeltaTable& table, int l, int u_max,
                          double tol) {
  require_finite_table(model, table);
  if (l < 0 || l >= table.sensors()) throw InvalidArgument("sensor index out of range");
  SleepProblemSet problems{table.values().col(l), Eigen::MatrixXd::Zero(table.rows(), 1),
                           model.energy_price};
  SolveOptions options;
  options.tol = tol;
  return solve_sleep_problems(model.finite_kernel(), problems, u_max, options).front();
}

int qmdp_sleep_time(const PerSensorValue& value, const NetworkModel& model,
                    const TDeltaTable& table, const DenseBelief& p, int l) {
  require_finite_table(model, table);
  const Eigen::MatrixXd asleep = table.values().col(l);
  const Eigen::MatrixXd wake = (value.value.array() + model.energy_price).matrix();
  const Eigen::VectorXd x = p.in_network();
  const Eigen::VectorXd never = Eigen::VectorXd::Constant(1, x.dot(value.tracking_to_go));
  return scan_minimand(model.finite_kernel(), x, asleep, wake, never, value.u_max).front();
}

int fcr_sleep_time(const NetworkModel& model, const TDeltaTable& table, const DenseBelief& p,
                   int l, int u_max, bool flipped) {
  require_finite_table(model, table);
  const auto& qt = model.finite_kernel().in_network_transposed();
  Eigen::VectorXd x = p.in_network();
  const auto w = table.column(l);
  for (int u = 0; u <= u_max; ++u) {
    const Eigen::VectorXd next = qt * x;
    const double energy = model.energy_price * next.sum();
    if (fcr_wakes(x.dot(w), energy, flipped)) return u;
    x = next;
    if (!(x.sum() > 0.0)) break;
  }
  return kNeverWake;
}

FcrValue fcr_value(const NetworkModel& model, const TDeltaTable& table, const DenseBelief& p,
                   int l, int horizon_cap) {
  require_finite_table(model, table);
  const auto& qt = model.finite_kernel().in_network_transposed();
  const auto w = table.column(l);
  const double c = model.energy_price;
  Eigen::VectorXd x = p.in_network();
  FcrValue out;
  int j = 0;
  for (; j < horizon_cap && x.sum() >= 1e-12; ++j) {
    const Eigen::VectorXd next = qt * x;
    out.value += std::min(x.dot(w), c * next.sum());
    x = next;
  }
  const double left = x.sum();
  if (left > 0.0) {
    double tail = std::numeric_limits<double>::infinity();
    try {
      tail = std::min(w.maxCoeff(), c) * x.dot(absorption_times(model.finite_kernel()));
    } catch (const ModelError&) {
    }
    out.residual_bound = tail;
    out.truncated = j >= horizon_cap && left > 1e-6;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::AllAwake: return "all-awake";
    case PolicyKind::AllAsleep: return "all-asleep";
    case PolicyKind::Qmdp: return "qmdp";
    case PolicyKind::Fcr: return "fcr";
  }
  return "unknown";
}

SleepPolicy make_all_awake() { return SleepPolicy{}; }

SleepPolicy make_all_asleep() {
  SleepPolicy p;
  p.kind = PolicyKind::AllAsleep;
  return p;
}

SleepPolicy make_fcr(const TDeltaTable& table, int u_max, bool flipped) {
  SleepPolicy p;
  p.kind = PolicyKind::Fcr;
  p.table = &table;
  p.u_max = u_max;
  p.flipped_fcr = flipped;
  return p;
}

SleepPolicy make_qmdp(const NetworkModel& model, const TDeltaTable& table, int u_max,
                      const SolveOptions& options) {
  SleepPolicy p;
  p.kind = PolicyKind::Qmdp;
  p.table = &table;
  p.u_max = u_max;
  p.qmdp = qmdp_solve_all(model, table, u_max, options);
  p.fundamental = fundamental_matrix(model.finite_kernel());
  return p;
}

void resolve_qmdp(SleepPolicy& policy, const NetworkModel& model) {
  if (policy.kind != PolicyKind::Qmdp) return;
  SolveOptions options;
  options.warm_start = &policy.qmdp;
  policy.qmdp = qmdp_solve_all(model, *policy.table, policy.u_max, options);
}

namespace {

std::vector<int> fcr_particles(const NetworkModel& model, const SleepPolicy& policy,
                               const ParticleBelief& p, const std::vector<int>& awake, Rng& rng) {
  std::vector<int> choice(awake.size(), kNeverWake);
  const int count = p.size();
  const int stride = std::max(1, (count + policy.lookahead_particles - 1) /
                                     std::max(1, policy.lookahead_particles));
  std::vector<double> pos, wt;
  for (int i = 0; i < count; i += stride) {
    if (!(p.weights[i] > 0.0)) continue;
    pos.push_back(p.positions[i]);
    wt.push_back(p.weights[i]);
  }
  double total = 0.0;
  for (double x : wt) total += x;
  if (!(total > 0.0)) return choice;
  for (double& x : wt) x *= p.in_network_mass() / total;

  const auto& walk = model.walk();
  const auto& table = *policy.table;
  std::vector<std::size_t> pending(awake.size());
  for (std::size_t s = 0; s < awake.size(); ++s) pending[s] = s;
  std::vector<double> tracking(awake.size());
  for (int u = 0; u <= policy.u_max && !pending.empty(); ++u) {
    for (std::size_t s : pending) {
      double a = 0.0;
      for (std::size_t i = 0; i < pos.size(); ++i)
        if (wt[i] > 0.0) a += wt[i] * table.eval_at(pos[i], awake[s]);
      tracking[s] = a;
    }
    double survive = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
      if (!(wt[i] > 0.0)) continue;
      const auto y = walk.sample(pos[i], rng);
      if (y) {
        pos[i] = *y;
        survive += wt[i];
      } else {
        wt[i] = 0.0;
      }
    }
    std::erase_if(pending, [&](std::size_t s) {
      if (!fcr_wakes(tracking[s], model.energy_price * survive, policy.flipped_fcr)) return false;
      choice[s] = u;
      return true;
    });
    if (!(survive > 0.0)) break;
  }
  return choice;
}

}  // namespace

std::vector<int> act(const NetworkModel& model, const SleepPolicy& policy, const Belief& p,
                     const SleepState& r, Rng& rng) {
  const int n = model.num_sensors();
  if (r.size() != n) throw InvalidArgument("sleep state dimension mismatch");
  std::vector<int> u(n, 0);
  std::vector<int> awake;
  for (int l = 0; l < n; ++l)
    if (r.awake(l)) awake.push_back(l);
  if (awake.empty()) return u;

  switch (policy.kind) {
    case PolicyKind::AllAwake: return u;
    case PolicyKind::AllAsleep:
      for (int l : awake) u[l] = kNeverWake;
      return u;
    case PolicyKind::Fcr: {
      if (!policy.table) throw InvalidArgument("FCR policy needs a table");
      if (const auto* particles = std::get_if<ParticleBelief>(&p)) {
        const auto choice = fcr_particles(model, policy, *particles, awake, rng);
        for (std::size_t s = 0; s < awake.size(); ++s) u[awake[s]] = choice[s];
        return u;
      }
      const auto& dense = std::get<DenseBelief>(p);
      const auto& qt = model.finite_kernel().in_network_transposed();
      const auto& table = *policy.table;
      Eigen::VectorXd x = dense.in_network();
      std::vector<int> pending = awake;
      for (int l : awake) u[l] = kNeverWake;
      for (int step = 0; step <= policy.u_max && !pending.empty(); ++step) {
        const Eigen::VectorXd next = qt * x;
        const double energy = model.energy_price * next.sum();
        std::erase_if(pending, [&](int l) {
          if (!fcr_wakes(x.dot(table.column(l)), energy, policy.flipped_fcr)) return false;
          u[l] = step;
          return true;
        });
        x = next;
        if (!(x.sum() > 0.0)) break;
      }
      return u;
    }
    case PolicyKind::Qmdp: {
      if (!policy.table || static_cast<int>(policy.qmdp.size()) != n)
        throw InvalidArgument("Q_MDP policy is not solved");
      const auto* dense = std::get_if<DenseBelief>(&p);
      if (!dense) throw InvalidArgument("Q_MDP needs a finite state space");
      const int m = model.space.size();
      const auto k = static_cast<Eigen::Index>(awake.size());
      Eigen::MatrixXd asleep(m, k), wake(m, k);
      for (Eigen::Index s = 0; s < k; ++s) {
        asleep.col(s) = policy.table->column(awake[s]);
        wake.col(s) = (policy.qmdp[awake[s]].value.array() + model.energy_price).matrix();
      }
      const Eigen::VectorXd x = dense->in_network();
      const Eigen::VectorXd never = (policy.fundamental * asleep).transpose() * x;
      const auto choice = scan_minimand(model.finite_kernel(), x, asleep, wake, never, policy.u_max);
      for (Eigen::Index s = 0; s < k; ++s) u[awake[s]] = choice[s];
      return u;
    }
  }
  return u;
}

}  // namespace sleeptrack
