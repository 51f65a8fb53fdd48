#include "sleeptrack/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "sleeptrack/errors.hpp"

namespace sleeptrack {

namespace {

constexpr std::uint64_t kRecordedStream = 0;
constexpr std::uint64_t kWarmupStream = 2;
constexpr std::uint64_t kLearningStream = 3;

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() < 2) {
    out.se = std::numeric_limits<double>::infinity();
    return out;
  }
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Runs `count` independent jobs on up to `workers` threads.
template <class Job>
void parallel_for(int count, int workers, Job job) {
  workers = std::clamp(workers, 1, std::max(1, count));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex guard;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < count; i += workers) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(guard);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

EpisodeResult run_episode(const NetworkModel& model, const SleepPolicy& policy, Rng& rng,
                          const EpisodeOptions& options, const LearningHook* learn) {
  const bool finite = model.is_finite();
  if (!finite && options.particles < 2)
    throw InvalidArgument("particle filter needs at least two particles");
  if (learn && !finite) throw InvalidArgument("learning needs a finite state space");
  const int m = finite ? model.space.size() : 0;
  ObjectState b = model.start;
  Belief p = finite ? Belief{DenseBelief::point(m, b.index)}
                    : Belief{ParticleBelief::point(b.position, options.particles)};
  SleepState r = SleepState::all_awake(model.num_sensors());
  EpisodeResult out;

  for (long k = 1;; ++k) {
    if (k > options.max_steps)
      throw RunawayEpisode("object still in the network after " +
                           std::to_string(options.max_steps) + " steps");
    const std::vector<int> u = act(model, policy, p, r, rng);
    b = model.sample_next(b, rng);
    r = residual_step(r, u);
    const Observation s = observe(model, b, r, rng);
    if (finite) {
      DenseBelief next = belief_update(std::get<DenseBelief>(p), model, s, r);
      if (learn) (*learn)(std::get<DenseBelief>(p), next, s, r);
      p = std::move(next);
    } else if (!b.terminal) {
      auto upd = particle_update(std::get<ParticleBelief>(p), model, s, r, rng);
      out.degenerate_steps += upd.degenerate ? 1 : 0;
      p = std::move(upd.belief);
    }
    if (b.terminal) {
      out.duration = static_cast<int>(k);
      if (options.trace) out.trace.push_back({static_cast<int>(k), true, 0.0, 0.0, 0, 0.0});
      return out;
    }
    const double est = estimate(p, model);
    const double tracking = model.distance(b, est);
    const double energy = model.energy_price * r.awake_count();
    out.tracking += tracking;
    out.energy += energy;
    if (options.trace)
      out.trace.push_back(
          {static_cast<int>(k), false, b.position, est, r.awake_count(), tracking + energy});
  }
}

Lifetime expected_lifetime(const NetworkModel& model, int runs, std::uint64_t seed) {
  if (model.is_finite()) {
    const Eigen::VectorXd t = absorption_times(model.finite_kernel());
    return {t[model.start.index], 0.0, true};
  }
  if (runs < 2) throw InvalidArgument("need at least two Monte-Carlo runs");
  std::vector<double> durations(runs);
  for (int i = 0; i < runs; ++i) {
    Rng rng = make_stream(seed, static_cast<std::uint64_t>(i), 7);
    ObjectState b = model.start;
    long k = 0;
    while (!b.terminal) {
      if (++k > kMaxEpisodeSteps) throw RunawayEpisode("lifetime walk did not exit");
      b = model.sample_next(b, rng);
    }
    durations[i] = static_cast<double>(k);
  }
  const auto ms = mean_se(durations);
  return {ms.mean, ms.se, false};
}

TradeoffPoint summarize(const std::vector<EpisodeResult>& episodes, double lifetime) {
  if (episodes.empty()) throw InvalidArgument("no episodes to summarize");
  if (!(lifetime > 0.0)) throw InvalidArgument("lifetime must be positive");
  std::vector<double> tr, en, tot, dur;
  for (const auto& e : episodes) {
    tr.push_back(e.tracking / lifetime);
    en.push_back(e.energy / lifetime);
    tot.push_back(e.total() / lifetime);
    dur.push_back(e.duration);
  }
  TradeoffPoint p;
  const auto t = mean_se(tr), e = mean_se(en), a = mean_se(tot), d = mean_se(dur);
  p.tracking_per_time = t.mean;
  p.tracking_se = t.se;
  p.energy_per_time = e.mean;
  p.energy_se = e.se;
  p.total_se = a.se;
  p.mean_duration = d.mean;
  p.duration_se = d.se;
  p.runs = static_cast<int>(episodes.size());
  return p;
}

Rng episode_stream(std::uint64_t seed, std::uint64_t run) {
  return make_stream(seed, run, kRecordedStream);
}

CampaignResult run_learning_campaign(const NetworkModel& model, PolicyKind kind,
                                     TDeltaTable initial, const LearningSchedule& schedule,
                                     const CampaignOptions& options) {
  if (kind != PolicyKind::Qmdp && kind != PolicyKind::Fcr)
    throw InvalidArgument("learning campaigns drive Q_MDP or FCR policies");
  if (schedule.warmup < 0 || schedule.recorded < 0 || schedule.cadence < 1 ||
      !(schedule.alpha >= 0.0))
    throw InvalidArgument("invalid learning schedule");
  if (!(options.lifetime > 0.0) || options.u_max < 0)
    throw InvalidArgument("campaign needs a lifetime and a sleep cap");
  CampaignResult out{std::move(initial), {}, {}};
  TDeltaTable& table = out.table;
  SleepPolicy policy =
      kind == PolicyKind::Qmdp ? make_qmdp(model, table, options.u_max) : make_fcr(table, options.u_max);

  const int total = schedule.warmup + schedule.recorded;
  for (int e = 0; e < total; ++e) {
    if (kind == PolicyKind::Qmdp && e > 0 && e % schedule.cadence == 0) resolve_qmdp(policy, model);
    const bool recorded = e >= schedule.warmup;
    Rng rng = recorded
                  ? episode_stream(options.seed, static_cast<std::uint64_t>(e - schedule.warmup))
                  : make_stream(options.seed, static_cast<std::uint64_t>(e), kWarmupStream);
    Rng learn_rng = make_stream(options.seed, static_cast<std::uint64_t>(e), kLearningStream);
    const LearningHook hook = [&](const DenseBelief& prev, const DenseBelief& now,
                                  const Observation& s, const SleepState& r) {
      learn_step(table, prev, now, s, r, model, schedule.alpha, learn_rng);
    };
    EpisodeResult result = run_episode(model, policy, rng, {}, &hook);
    if (recorded) out.episodes.push_back(std::move(result));
  }
  table.set_provenance(TDeltaSource::Learned);
  if (out.episodes.empty()) return out;
  out.point = summarize(out.episodes, options.lifetime);
  out.point.network = model.name;
  out.point.policy = to_string(kind) + "-learning";
  out.point.tdelta_source = to_string(TDeltaSource::Learned);
  out.point.c = model.energy_price;
  out.point.seed = options.seed;
  return out;
}

PolicySpec PolicySpec::parse(std::string_view text) {
  if (text == "all-awake") return {PolicyKind::AllAwake, TDeltaSource::Asleep};
  if (text == "all-asleep") return {PolicyKind::AllAsleep, TDeltaSource::Asleep};
  const auto dash = text.find('-');
  if (dash != std::string_view::npos) {
    const auto head = text.substr(0, dash);
    const auto tail = text.substr(dash + 1);
    PolicyKind kind;
    if (head == "qmdp") {
      kind = PolicyKind::Qmdp;
    } else if (head == "fcr") {
      kind = PolicyKind::Fcr;
    } else {
      throw ConfigError("unknown policy '" + std::string(text) + "'");
    }
    return {kind, parse_tdelta_source(tail)};
  }
  throw ConfigError("unknown policy '" + std::string(text) + "'");
}

std::string PolicySpec::name() const {
  if (!uses_table()) return to_string(kind);
  const std::string src = source == TDeltaSource::Learned ? "learning" : to_string(source);
  return to_string(kind) + "-" + src;
}

std::vector<TradeoffPoint> sweep(const NetworkModel& model, const SweepConfig& config) {
  if (config.policies.empty()) throw InvalidArgument("no policies to sweep");
  if (config.c_grid.empty()) throw InvalidArgument("empty c grid");
  if (config.runs < 1) throw InvalidArgument("runs per point must be positive");
  for (double c : config.c_grid)
    if (!(c > 0.0)) throw InvalidArgument("energy prices must be positive");

  const Lifetime life = expected_lifetime(model, config.lifetime_runs, config.seed);
  const int u_max = config.u_max > 0 ? config.u_max : default_u_max(life.mean);
  EpisodeOptions episode;
  episode.particles = config.particles;

  std::map<std::pair<int, std::size_t>, TDeltaTable> tables;  // (source, c index)
  auto table_for = [&](TDeltaSource source, std::size_t ci,
                       const NetworkModel& priced) -> const TDeltaTable& {
    if (source == TDeltaSource::File) {
      if (!config.file_table) throw ConfigError("policy needs a table file");
      return *config.file_table;
    }
    const TDeltaSource base = source == TDeltaSource::Learned ? TDeltaSource::Greedy : source;
    const std::size_t key_c = base == TDeltaSource::Asleep ? 0 : ci;
    const auto key = std::make_pair(static_cast<int>(base), key_c);
    auto it = tables.find(key);
    if (it == tables.end())
      it = tables
               .emplace(key, build_tdelta_table(priced, base, config.mc_samples,
                                                config.seed + 1000003ULL * (key_c + 1)))
               .first;
    return it->second;
  };

  std::vector<TradeoffPoint> out;
  for (const auto& spec : config.policies) {
    for (std::size_t ci = 0; ci < config.c_grid.size(); ++ci) {
      const NetworkModel priced = model.with_energy_price(config.c_grid[ci]);
      TradeoffPoint point;
      if (spec.uses_table() && spec.source == TDeltaSource::Learned) {
        CampaignOptions copt{u_max, life.mean, config.seed};
        point = run_learning_campaign(priced, spec.kind, table_for(spec.source, ci, priced),
                                      config.schedule, copt)
                    .point;
      } else {
        SleepPolicy policy;
        switch (spec.kind) {
          case PolicyKind::AllAwake: policy = make_all_awake(); break;
          case PolicyKind::AllAsleep: policy = make_all_asleep(); break;
          case PolicyKind::Fcr:
            policy = make_fcr(table_for(spec.source, ci, priced), u_max);
            break;
          case PolicyKind::Qmdp:
            policy = make_qmdp(priced, table_for(spec.source, ci, priced), u_max);
            break;
        }
        policy.lookahead_particles = config.lookahead_particles;
        std::vector<EpisodeResult> results(config.runs);
        parallel_for(config.runs, config.workers, [&](int run) {
          Rng rng = episode_stream(config.seed, static_cast<std::uint64_t>(run));
          results[run] = run_episode(priced, policy, rng, episode);
        });
        point = summarize(results, life.mean);
      }
      point.network = model.name;
      point.policy = spec.name();
      point.tdelta_source = spec.uses_table() ? to_string(spec.source) : "none";
      point.c = config.c_grid[ci];
      point.seed = config.seed;
      out.push_back(std::move(point));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const std::vector<TradeoffPoint>& points) {
  out << kCsvHeader << '\n';
  for (const auto& p : points)
    out << p.network << ',' << p.policy << ',' << p.tdelta_source << ',' << format_double(p.c)
        << ',' << format_double(p.tracking_per_time) << ',' << format_double(p.tracking_se) << ','
        << format_double(p.energy_per_time) << ',' << format_double(p.energy_se) << ',' << p.runs
        << ',' << p.seed << '\n';
  if (!out) throw IoError("failed to write CSV");
}

std::vector<TradeoffPoint> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw IoError("unexpected CSV header");
  std::vector<TradeoffPoint> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw IoError("CSV row has " + std::to_string(f.size()) + " fields");
    TradeoffPoint p;
    try {
      p.network = f[0];
      p.policy = f[1];
      p.tdelta_source = f[2];
      p.c = std::stod(f[3]);
      p.tracking_per_time = std::stod(f[4]);
      p.tracking_se = std::stod(f[5]);
      p.energy_per_time = std::stod(f[6]);
      p.energy_se = std::stod(f[7]);
      p.runs = std::stoi(f[8]);
      p.seed = std::stoull(f[9]);
    } catch (const std::exception&) {
      throw IoError("malformed CSV row: " + line);
    }
    p.total_se = std::hypot(p.tracking_se, p.energy_se);
    out.push_back(std::move(p));
  }
  return out;
}

void write_trace(std::ostream& out, const EpisodeResult& result) {
  out << "step,b,b_hat,awake,g\n";
  for (const auto& t : result.trace) {
    if (t.exited) {
      out << t.step << ",T,,0,0\n";
      continue;
    }
    out << t.step << ',' << format_double(t.position) << ',' << format_double(t.estimate) << ','
        << t.awake << ',' << format_double(t.cost) << '\n';
  }
  if (!out) throw IoError("failed to write trace");
}

}  // namespace sleeptrack
