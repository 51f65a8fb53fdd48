// Command-line driver: build T-delta tables, run tradeoff sweeps, replay
// single episodes and report network lifetimes.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sleeptrack/errors.hpp"
#include "sleeptrack/io.hpp"
#include "sleeptrack/lowerbound.hpp"
#include "sleeptrack/sim.hpp"

using namespace sleeptrack;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kUsage = 2, kConfig = 3, kConvergence = 4, kIo = 5 };

struct Common {
  std::string network;
  std::string config;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string out;
};

void add_common(CLI::App* cmd, Common& opt) {
  cmd->add_option("--network", opt.network, "builtin network: A, B or C");
  cmd->add_option("--config", opt.config, "JSON network config file");
  cmd->add_option("--seed", opt.seed, "base seed (env SLEEPTRACK_SEED when omitted)")
      ->each([&](const std::string&) { opt.seed_given = true; });
  cmd->add_option("--out", opt.out, "output path");
}

std::uint64_t resolve_seed(const Common& opt) {
  if (opt.seed_given) return opt.seed;
  if (const char* env = std::getenv("SLEEPTRACK_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("SLEEPTRACK_SEED is not an unsigned integer");
    }
  }
  return opt.seed;
}

NetworkConfig resolve_network(const Common& opt) {
  if (!opt.network.empty() && !opt.config.empty())
    throw CLI::ValidationError("--network and --config are mutually exclusive");
  if (!opt.config.empty()) return load_network_config(opt.config);
  if (opt.network.empty()) throw CLI::ValidationError("one of --network or --config is required");
  return NetworkConfig{make_network(opt.network), {}};
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      grid.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw CLI::ValidationError("bad c-grid entry '" + cell + "'");
    }
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0)) throw CLI::ValidationError("c-grid entries must be positive");
    if (i > 0 && !(grid[i] > grid[i - 1]))
      throw CLI::ValidationError("c-grid must be strictly increasing");
  }
  return grid;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

int u_max_for(const NetworkModel& model, int requested, std::uint64_t seed) {
  if (requested > 0) return requested;
  return default_u_max(expected_lifetime(model, kLifetimeRuns, seed).mean);
}

void write_plot_script(const std::string& path, const std::string& csv) {
  auto out = open_out(path);
  out << "# gnuplot script: tradeoff curves (energy vs tracking per unit time)\n"
      << "set datafile separator ','\n"
      << "set xlabel 'energy cost per unit time'\n"
      << "set ylabel 'tracking cost per unit time'\n"
      << "set key outside\n"
      << "policies = system(\"tail -n +2 '" << csv << "' | cut -d, -f2 | sort -u | tr '\\n' ' '\")\n"
      << "plot for [p in policies] '" << csv
      << "' using ((strcol(2) eq p) ? $7 : 1/0):5 with linespoints title p\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sensor sleep scheduling for object tracking"};
  app.require_subcommand(1);

  Common tables_opt;
  std::string source = "greedy", learn_policy = "qmdp";
  double tables_c = 0.1;
  int samples = kDefaultMonteCarloSamples, tables_umax = 0;
  bool with_qmdp = false;
  SolveOptions solve;
  LearningSchedule schedule;
  auto* tables = app.add_subcommand("tables", "compute a T-delta table");
  add_common(tables, tables_opt);
  tables->add_option("--source", source, "asleep, greedy or learned");
  tables->add_option("--c", tables_c, "energy price");
  tables->add_option("--samples", samples, "Monte-Carlo samples per row");
  tables->add_option("--policy", learn_policy, "policy driving a learning campaign: qmdp or fcr");
  tables->add_option("--warmup", schedule.warmup);
  tables->add_option("--recorded", schedule.recorded);
  tables->add_option("--cadence", schedule.cadence);
  tables->add_option("--alpha", schedule.alpha);
  tables->add_option("--u-max", tables_umax);
  tables->add_flag("--solve-qmdp", with_qmdp, "store solved Q_MDP values with the table");
  tables->add_option("--max-iterations", solve.max_iterations, "policy-iteration cap for --solve-qmdp")
      ->check(CLI::PositiveNumber);

  Common sweep_opt;
  std::vector<std::string> policies;
  std::string tdelta = "greedy", c_grid, plot_script;
  int runs = 0, particles = kDefaultParticles, sweep_umax = 0, lookahead = 128;
  int workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool lower_bound = false;
  EnvelopeConfig envelope;
  auto* sweep_cmd = app.add_subcommand("sweep", "tradeoff curves over a grid of energy prices");
  add_common(sweep_cmd, sweep_opt);
  sweep_cmd->add_option("--policy", policies, "policies, e.g. qmdp-greedy fcr-learning all-awake")
      ->delimiter(',');
  sweep_cmd->add_option("--tdelta", tdelta,
                        "source for bare qmdp/fcr names: asleep, greedy, learned, or a table file");
  sweep_cmd->add_option("--c-grid", c_grid, "comma-separated increasing energy prices");
  sweep_cmd->add_option("--runs", runs, "episodes per point (default 50, 200 on continuous)");
  sweep_cmd->add_option("--particles", particles, "particles for continuous networks");
  sweep_cmd->add_option("--samples", samples, "Monte-Carlo samples per table row");
  sweep_cmd->add_option("--workers", workers, "parallel episode workers");
  sweep_cmd->add_option("--u-max", sweep_umax);
  sweep_cmd->add_option("--lookahead", lookahead, "particles used by the FCR lookahead");
  sweep_cmd->add_option("--warmup", schedule.warmup);
  sweep_cmd->add_option("--recorded", schedule.recorded);
  sweep_cmd->add_option("--cadence", schedule.cadence);
  sweep_cmd->add_option("--alpha", schedule.alpha);
  sweep_cmd->add_flag("--lower-bound", lower_bound, "append lower-bound rows");
  sweep_cmd->add_option("--restarts", envelope.restarts);
  sweep_cmd->add_option("--ascent-steps", envelope.steps);
  sweep_cmd->add_option("--plot-script", plot_script, "write a gnuplot script for the CSV");

  Common replay_opt;
  std::string replay_policy = "all-awake", replay_table;
  double replay_c = 0.1;
  int replay_umax = 0;
  auto* replay = app.add_subcommand("replay", "single deterministic episode with a full trace");
  add_common(replay, replay_opt);
  replay->add_option("--policy", replay_policy);
  replay->add_option("--c", replay_c);
  replay->add_option("--tdelta", replay_table, "table file for *-file policies");
  replay->add_option("--particles", particles);
  replay->add_option("--samples", samples);
  replay->add_option("--u-max", replay_umax);

  Common life_opt;
  int life_runs = kLifetimeRuns;
  auto* lifetime = app.add_subcommand("lifetime", "expected time the object spends in the network");
  add_common(lifetime, life_opt);
  lifetime->add_option("--runs", life_runs, "Monte-Carlo walks for continuous networks");

  try {
    app.parse(argc, argv);

    if (*tables) {
      if (tables_opt.out.empty()) throw CLI::RequiredError("--out");
      const auto cfg = resolve_network(tables_opt);
      const std::uint64_t seed = resolve_seed(tables_opt);
      const NetworkModel model = cfg.model.with_energy_price(tables_c);
      const TDeltaSource src = parse_tdelta_source(source);
      StoredTable stored{TDeltaTable::zeros(model, src), model.name, tables_c, {}};
      if (src == TDeltaSource::Learned) {
        const Lifetime life = expected_lifetime(model, kLifetimeRuns, seed);
        const int u_max = u_max_for(model, tables_umax, seed);
        const PolicyKind kind = PolicySpec::parse(learn_policy + "-learning").kind;
        auto initial = build_tdelta_table(model, TDeltaSource::Greedy, samples, seed);
        auto campaign =
            run_learning_campaign(model, kind, std::move(initial), schedule, {u_max, life.mean, seed});
        stored.table = std::move(campaign.table);
      } else if (src == TDeltaSource::File) {
        throw CLI::ValidationError("--source must be asleep, greedy or learned");
      } else {
        stored.table = build_tdelta_table(model, src, samples, seed);
      }
      if (with_qmdp)
        stored.qmdp = qmdp_solve_all(model, stored.table, u_max_for(model, tables_umax, seed), solve);
      save_table(tables_opt.out, stored);
      std::cerr << "wrote " << stored.table.rows() << "x" << stored.table.sensors() << " table to "
                << tables_opt.out << '\n';
    } else if (*sweep_cmd) {
      if (sweep_opt.out.empty()) throw CLI::RequiredError("--out");
      const auto cfg = resolve_network(sweep_opt);
      const NetworkModel& model = cfg.model;
      SweepConfig sc;
      sc.seed = sweep_opt.seed_given ? sweep_opt.seed
                                     : cfg.experiment.seed.value_or(resolve_seed(sweep_opt));
      if (policies.empty()) policies = cfg.experiment.policies;
      if (policies.empty()) throw CLI::ValidationError("--policy needs at least one policy");
      std::optional<StoredTable> file_table;
      TDeltaSource bare = TDeltaSource::Greedy;
      try {
        bare = parse_tdelta_source(tdelta);
      } catch (const ConfigError&) {
        file_table = load_table(tdelta);
        bare = TDeltaSource::File;
        sc.file_table = &file_table->table;
      }
      for (const auto& name : policies) {
        if (name == "qmdp" || name == "fcr") {
          PolicySpec spec{name == "qmdp" ? PolicyKind::Qmdp : PolicyKind::Fcr, bare};
          sc.policies.push_back(spec);
        } else {
          sc.policies.push_back(PolicySpec::parse(name));
        }
      }
      sc.c_grid = c_grid.empty() ? cfg.experiment.c_grid : parse_grid(c_grid);
      if (sc.c_grid.empty()) throw CLI::ValidationError("--c-grid is required");
      sc.runs = runs > 0 ? runs : cfg.experiment.runs.value_or(model.is_finite() ? 50 : 200);
      sc.particles = particles;
      if (!model.is_finite() && particles < 2)
        throw CLI::ValidationError("--particles must be at least 2");
      sc.mc_samples = samples;
      sc.schedule = schedule;
      sc.u_max = sweep_umax;
      sc.workers = workers;
      sc.lookahead_particles = lookahead;
      auto points = sweep(model, sc);
      if (lower_bound) {
        envelope.seed = sc.seed;
        envelope.u_max = sweep_umax;
        for (const auto& e : lb_envelope(model, sc.c_grid, envelope)) {
          TradeoffPoint p;
          p.network = model.name;
          p.policy = "lower_bound";
          p.tdelta_source = "none";
          p.c = e.c;
          p.tracking_per_time = e.tracking / e.lifetime;
          p.energy_per_time = e.energy / e.lifetime;
          p.runs = e.evaluations;
          p.seed = sc.seed;
          points.push_back(p);
        }
      }
      auto out = open_out(sweep_opt.out);
      write_csv(out, points);
      if (!plot_script.empty()) write_plot_script(plot_script, sweep_opt.out);
      std::cerr << "wrote " << points.size() << " rows to " << sweep_opt.out << '\n';
    } else if (*replay) {
      const auto cfg = resolve_network(replay_opt);
      const std::uint64_t seed = resolve_seed(replay_opt);
      const NetworkModel model = cfg.model.with_energy_price(replay_c);
      const PolicySpec spec = PolicySpec::parse(replay_policy);
      const int u_max = u_max_for(model, replay_umax, seed);
      std::optional<TDeltaTable> table;
      if (spec.uses_table()) {
        if (spec.source == TDeltaSource::File) {
          if (replay_table.empty()) throw CLI::RequiredError("--tdelta");
          table = load_table(replay_table).table;
        } else {
          const auto base = spec.source == TDeltaSource::Learned ? TDeltaSource::Greedy : spec.source;
          table = build_tdelta_table(model, base, samples, seed);
        }
      }
      SleepPolicy policy;
      switch (spec.kind) {
        case PolicyKind::AllAwake: policy = make_all_awake(); break;
        case PolicyKind::AllAsleep: policy = make_all_asleep(); break;
        case PolicyKind::Fcr: policy = make_fcr(*table, u_max); break;
        case PolicyKind::Qmdp: policy = make_qmdp(model, *table, u_max); break;
      }
      Rng rng = episode_stream(seed, 0);
      EpisodeOptions eo;
      eo.trace = true;
      eo.particles = particles;
      const EpisodeResult result = run_episode(model, policy, rng, eo);
      if (replay_opt.out.empty()) {
        write_trace(std::cout, result);
      } else {
        auto out = open_out(replay_opt.out);
        write_trace(out, result);
      }
      std::cerr << "duration " << result.duration << " tracking " << result.tracking << " energy "
                << result.energy << '\n';
    } else if (*lifetime) {
      const auto cfg = resolve_network(life_opt);
      const Lifetime life = expected_lifetime(cfg.model, life_runs, resolve_seed(life_opt));
      std::cout << cfg.model.name << ' ' << life.mean;
      if (!life.exact) std::cout << " +- " << life.se;
      std::cout << '\n';
    }
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ModelError& e) {
    std::cerr << "model error: " << e.what() << '\n';
    return kConfig;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kConvergence;
  } catch (const IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
