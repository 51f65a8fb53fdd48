#include "sleeptrack/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sleeptrack/errors.hpp"

namespace sleeptrack {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(std::string("missing field '") + key + "'");
  return j.at(key);
}

StateSpace parse_space(const json& j) {
  const auto kind = require(j, "kind").get<std::string>();
  if (kind == "integers")
    return StateSpace::integers(require(j, "first").get<int>(), require(j, "size").get<int>());
  if (kind == "finite") return StateSpace::finite(require(j, "coordinates").get<std::vector<double>>());
  if (kind == "continuous")
    return StateSpace::continuous(require(j, "lo").get<double>(), require(j, "hi").get<double>());
  throw ConfigError("unknown space kind '" + kind + "'");
}

MotionKernel parse_motion(const json& j, const StateSpace& space) {
  const auto kind = require(j, "kind").get<std::string>();
  if (kind == "gaussian") {
    if (space.is_finite()) throw ConfigError("gaussian motion needs a continuous space");
    return GaussianWalk{require(j, "variance").get<double>(), space.lo(), space.hi()};
  }
  if (!space.is_finite()) throw ConfigError("continuous spaces need gaussian motion");
  if (kind == "steps") {
    std::map<int, double> steps;
    const auto& s = require(j, "steps");
    if (s.is_object()) {
      for (const auto& [key, value] : s.items()) steps[std::stoi(key)] = value.get<double>();
    } else {
      for (const auto& pair : s) steps[pair.at(0).get<int>()] = pair.at(1).get<double>();
    }
    return FiniteKernel::from_steps(space.size(), steps);
  }
  if (kind == "matrix") {
    const auto rows = require(j, "rows").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw ConfigError("empty transition matrix");
    Eigen::MatrixXd mat(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != rows.front().size()) throw ConfigError("ragged transition matrix");
      for (std::size_t c = 0; c < rows[r].size(); ++c) mat(r, c) = rows[r][c];
    }
    if (mat.cols() != space.size() + 1)
      throw ConfigError("transition matrix needs m+1 columns (terminal last)");
    return FiniteKernel(mat);
  }
  throw ConfigError("unknown motion kind '" + kind + "'");
}

Sensor parse_sensor(const json& j) {
  const double location = require(j, "location").get<double>();
  const auto kind = j.value("kind", std::string("gaussian"));
  if (kind == "binary") return Sensor::binary(location);
  if (kind == "gaussian") return Sensor::gaussian(location, j.value("variance", 1.0), j.value("peak", 10.0));
  throw ConfigError("unknown sensor kind '" + kind + "'");
}

DistanceMeasure parse_distance(const json& j, const StateSpace& space) {
  const auto kind = require(j, "kind").get<std::string>();
  if (kind == "hamming") return DistanceMeasure::hamming();
  if (kind == "squared-euclidean") {
    const double span = space.hi() - space.lo();
    return DistanceMeasure::squared_euclidean(j.value("bound", span * span));
  }
  throw ConfigError("unknown distance kind '" + kind + "'");
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sleep_token(int u) { return u == kNeverWake ? "never" : std::to_string(u); }

}  // namespace

NetworkConfig parse_network_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    NetworkConfig cfg;
    auto& net = cfg.model;
    net.name = j.value("name", std::string("custom"));
    net.space = parse_space(require(j, "space"));
    net.motion = parse_motion(require(j, "motion"), net.space);
    for (const auto& s : require(j, "sensors")) net.sensors.push_back(parse_sensor(s));
    net.distance = j.contains("distance") ? parse_distance(j.at("distance"), net.space)
                                          : DistanceMeasure::hamming();
    net.energy_price = j.value("energy_price", 0.1);
    const double start = require(j, "start").get<double>();
    if (net.space.is_finite()) {
      const int idx = net.space.index_of(start);
      if (idx < 0) throw ConfigError("start is not a network location");
      net.start = net.space.state(idx);
    } else {
      net.start = ObjectState::at(start);
    }
    net.validate();
    if (j.contains("experiment")) {
      const auto& e = j.at("experiment");
      cfg.experiment.c_grid = e.value("c_grid", std::vector<double>{});
      cfg.experiment.policies = e.value("policies", std::vector<std::string>{});
      if (e.contains("runs")) cfg.experiment.runs = e.at("runs").get<int>();
      if (e.contains("seed")) cfg.experiment.seed = e.at("seed").get<std::uint64_t>();
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad network config: ") + e.what());
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
}

NetworkConfig load_network_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network_config(ss.str());
}

// ---------------------------------------------------------------------------
// Flat text container:
//   sleeptrack-table 1
//   provenance <asleep|greedy|learned|file>
//   network <name>
//   energy_price <c>
//   interpolated <0|1>
//   anchors <k> <a_1> ... <a_k>
//   tdelta <rows> <cols>          followed by one line per row
//   [qmdp_value <rows> <cols>]    optional, same layout
//   [qmdp_sleep <rows> <cols>]    optional, integers or "never"

void write_table(std::ostream& out, const StoredTable& stored) {
  const auto& t = stored.table;
  out << "sleeptrack-table 1\n";
  out << "provenance " << to_string(t.provenance()) << '\n';
  out << "network " << (stored.network.empty() ? "custom" : stored.network) << '\n';
  out << "energy_price " << format_double(stored.energy_price) << '\n';
  out << "interpolated " << (t.interpolated() ? 1 : 0) << '\n';
  out << "anchors " << t.anchors().size();
  for (double a : t.anchors()) out << ' ' << format_double(a);
  out << '\n';
  out << "tdelta " << t.rows() << ' ' << t.sensors() << '\n';
  for (int r = 0; r < t.rows(); ++r) {
    for (int l = 0; l < t.sensors(); ++l) out << (l ? " " : "") << format_double(t.at(r, l));
    out << '\n';
  }
  if (stored.qmdp) {
    const auto& q = *stored.qmdp;
    out << "qmdp_value " << t.rows() << ' ' << q.size() << '\n';
    for (int r = 0; r < t.rows(); ++r) {
      for (std::size_t l = 0; l < q.size(); ++l) out << (l ? " " : "") << format_double(q[l].value[r]);
      out << '\n';
    }
    out << "qmdp_sleep " << t.rows() << ' ' << q.size() << '\n';
    for (int r = 0; r < t.rows(); ++r) {
      for (std::size_t l = 0; l < q.size(); ++l) out << (l ? " " : "") << sleep_token(q[l].sleep[r]);
      out << '\n';
    }
  }
  if (!out) throw IoError("failed to write table");
}

StoredTable read_table(std::istream& in) {
  auto fail = [](const std::string& why) -> IoError { return IoError("bad table file: " + why); };
  std::string key;
  int version = 0;
  if (!(in >> key >> version) || key != "sleeptrack-table" || version != 1)
    throw fail("missing header");
  std::string provenance, network;
  double price = 0.0;
  int interpolated = 0;
  std::size_t anchor_count = 0;
  if (!(in >> key >> provenance) || key != "provenance") throw fail("provenance");
  if (!(in >> key >> network) || key != "network") throw fail("network");
  if (!(in >> key >> price) || key != "energy_price") throw fail("energy_price");
  if (!(in >> key >> interpolated) || key != "interpolated") throw fail("interpolated");
  if (!(in >> key >> anchor_count) || key != "anchors") throw fail("anchors");
  std::vector<double> anchors(anchor_count);
  for (auto& a : anchors)
    if (!(in >> a)) throw fail("anchor values");
  int rows = 0, cols = 0;
  if (!(in >> key >> rows >> cols) || key != "tdelta" || rows < 1 || cols < 1)
    throw fail("tdelta shape");
  Eigen::MatrixXd values(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int l = 0; l < cols; ++l)
      if (!(in >> values(r, l))) throw fail("tdelta values");

  TDeltaSource source;
  try {
    source = parse_tdelta_source(provenance);
  } catch (const ConfigError&) {
    throw fail("unknown provenance '" + provenance + "'");
  }
  std::optional<StoredTable> parsed;
  try {
    parsed.emplace(StoredTable{TDeltaTable(values, anchors, interpolated != 0, source), network,
                               price, {}});
    parsed->table.validate();
  } catch (const InvalidArgument& e) {
    throw fail(e.what());
  }
  StoredTable out = std::move(*parsed);

  if (in >> key) {
    int qr = 0, qc = 0;
    if (key != "qmdp_value" || !(in >> qr >> qc) || qr != rows || qc != cols)
      throw fail("qmdp_value shape");
    std::vector<PerSensorValue> q(qc);
    for (auto& s : q) {
      s.value.resize(qr);
      s.sleep.resize(qr);
    }
    for (int r = 0; r < qr; ++r)
      for (int l = 0; l < qc; ++l)
        if (!(in >> q[l].value[r])) throw fail("qmdp values");
    if (!(in >> key >> qr >> qc) || key != "qmdp_sleep" || qr != rows || qc != cols)
      throw fail("qmdp_sleep shape");
    for (int r = 0; r < qr; ++r)
      for (int l = 0; l < qc; ++l) {
        std::string tok;
        if (!(in >> tok)) throw fail("qmdp sleep times");
        try {
          q[l].sleep[r] = tok == "never" ? kNeverWake : std::stoi(tok);
        } catch (const std::exception&) {
          throw fail("qmdp sleep time '" + tok + "'");
        }
      }
    out.qmdp = std::move(q);
  }
  return out;
}

void save_table(const std::string& path, const StoredTable& stored) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  write_table(out, stored);
}

StoredTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open table '" + path + "'");
  return read_table(in);
}

}  // namespace sleeptrack
