#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sleeptrack/model.hpp"
#include "sleeptrack/policy.hpp"
#include "sleeptrack/tdelta.hpp"

namespace sleeptrack {

/// Optional experiment block of a network config file.
struct ExperimentSettings {
  std::vector<double> c_grid;
  std::vector<std::string> policies;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
};

struct NetworkConfig {
  NetworkModel model;
  ExperimentSettings experiment;
};

/// JSON network description; see README for the schema. Throws ConfigError.
NetworkConfig parse_network_config(const std::string& json_text);
NetworkConfig load_network_config(const std::string& path);

/// T-delta table plus (optionally) solved Q_MDP values, as stored on disk.
struct StoredTable {
  TDeltaTable table;
  std::string network;
  double energy_price = 0.0;
  std::optional<std::vector<PerSensorValue>> qmdp;
};

void write_table(std::ostream& out, const StoredTable& stored);
StoredTable read_table(std::istream& in);
void save_table(const std::string& path, const StoredTable& stored);
StoredTable load_table(const std::string& path);

}  // namespace sleeptrack
