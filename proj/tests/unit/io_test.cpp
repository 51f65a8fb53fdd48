#include <doctest.h>

#include <sstream>

#include "sleeptrack/errors.hpp"
#include "sleeptrack/io.hpp"
#include "sleeptrack/policy.hpp"

using namespace sleeptrack;

namespace {

const char* kRing = R"({
  "name": "line5",
  "space": {"kind": "integers", "first": 1, "size": 5},
  "motion": {"kind": "steps", "steps": {"-1": 0.25, "0": 0.5, "1": 0.25}},
  "sensors": [{"location": 2, "variance": 0.5}, {"location": 4, "kind": "gaussian"}],
  "distance": {"kind": "hamming"},
  "energy_price": 0.2,
  "start": 3,
  "experiment": {"c_grid": [0.1, 0.2], "policies": ["qmdp-greedy"], "runs": 7}
})";

}  // namespace

TEST_CASE("network config parses into an equivalent model") {
  const auto cfg = parse_network_config(kRing);
  const auto& m = cfg.model;
  CHECK(m.name == "line5");
  CHECK(m.space.size() == 5);
  CHECK(m.start.index == 2);
  CHECK(m.num_sensors() == 2);
  CHECK(m.sensors[0].variance == 0.5);
  CHECK(m.energy_price == 0.2);
  CHECK(m.finite_kernel().probability(0, 5) == doctest::Approx(0.25));
  CHECK(cfg.experiment.c_grid.size() == 2);
  CHECK(cfg.experiment.runs == 7);
  CHECK_FALSE(cfg.experiment.seed.has_value());
}

TEST_CASE("continuous and matrix configs") {
  const auto c = parse_network_config(R"({
    "space": {"kind": "continuous", "lo": 0, "hi": 10},
    "motion": {"kind": "gaussian", "variance": 0.5},
    "sensors": [{"location": 5}],
    "distance": {"kind": "squared-euclidean"},
    "start": 5.0})");
  CHECK(c.model.distance.bound() == 100.0);
  CHECK(c.model.walk().variance == 0.5);
  const auto m = parse_network_config(R"({
    "space": {"kind": "finite", "coordinates": [0.0, 2.5]},
    "motion": {"kind": "matrix", "rows": [[0.5, 0.25, 0.25], [0.0, 0.5, 0.5]]},
    "sensors": [{"location": 2.5, "kind": "binary"}],
    "start": 2.5})");
  CHECK(m.model.start.index == 1);
  CHECK(m.model.finite_kernel().probability(1, 2) == 0.5);
}

TEST_CASE("malformed configs raise configuration errors") {
  CHECK_THROWS_AS(parse_network_config("{"), ConfigError);
  CHECK_THROWS_AS(parse_network_config(R"({"space": {"kind": "integers", "first": 1, "size": 3}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_network_config(R"({
    "space": {"kind": "integers", "first": 1, "size": 2},
    "motion": {"kind": "matrix", "rows": [[0.5, 0.6, 0.0], [0.0, 0.5, 0.5]]},
    "sensors": [{"location": 1}], "start": 1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_network_config(R"({
    "space": {"kind": "integers", "first": 1, "size": 2},
    "motion": {"kind": "steps", "steps": [[1, 1.0]]},
    "sensors": [{"location": 1}], "start": 7})"),
                  ConfigError);
  CHECK_THROWS_AS(load_network_config("/nonexistent/net.json"), IoError);
}

TEST_CASE("table files round trip with solved values") {
  const auto m = parse_network_config(kRing).model;
  Eigen::MatrixXd v(5, 2);
  v << 0.1, 0.2, 0.3, 1.0 / 3.0, 0.0, 0.5, 0.25, 0.125, 0.0, 0.0;
  StoredTable stored{TDeltaTable(v, m.space.coordinates(), false, TDeltaSource::Greedy), "line5",
                     0.2, {}};
  stored.qmdp = qmdp_solve_all(m, stored.table, 40);
  std::stringstream ss;
  write_table(ss, stored);
  const auto back = read_table(ss);
  CHECK(back.table.values() == v);
  CHECK(back.table.provenance() == TDeltaSource::Greedy);
  CHECK(back.network == "line5");
  CHECK(back.energy_price == 0.2);
  REQUIRE(back.qmdp.has_value());
  for (int l = 0; l < 2; ++l) {
    CHECK(back.qmdp->at(l).value == stored.qmdp->at(l).value);
    CHECK(back.qmdp->at(l).sleep == stored.qmdp->at(l).sleep);
  }
}

TEST_CASE("interpolated tables keep their anchors") {
  Eigen::MatrixXd v(3, 1);
  v << 0.0, 0.5, 1.0;
  StoredTable stored{TDeltaTable(v, {1.0, 1.5, 4.0}, true, TDeltaSource::Asleep), "C", 0.1, {}};
  std::stringstream ss;
  write_table(ss, stored);
  const auto back = read_table(ss);
  CHECK(back.table.interpolated());
  CHECK(back.table.anchors() == std::vector<double>{1.0, 1.5, 4.0});
  CHECK_FALSE(back.qmdp.has_value());
}

TEST_CASE("corrupt table files raise I/O errors") {
  std::stringstream empty("");
  CHECK_THROWS_AS(read_table(empty), IoError);
  std::stringstream truncated("sleeptrack-table 1\nprovenance greedy\nnetwork A\nenergy_price 0.1\n"
                              "interpolated 0\nanchors 2 1 2\ntdelta 2 1\n0.5\n");
  CHECK_THROWS_AS(read_table(truncated), IoError);
  std::stringstream negative("sleeptrack-table 1\nprovenance greedy\nnetwork A\nenergy_price 0.1\n"
                             "interpolated 0\nanchors 2 1 2\ntdelta 2 1\n0.5\n-1\n");
  CHECK_THROWS_AS(read_table(negative), IoError);
  CHECK_THROWS_AS(load_table("/nonexistent/table.txt"), IoError);
}
