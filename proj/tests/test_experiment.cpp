#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "test_support.hpp"

using namespace cscr;

namespace {

// Small, fast base configuration for sweep tests.
SimConfig tiny_config() {
  SimConfig cfg;
  cfg.num_sus = 10;
  cfg.num_pus = 4;
  cfg.num_channels = 3;
  cfg.channels_per_node = 3;
  cfg.num_flows = 2;
  cfg.sim_duration = 2.0;
  return cfg;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("every key round-trips") {
    std::istringstream in(
        "num_sus = 12\n"
        "num_pus = 3\n"
        "num_channels = 7\n"
        "num_flows = 5\n"
        "area_side = 300\n"
        "su_range = 110\n"
        "pu_range = 130\n"
        "bandwidth = 2e6\n"
        "packet_size = 256\n"
        "pu_activity = 0.3\n"
        "beta = 0.7\n"
        "tau = 0.2\n"
        "switch_cost_c = 2e-3\n"
        "hello_period = 0.5\n"
        "reselect_period = 2\n"
        "sim_duration = 4\n"
        "rng_seed = 99\n"
        "source_rate_bps = 5e4\n"
        "max_power = 2\n"
        "path_loss_exponent = 3.5\n"
        "snr_ref_distance = 70\n"
        "snr_ref_db = 12\n"
        "max_group_size = 4\n"
        "max_helpers = 9\n"
        "random_channel_subsets = true\n"
        "channels_per_node = 3\n"
        "queue_capacity = 64\n"
        "retry_limit = 2\n"
        "backoff_min = 2e-3\n"
        "backoff_max = 8e-3\n"
        "route_ttl = 6\n");
    FileConfig fc = parse_config(in);
    CHECK(fc.sim.num_sus == 12);
    CHECK(fc.sim.num_pus == 3);
    CHECK(fc.sim.num_channels == 7);
    CHECK(fc.sim.num_flows == 5);
    CHECK(fc.sim.area_side == 300.0);
    CHECK(fc.sim.su_range == 110.0);
    CHECK(fc.sim.pu_range == 130.0);
    CHECK(fc.sim.bandwidth == 2e6);
    CHECK(fc.sim.packet_size == 256);
    CHECK(fc.sim.pu_activity == 0.3);
    CHECK(fc.sim.beta == 0.7);
    CHECK(fc.sim.tau == 0.2);
    CHECK(fc.sim.switch_cost_c == 2e-3);
    CHECK(fc.sim.hello_period == 0.5);
    CHECK(fc.sim.reselect_period == 2.0);
    CHECK(fc.sim.sim_duration == 4.0);
    CHECK(fc.sim.rng_seed == 99);
    CHECK(fc.sim.source_rate_bps == 5e4);
    CHECK(fc.sim.max_power == 2.0);
    CHECK(fc.sim.path_loss_exponent == 3.5);
    CHECK(fc.sim.snr_ref_distance == 70.0);
    CHECK(fc.sim.snr_ref_db == 12.0);
    CHECK(fc.sim.max_group_size == 4);
    CHECK(fc.sim.max_helpers == 9);
    CHECK(fc.sim.random_channel_subsets);
    CHECK(fc.sim.channels_per_node == 3);
    CHECK(fc.sim.queue_capacity == 64);
    CHECK(fc.sim.retry_limit == 2);
    CHECK(fc.sim.backoff_min == 2e-3);
    CHECK(fc.sim.backoff_max == 8e-3);
    CHECK(fc.sim.route_ttl == 6);
  }
  SUBCASE("sweep keys, comments, and blanks") {
    std::istringstream in(
        "# experiment file\n"
        "\n"
        "sweep = num_pus   # the x axis\n"
        "sweep_values = 0, 8, 16\n"
        "seeds = 1,2,3\n"
        "protocols = CSCR, launch\n");
    FileConfig fc = parse_config(in);
    CHECK(fc.sweep.parameter == "num_pus");
    CHECK(fc.sweep.values == std::vector<double>{0, 8, 16});
    CHECK(fc.sweep.seeds == std::vector<std::uint64_t>{1, 2, 3});
    REQUIRE(fc.sweep.protocols.size() == 2);
    CHECK(fc.sweep.protocols[0] == Protocol::Cscr);
    CHECK(fc.sweep.protocols[1] == Protocol::Launch);
  }
  SUBCASE("errors") {
    std::istringstream bad_key("frobnicate = 1\n");
    CHECK_THROWS_AS(parse_config(bad_key), std::invalid_argument);
    std::istringstream malformed("num_sus 12\n");
    CHECK_THROWS_AS(parse_config(malformed), std::invalid_argument);
    std::istringstream bad_proto("protocols = WIBBLE\n");
    CHECK_THROWS_AS(parse_config(bad_proto), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_file("/nonexistent/path.cfg"),
                    std::invalid_argument);
  }
}

TEST_CASE("sweep value application") {
  SimConfig cfg;
  apply_sweep_value(cfg, "num_sus", 15);
  CHECK(cfg.num_sus == 15);
  apply_sweep_value(cfg, "num_pus", 12);
  CHECK(cfg.num_pus == 12);
  apply_sweep_value(cfg, "pu_activity", 0.6);
  CHECK(cfg.pu_activity == 0.6);
  apply_sweep_value(cfg, "num_flows", 4);
  CHECK(cfg.num_flows == 4);
  apply_sweep_value(cfg, "num_channels", 9);
  CHECK(cfg.num_channels == 9);
  CHECK(cfg.channels_per_node == 9);  // per-node pool follows the sweep
  CHECK_THROWS_AS(apply_sweep_value(cfg, "bogus", 1.0), std::invalid_argument);
}

TEST_CASE("mean and sample deviation") {
  CHECK(mean_std({}).first == 0.0);
  CHECK(mean_std({5.0}) == std::pair<double, double>{5.0, 0.0});
  auto [m, s] = mean_std({2.0, 4.0, 6.0});
  CHECK(m == doctest::Approx(4.0));
  CHECK(s == doctest::Approx(2.0));  // sample (n-1) normalization
}

TEST_CASE("sweep harness") {
  SUBCASE("single value, seed, and protocol gives one row with zero std") {
    SweepSpec spec;
    spec.parameter = "num_pus";
    spec.values = {4};
    spec.seeds = {1};
    spec.protocols = {Protocol::Cscr};
    auto rows = run_sweep(spec, tiny_config());
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].protocol == "CSCR");
    CHECK(rows[0].sweep_param == "num_pus");
    CHECK(rows[0].sweep_value == 4.0);
    CHECK(rows[0].seed_count == 1);
    CHECK(rows[0].goodput_std == 0.0);
    CHECK(rows[0].pdr_std == 0.0);
  }
  SUBCASE("row order is values x protocols") {
    SweepSpec spec;
    spec.parameter = "num_pus";
    spec.values = {0, 8};
    spec.seeds = {1};
    auto rows = run_sweep(spec, tiny_config());
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].sweep_value == 0.0);
    CHECK(rows[0].protocol == "CSCR");
    CHECK(rows[1].protocol == "UNDERCOVER");
    CHECK(rows[2].protocol == "LAUNCH");
    CHECK(rows[3].sweep_value == 8.0);
  }
  SUBCASE("rerunning an identical spec is byte-identical") {
    SweepSpec spec;
    spec.parameter = "num_channels";
    spec.values = {3, 5};
    spec.seeds = {1, 2};
    spec.protocols = {Protocol::Cscr, Protocol::Launch};
    const std::string a = to_csv(run_sweep(spec, tiny_config()));
    const std::string b = to_csv(run_sweep(spec, tiny_config()));
    CHECK(a == b);
  }
  SUBCASE("disjoint seed sets share the schema") {
    SweepSpec spec;
    spec.parameter = "num_pus";
    spec.values = {8};
    spec.protocols = {Protocol::Cscr};
    spec.seeds = {1, 2};
    const std::string a = to_csv(run_sweep(spec, tiny_config()));
    spec.seeds = {11, 12};
    const std::string b = to_csv(run_sweep(spec, tiny_config()));
    CHECK(a != b);
    CHECK(a.substr(0, a.find('\n')) == b.substr(0, b.find('\n')));
  }
  SUBCASE("errors") {
    SweepSpec spec;
    spec.parameter = "num_pus";
    spec.values = {8};
    CHECK_THROWS_AS(run_sweep(spec, tiny_config()),
                    std::invalid_argument);  // empty seeds
    spec.seeds = {1};
    spec.values = {99};  // outside the documented range
    CHECK_THROWS_AS(run_sweep(spec, tiny_config()), std::invalid_argument);
    spec.values = {8};
    spec.parameter = "bogus";
    CHECK_THROWS_AS(run_sweep(spec, tiny_config()), std::invalid_argument);
  }
}

TEST_CASE("CSV rendering") {
  std::vector<SweepRow> rows(1);
  rows[0].protocol = "CSCR";
  rows[0].sweep_param = "num_sus";
  rows[0].sweep_value = 25;
  rows[0].seed_count = 10;
  rows[0].goodput_mean = 12345.6789;
  const std::string csv = to_csv(rows);
  std::istringstream in(csv);
  std::string header, line;
  std::getline(in, header);
  CHECK(header ==
        "protocol,sweep_param,sweep_value,seed_count,goodput_bps_mean,"
        "goodput_bps_std,delay_s_mean,delay_s_std,pdr_mean,pdr_std,"
        "group_size_mean,overhead_pkts_mean");
  CHECK(header == kCsvHeader);
  std::getline(in, line);
  CHECK(line.substr(0, 20) == "CSCR,num_sus,25,10,1");
  // Exactly 12 comma-separated columns.
  CHECK(std::count(line.begin(), line.end(), ',') == 11);
}
