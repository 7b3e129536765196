#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace cscr;

TEST_CASE("interference counting") {
  SimConfig cfg;
  cfg.su_range = 125.0;  // interference range 250 m

  SUBCASE("empty group rejected") {
    auto state = support::manual_state({{0, 0}}, cfg);
    CHECK_THROWS_AS(count_interference(state, {}), std::invalid_argument);
  }
  SUBCASE("no active flows anywhere") {
    auto state = support::manual_state({{0, 0}, {100, 0}, {200, 0}}, cfg);
    CHECK(count_interference(state, {0}) == std::pair<std::size_t, std::size_t>{0, 0});
  }
  SUBCASE("one flow through a direct neighbor") {
    auto state = support::manual_state({{0, 0}, {100, 0}}, cfg);
    support::add_flow(state, 1, 0, 1e5);
    state.node_flow_channels[1].push_back({0, 2, true});
    CHECK(count_interference(state, {0}) == std::pair<std::size_t, std::size_t>{1, 1});
  }
  SUBCASE("flows near but not adjacent count only toward n_f") {
    // Node 1 (100 m): direct neighbor carrying flow 0.
    // Node 2 (200 m): inside the 250 m interference range, flow 1.
    // Node 3 (600 m): outside everything, flow 2.
    auto state = support::manual_state(
        {{0, 0}, {100, 0}, {200, 0}, {600, 0}}, cfg);
    support::add_flow(state, 1, 0, 1e5);
    support::add_flow(state, 2, 0, 1e5);
    support::add_flow(state, 3, 0, 1e5);
    state.node_flow_channels[1].push_back({0, 0, true});
    state.node_flow_channels[2].push_back({1, 0, true});
    state.node_flow_channels[3].push_back({2, 0, true});
    CHECK(count_interference(state, {0}) == std::pair<std::size_t, std::size_t>{1, 2});
  }
  SUBCASE("n_f never drops below n_n") {
    // A carrier neighbor whose flow id duplicates another carrier's flow
    // would otherwise let the flow count fall below the neighbor count.
    auto state = support::manual_state({{0, 0}, {100, 0}, {0, 100}}, cfg);
    support::add_flow(state, 1, 2, 1e5);
    state.node_flow_channels[1].push_back({0, 0, true});
    state.node_flow_channels[2].push_back({0, 0, false});
    auto [n_n, n_f] = count_interference(state, {0});
    CHECK(n_n == 2);
    CHECK(n_f >= n_n);
  }
}

TEST_CASE("switching delay") {
  SimConfig cfg;
  cfg.num_channels = 10;
  auto state = support::manual_state({{0, 0}, {10, 0}, {20, 0}}, cfg);

  SUBCASE("all members already on the target channel") {
    state.sus[0].current_send_channel = 4;
    state.sus[1].current_send_channel = 4;
    CHECK(switching_delay(state, {0, 1}, 4, 1e-3) == 0.0);
  }
  SUBCASE("slowest member governs") {
    state.sus[0].current_send_channel = 1;
    state.sus[1].current_send_channel = 3;
    CHECK(switching_delay(state, {0, 1}, 5, 1e-3) ==
          doctest::Approx(4e-3).epsilon(1e-12));
  }
  SUBCASE("single member full span") {
    state.sus[0].current_send_channel = 0;
    CHECK(switching_delay(state, {0}, 9, 1e-3) ==
          doctest::Approx(9e-3).epsilon(1e-12));
  }
  SUBCASE("matches the scalar oracle on random inputs") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<ChannelId> chan(0, 9);
    std::uniform_real_distribution<double> cost(1e-5, 1e-2);
    for (int i = 0; i < 1000; ++i) {
      std::vector<ChannelId> cur;
      std::vector<NodeId> group;
      for (NodeId m = 0; m < 3; ++m) {
        state.sus[m].current_send_channel = chan(rng);
        cur.push_back(state.sus[m].current_send_channel);
        group.push_back(m);
      }
      const ChannelId target = chan(rng);
      const double c = cost(rng);
      const double got = switching_delay(state, group, target, c);
      const double want = support::oracle_switching_delay(cur, target, c);
      CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST_CASE("link-cost metric") {
  SUBCASE("zero capacity scores zero") {
    MetricInputs in;
    in.capacity = 0.0;
    in.p_pu = 0.5;
    in.t_switch = 0.01;
    CHECK(lc_metric(in) == 0.0);
  }
  SUBCASE("worked scalar example") {
    MetricInputs in;
    in.capacity = 1e6;
    in.n_n = 2;
    in.n_f = 4;
    in.beta = 0.5;
    in.p_pu = 0.5;
    in.t_switch = 0.002;
    CHECK(lc_metric(in) == doctest::Approx(1e6 / (3.0 * 0.5 * 0.002)).epsilon(1e-12));
    CHECK(lc_metric(in) == doctest::Approx(3.3333333e8).epsilon(1e-6));
  }
  SUBCASE("quieter channels score strictly higher") {
    MetricInputs a, b;
    a.capacity = b.capacity = 1e6;
    a.t_switch = b.t_switch = 0.001;
    a.p_pu = 0.2;
    b.p_pu = 0.8;
    CHECK(lc_metric(a) > lc_metric(b));
  }
  SUBCASE("floors keep the score finite") {
    MetricInputs in;
    in.capacity = 1e6;
    in.p_pu = 0.0;
    in.t_switch = 0.0;
    in.n_n = 0;
    in.n_f = 0;
    CHECK(std::isfinite(lc_metric(in)));
    CHECK(lc_metric(in) ==
          doctest::Approx(1e6 / (1.0 * kPpuFloor * kSwitchFloor)).epsilon(1e-12));
  }
  SUBCASE("invalid inputs rejected") {
    MetricInputs in;
    in.capacity = -1.0;
    CHECK_THROWS_AS(lc_metric(in), std::invalid_argument);
    in = {};
    in.p_pu = 1.5;
    CHECK_THROWS_AS(lc_metric(in), std::invalid_argument);
    in = {};
    in.t_switch = -0.1;
    CHECK_THROWS_AS(lc_metric(in), std::invalid_argument);
    in = {};
    in.n_n = 3;
    in.n_f = 2;
    CHECK_THROWS_AS(lc_metric(in), std::invalid_argument);
  }
  SUBCASE("matches the scalar oracle on random inputs") {
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> cap(0.0, 1e7), ppu(0.0, 1.0),
        tsw(0.0, 0.05), beta(0.1, 1.0);
    std::uniform_int_distribution<std::size_t> nn(0, 10), extra(0, 10);
    for (int i = 0; i < 1000; ++i) {
      MetricInputs in;
      in.capacity = cap(rng);
      in.n_n = nn(rng);
      in.n_f = in.n_n + extra(rng);
      in.beta = beta(rng);
      in.p_pu = ppu(rng);
      in.t_switch = tsw(rng);
      const double got = lc_metric(in);
      const double want = support::oracle_lc(in.capacity, in.n_n, in.n_f,
                                             in.beta, in.p_pu, in.t_switch);
      CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
    }
  }
}
