#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cscr/pu_activity.hpp"
#include "cscr/rng.hpp"

namespace cscr {

using NodeId = std::uint32_t;
using PuId = std::uint32_t;
using ChannelId = std::uint32_t;
using FlowId = std::uint32_t;

struct Point {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point& a, const Point& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

struct SecondaryUser {
  NodeId id = 0;
  Point position;
  double tx_range = 0.0;                 // meters
  ChannelId current_send_channel = 0;
  std::set<ChannelId> available_channels;
  double max_power = 1.0;                // watts
};

struct PrimaryUser {
  PuId id = 0;
  Point position;
  double tx_range = 0.0;                 // meters
  std::set<ChannelId> active_channels;   // licensed channels
  PuProcess process;
};

struct Flow {
  FlowId id = 0;
  NodeId source = 0;
  NodeId destination = 0;
  double rate_bps = 0.0;
  std::map<std::size_t, ChannelId> channel_in_use_per_hop;
  bool active = false;
};

struct SimConfig {
  std::size_t num_sus = 25;
  std::size_t num_pus = 8;
  std::size_t num_channels = 5;
  std::size_t num_flows = 8;
  double area_side = 250.0;       // meters
  double su_range = 125.0;        // meters
  double pu_range = 140.0;        // meters
  double bandwidth = 1.5e6;       // bits/second (effective, also Hz-equivalent)
  std::size_t packet_size = 512;  // bytes
  double pu_activity = 0.4;       // long-run ON fraction, in (0,1)
  double beta = 0.5;              // altruism weight in the interference term
  double tau = 0.1;               // seconds, PU-exposure window
  double switch_cost_c = 1e-3;    // seconds per channel step
  double hello_period = 1.0;      // seconds
  double reselect_period = 1.0;   // seconds
  double sim_duration = 10.0;     // seconds
  std::uint64_t rng_seed = 1;

  double source_rate_bps = 100e3;  // per-flow offered load
  double max_power = 1.0;          // watts, shared by all SUs

  // Radio model knobs. Noise power is derived so a single-node link at
  // snr_ref_distance sees snr_ref_db of SNR at full power.
  double path_loss_exponent = 3.0;
  double snr_ref_distance = 60.0;  // meters
  double snr_ref_db = 10.0;

  std::size_t max_group_size = 6;
  std::size_t max_helpers = 20;   // strongest common neighbors kept per hop

  // When true, every SU draws a random channels_per_node-sized subset of
  // the channel set instead of holding all channels.
  bool random_channel_subsets = false;
  std::size_t channels_per_node = 5;

  std::size_t queue_capacity = 50;    // packets per node
  std::size_t retry_limit = 4;
  double backoff_min = 1e-3;          // seconds
  double backoff_max = 10e-3;         // seconds
  std::size_t route_ttl = 10;         // max hops for discovery

  void validate() const {
    if (pu_activity <= 0.0 || pu_activity >= 1.0)
      throw std::invalid_argument("pu_activity must lie in (0,1)");
    if (beta <= 0.0 || beta > 1.0)
      throw std::invalid_argument("beta must lie in (0,1]");
    if (tau <= 0.0 || hello_period <= 0.0 || reselect_period <= 0.0 ||
        sim_duration <= 0.0)
      throw std::invalid_argument("durations must be positive");
    if (num_channels == 0)
      throw std::invalid_argument("need at least one channel");
    if (su_range <= 0.0 || pu_range <= 0.0 || area_side <= 0.0)
      throw std::invalid_argument("ranges and area must be positive");
    if (num_flows > 0 && num_sus < 2)
      throw std::invalid_argument("flows require at least two SUs");
  }
};

struct NetworkState {
  SimConfig config;
  std::vector<SecondaryUser> sus;
  std::vector<PrimaryUser> pus;
  std::vector<Flow> flows;
  double now = 0.0;  // event clock, seconds

  // One entry per (node, flow, hop role). Send-channel validity looks only
  // at transmit roles; the receive channel is independent of the send
  // channel. Interference counting looks at all roles.
  struct FlowUsage {
    FlowId flow;
    ChannelId channel;
    bool transmits;
    bool operator==(const FlowUsage&) const = default;
  };
  std::vector<std::vector<FlowUsage>> node_flow_channels;

  const SecondaryUser& su(NodeId n) const {
    if (n >= sus.size()) throw std::out_of_range("unknown NodeId");
    return sus[n];
  }
  SecondaryUser& su(NodeId n) {
    if (n >= sus.size()) throw std::out_of_range("unknown NodeId");
    return sus[n];
  }
  const PrimaryUser& pu(PuId p) const {
    if (p >= pus.size()) throw std::out_of_range("unknown PuId");
    return pus[p];
  }

  bool in_su_range(NodeId a, NodeId b) const {
    return distance(sus[a].position, sus[b].position) <= config.su_range;
  }
  // A SU senses a PU when it sits inside the PU's transmission range.
  bool senses_pu(NodeId n, PuId p) const {
    return distance(sus[n].position, pus[p].position) <= pus[p].tx_range;
  }

  bool carries_active_flow(NodeId n) const {
    return !node_flow_channels[n].empty();
  }
};

inline NetworkState build_topology(const SimConfig& config,
                                   std::mt19937_64& rng) {
  config.validate();
  NetworkState state;
  state.config = config;

  std::uniform_real_distribution<double> coord(0.0, config.area_side);
  std::uniform_int_distribution<ChannelId> chan(
      0, static_cast<ChannelId>(config.num_channels - 1));

  state.sus.reserve(config.num_sus);
  for (std::size_t i = 0; i < config.num_sus; ++i) {
    SecondaryUser su;
    su.id = static_cast<NodeId>(i);
    su.position = {coord(rng), coord(rng)};
    su.tx_range = config.su_range;
    su.max_power = config.max_power;
    if (config.random_channel_subsets &&
        config.channels_per_node < config.num_channels) {
      std::vector<ChannelId> all(config.num_channels);
      for (std::size_t k = 0; k < all.size(); ++k)
        all[k] = static_cast<ChannelId>(k);
      std::shuffle(all.begin(), all.end(), rng);
      su.available_channels.insert(
          all.begin(), all.begin() + static_cast<long>(config.channels_per_node));
    } else {
      for (std::size_t k = 0; k < config.num_channels; ++k)
        su.available_channels.insert(static_cast<ChannelId>(k));
    }
    // Radios start parked spread across their channel pool; a common start
    // channel would bias the switching-delay term toward it network-wide.
    std::vector<ChannelId> pool(su.available_channels.begin(),
                                su.available_channels.end());
    su.current_send_channel = pool[i % pool.size()];
    state.sus.push_back(std::move(su));
  }

  std::mt19937_64 pu_rng = rng;  // continue on the same stream
  for (std::size_t i = 0; i < config.num_pus; ++i) {
    PrimaryUser pu;
    pu.id = static_cast<PuId>(i);
    pu.position = {coord(rng), coord(rng)};
    pu.tx_range = config.pu_range;
    pu.active_channels.insert(chan(rng));
    pu.process = make_pu_process(config.pu_activity, rng);
    state.pus.push_back(std::move(pu));
  }

  std::uniform_int_distribution<NodeId> node(
      0, config.num_sus > 0 ? static_cast<NodeId>(config.num_sus - 1) : 0);
  for (std::size_t i = 0; i < config.num_flows; ++i) {
    Flow f;
    f.id = static_cast<FlowId>(i);
    f.source = node(rng);
    do {
      f.destination = node(rng);
    } while (f.destination == f.source);
    f.rate_bps = config.source_rate_bps;
    state.flows.push_back(std::move(f));
  }

  state.node_flow_channels.resize(config.num_sus);
  return state;
}

inline std::set<NodeId> neighbors(const NetworkState& state, NodeId n) {
  const SecondaryUser& self = state.su(n);
  std::set<NodeId> out;
  for (const SecondaryUser& other : state.sus) {
    if (other.id == n) continue;
    if (distance(self.position, other.position) <= self.tx_range)
      out.insert(other.id);
  }
  return out;
}

// Canonical text form, used by the determinism checks.
inline std::string serialize(const NetworkState& state) {
  std::ostringstream os;
  os.precision(17);
  os << state.sus.size() << ' ' << state.pus.size() << ' '
     << state.flows.size() << ' ' << state.config.num_channels << '\n';
  for (const SecondaryUser& su : state.sus) {
    os << "su " << su.id << ' ' << su.position.x << ' ' << su.position.y << ' '
       << su.tx_range << ' ' << su.current_send_channel;
    for (ChannelId k : su.available_channels) os << ' ' << k;
    os << '\n';
  }
  for (const PrimaryUser& pu : state.pus) {
    os << "pu " << pu.id << ' ' << pu.position.x << ' ' << pu.position.y << ' '
       << pu.tx_range << ' ' << pu.process.mu << ' ' << pu.process.lambda_on
       << ' ' << (pu.process.state == PuState::On ? 1 : 0);
    for (ChannelId k : pu.active_channels) os << ' ' << k;
    os << '\n';
  }
  for (const Flow& f : state.flows)
    os << "flow " << f.id << ' ' << f.source << ' ' << f.destination << ' '
       << f.rate_bps << '\n';
  return os.str();
}

}  // namespace cscr
