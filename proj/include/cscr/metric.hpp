#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <stdexcept>
#include <vector>

#include "cscr/model.hpp"

namespace cscr {

// Floors keeping the metric finite when a denominator term is legitimately
// zero (no surrounding PUs, no switching, no interfering flows).
inline constexpr double kPpuFloor = 1e-3;
inline constexpr double kSwitchFloor = 1e-4;  // seconds

struct MetricInputs {
  double capacity = 0.0;   // bits/second
  std::size_t n_n = 0;     // flow-carrying direct neighbors of the group
  std::size_t n_f = 0;     // flows inside the group's interference range
  double beta = 0.5;
  double p_pu = 0.0;
  double t_switch = 0.0;   // seconds
};

// Interference range for flow counting is twice the transmission range.
inline double interference_range(const NetworkState& state) {
  return 2.0 * state.config.su_range;
}

// n_n: direct neighbors of any group member (outside the group) that carry
// at least one active flow. n_f: flows with a hop endpoint inside the
// group's interference range. Clamped so n_f >= n_n always holds.
inline std::pair<std::size_t, std::size_t> count_interference(
    const NetworkState& state, const std::vector<NodeId>& group) {
  if (group.empty()) throw std::invalid_argument("empty group");
  const double irange = interference_range(state);

  std::set<NodeId> carriers;
  for (NodeId m : group) {
    for (const SecondaryUser& other : state.sus) {
      if (other.id == m) continue;
      if (std::find(group.begin(), group.end(), other.id) != group.end())
        continue;
      if (distance(state.sus[m].position, other.position) <=
              state.config.su_range &&
          state.carries_active_flow(other.id))
        carriers.insert(other.id);
    }
  }

  std::set<FlowId> flows_near;
  for (const SecondaryUser& node : state.sus) {
    if (state.node_flow_channels[node.id].empty()) continue;
    bool near = false;
    for (NodeId m : group) {
      if (distance(state.sus[m].position, node.position) <= irange) {
        near = true;
        break;
      }
    }
    if (!near) continue;
    for (const auto& usage : state.node_flow_channels[node.id])
      flows_near.insert(usage.flow);
  }

  const std::size_t n_n = carriers.size();
  const std::size_t n_f = std::max(flows_near.size(), n_n);
  return {n_n, n_f};
}

// T_switch = c * max over members of the channel-index distance to the
// target channel; every member retunes simultaneously, the slowest governs.
inline double switching_delay(const NetworkState& state,
                              const std::vector<NodeId>& group,
                              ChannelId target, double c) {
  long max_dist = 0;
  for (NodeId m : group) {
    const long d = std::labs(static_cast<long>(state.su(m).current_send_channel) -
                             static_cast<long>(target));
    max_dist = std::max(max_dist, d);
  }
  return c * static_cast<double>(max_dist);
}

inline double lc_metric(const MetricInputs& in) {
  if (in.capacity < 0.0 || in.p_pu < 0.0 || in.p_pu > 1.0 ||
      in.t_switch < 0.0 || in.n_f < in.n_n)
    throw std::invalid_argument("invalid metric inputs");
  const double interf =
      std::max(static_cast<double>(in.n_n) +
                   in.beta * static_cast<double>(in.n_f - in.n_n),
               1.0);
  const double ppu = std::max(in.p_pu, kPpuFloor);
  const double tsw = std::max(in.t_switch, kSwitchFloor);
  return in.capacity / (interf * ppu * tsw);
}

}  // namespace cscr
