#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cscr/channel.hpp"
#include "cscr/metric.hpp"
#include "cscr/model.hpp"
#include "cscr/pu_activity.hpp"

namespace cscr {

struct SelectionResult {
  std::vector<NodeId> group;  // always contains the relay itself
  ChannelId channel = 0;
  double score = 0.0;
  double capacity = 0.0;   // bits/second on the chosen (group, channel)
  double t_switch = 0.0;   // seconds to retune at selection time
  bool fallback = false;   // chosen by minimum-switching-delay fallback
};

// A channel is valid at a node iff the node carries no active flow, or
// every active flow through it already uses this channel.
inline bool is_valid_channel(const NetworkState& state, NodeId member,
                             ChannelId channel) {
  const SecondaryUser& su = state.su(member);
  if (!su.available_channels.count(channel))
    throw std::invalid_argument("channel not available at node");
  for (const auto& usage : state.node_flow_channels[member])
    if (usage.transmits && usage.channel != channel) return false;
  return true;
}

// PUs sensed by any group member and licensed on the channel. These are
// both the nulling targets and the p_pu contributors.
inline std::vector<PuId> sensed_pus_on_channel(const NetworkState& state,
                                               const std::vector<NodeId>& group,
                                               ChannelId channel) {
  std::vector<PuId> out;
  for (const PrimaryUser& pu : state.pus) {
    if (!pu.active_channels.count(channel)) continue;
    for (NodeId m : group) {
      if (state.senses_pu(m, pu.id)) {
        out.push_back(pu.id);
        break;
      }
    }
  }
  return out;
}

// Candidate groups: the singleton {relay} plus {relay} U S for every subset
// S of the strongest common neighbors of relay and receiver. Deterministic
// order: increasing size, then lexicographic over the strength-sorted
// helper list.
inline std::vector<std::vector<NodeId>> enumerate_groups(
    const NetworkState& state, const ChannelModel& model, NodeId relay,
    NodeId receiver, std::size_t max_size) {
  std::vector<std::vector<NodeId>> out;
  out.push_back({relay});
  if (max_size <= 1) return out;

  std::vector<NodeId> helpers;
  for (const SecondaryUser& su : state.sus) {
    if (su.id == relay || su.id == receiver) continue;
    if (state.in_su_range(relay, su.id) && state.in_su_range(receiver, su.id))
      helpers.push_back(su.id);
  }
  auto strength = [&](NodeId h) {
    double s = 0.0;
    for (std::size_t k = 0; k < model.num_channels; ++k)
      s += std::norm(model.coeff(h, receiver, static_cast<ChannelId>(k)));
    return s;
  };
  std::stable_sort(helpers.begin(), helpers.end(), [&](NodeId a, NodeId b) {
    const double sa = strength(a), sb = strength(b);
    if (sa != sb) return sa > sb;
    return a < b;
  });
  if (helpers.size() > state.config.max_helpers)
    helpers.resize(state.config.max_helpers);

  const std::size_t max_extra = max_size - 1;
  // Subsets by size, lexicographic over helper indices.
  std::vector<std::size_t> idx;
  for (std::size_t size = 1;
       size <= std::min(max_extra, helpers.size()); ++size) {
    idx.assign(size, 0);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      std::vector<NodeId> g{relay};
      for (std::size_t i : idx) g.push_back(helpers[i]);
      out.push_back(std::move(g));
      // next combination
      std::size_t i = size;
      while (i-- > 0) {
        if (idx[i] + (size - i) < helpers.size()) {
          ++idx[i];
          for (std::size_t j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
          break;
        }
        if (i == 0) goto next_size;
      }
    }
  next_size:;
  }
  return out;
}

// Scoring variants used by the three protocols. The full metric belongs to
// the channel-aware cooperative scheme; the baselines drop terms per their
// published behavior.
enum class ScoreMode {
  Full,              // Eq-style LC metric
  CapacityOverInterference,  // channel-unaware beamforming baseline
  CapacityOverSwitch,        // channel-aware singleton baseline
};

struct SelectOptions {
  std::vector<ChannelId> allowed_channels;  // empty = all channels
  bool singleton_only = false;
  bool enforce_validity = true;
  // Beamforming protocols null sensed PUs and transmit over them; the
  // interweave baseline does not beamform and waits PUs out instead.
  bool use_nulling = true;
  ScoreMode mode = ScoreMode::Full;
};

namespace detail {

struct Candidate {
  double score = 0.0;
  double capacity = 0.0;
  double t_switch = 0.0;
  std::size_t group_size = 0;
  ChannelId channel = 0;
};

// Argmax order: score, then capacity, then smaller group, then lower
// channel index. Deterministic replay needs the total order.
inline bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.capacity != b.capacity) return a.capacity > b.capacity;
  if (a.group_size != b.group_size) return a.group_size < b.group_size;
  return a.channel < b.channel;
}

// Fallback order: minimum switching delay, ties by higher capacity, then
// lower channel index.
inline bool better_fallback(const Candidate& a, const Candidate& b) {
  if (a.t_switch != b.t_switch) return a.t_switch < b.t_switch;
  if (a.capacity != b.capacity) return a.capacity > b.capacity;
  if (a.group_size != b.group_size) return a.group_size < b.group_size;
  return a.channel < b.channel;
}

}  // namespace detail

inline std::optional<SelectionResult> select_with_options(
    const NetworkState& state, NodeId relay, NodeId receiver,
    const ChannelModel& model, const SimConfig& config,
    const SelectOptions& opts) {
  bool reachable = state.in_su_range(relay, receiver);
  if (!reachable) {
    for (const SecondaryUser& su : state.sus) {
      if (su.id == relay || su.id == receiver) continue;
      if (state.in_su_range(relay, su.id) &&
          state.in_su_range(receiver, su.id)) {
        reachable = true;
        break;
      }
    }
  }
  if (!reachable) return std::nullopt;

  const std::size_t max_size = opts.singleton_only ? 1 : config.max_group_size;
  const auto groups = enumerate_groups(state, model, relay, receiver, max_size);

  std::vector<ChannelId> channels = opts.allowed_channels;
  if (channels.empty())
    for (std::size_t k = 0; k < config.num_channels; ++k)
      channels.push_back(static_cast<ChannelId>(k));

  // Per-node caches: validity and availability are independent of the
  // group, interference counts are independent of the channel.
  const std::size_t num_nodes = state.sus.size();
  std::vector<char> avail(num_nodes * config.num_channels, 0);
  std::vector<char> valid_at(num_nodes * config.num_channels, 0);
  for (std::size_t node = 0; node < num_nodes; ++node) {
    for (ChannelId k : state.sus[node].available_channels) {
      avail[node * config.num_channels + k] = 1;
      valid_at[node * config.num_channels + k] =
          is_valid_channel(state, static_cast<NodeId>(node), k) ? 1 : 0;
    }
  }

  // Interference-count caches as bitmasks (node and flow universes are
  // small): a group's carrier-neighbor and nearby-flow sets are unions of
  // per-node sets.
  const double irange = interference_range(state);
  std::vector<std::uint64_t> carrier_mask(num_nodes, 0);
  std::vector<std::uint64_t> near_flow_mask(num_nodes, 0);
  std::vector<std::uint64_t> sensed_mask;  // [node * K + k] -> PU bits
  const bool fast_masks =
      num_nodes <= 64 && state.flows.size() <= 64 && state.pus.size() <= 64;
  if (fast_masks) {
    sensed_mask.assign(num_nodes * config.num_channels, 0);
    for (std::size_t u = 0; u < num_nodes; ++u) {
      for (std::size_t v = 0; v < num_nodes; ++v) {
        if (u == v || state.node_flow_channels[v].empty()) continue;
        const double d =
            distance(state.sus[u].position, state.sus[v].position);
        if (d <= state.config.su_range) carrier_mask[u] |= 1ULL << v;
        if (d <= irange)
          for (const auto& usage : state.node_flow_channels[v])
            near_flow_mask[u] |= 1ULL << usage.flow;
      }
      // A node's own flows are inside its interference range by definition.
      for (const auto& usage : state.node_flow_channels[u])
        near_flow_mask[u] |= 1ULL << usage.flow;
      for (const PrimaryUser& pu : state.pus) {
        if (!state.senses_pu(static_cast<NodeId>(u), pu.id)) continue;
        for (ChannelId k : pu.active_channels)
          sensed_mask[u * config.num_channels + k] |= 1ULL << pu.id;
      }
    }
  }

  // |coeff(m, receiver, k)|^2 for the nulling-free capacity fast path.
  std::vector<double> h2(num_nodes * config.num_channels, 0.0);
  for (std::size_t u = 0; u < num_nodes; ++u)
    for (std::size_t k = 0; k < config.num_channels; ++k)
      h2[u * config.num_channels + k] =
          std::norm(model.coeff(static_cast<NodeId>(u), receiver,
                                static_cast<ChannelId>(k)));

  bool have_best = false, have_fb = false;
  detail::Candidate best, fb;
  std::vector<NodeId> best_group, fb_group;
  std::vector<PuId> nulled;

  for (const auto& group : groups) {
    std::size_t n_n = 0, n_f = 0;
    if (fast_masks) {
      std::uint64_t carriers = 0, flows_near = 0, group_bits = 0;
      for (NodeId m : group) {
        carriers |= carrier_mask[m];
        flows_near |= near_flow_mask[m];
        group_bits |= 1ULL << m;
      }
      n_n = static_cast<std::size_t>(std::popcount(carriers & ~group_bits));
      n_f = std::max(
          static_cast<std::size_t>(std::popcount(flows_near)), n_n);
    } else {
      std::tie(n_n, n_f) = count_interference(state, group);
    }
    for (ChannelId k : channels) {
      bool available = true, valid = true;
      for (NodeId m : group) {
        if (!avail[m * config.num_channels + k]) {
          available = false;
          break;
        }
        if (!valid_at[m * config.num_channels + k]) valid = false;
      }
      if (!available) continue;

      double capacity = 0.0;
      nulled.clear();
      if (fast_masks) {
        std::uint64_t pu_bits = 0;
        if (opts.use_nulling)
          for (NodeId m : group)
            pu_bits |= sensed_mask[m * config.num_channels + k];
        if (pu_bits == 0) {
          double gain = 0.0;
          for (NodeId m : group) gain += h2[m * config.num_channels + k];
          capacity =
              gain > 0.0
                  ? model.bandwidth *
                        std::log2(1.0 + config.max_power * gain /
                                            model.noise_power)
                  : 0.0;
        } else {
          for (std::size_t p = 0; p < state.pus.size(); ++p)
            if (pu_bits & (1ULL << p)) nulled.push_back(static_cast<PuId>(p));
          capacity = achievable_capacity(group, receiver, k, model, nulled,
                                         config.max_power);
        }
      } else {
        if (opts.use_nulling) nulled = sensed_pus_on_channel(state, group, k);
        capacity = achievable_capacity(group, receiver, k, model, nulled,
                                       config.max_power);
      }
      const double t_switch =
          switching_delay(state, group, k, config.switch_cost_c);

      detail::Candidate cand;
      cand.capacity = capacity;
      cand.t_switch = t_switch;
      cand.group_size = group.size();
      cand.channel = k;

      if (!have_fb || detail::better_fallback(cand, fb)) {
        fb = cand;
        fb_group = group;
        have_fb = true;
      }
      if (opts.enforce_validity && !valid) continue;

      switch (opts.mode) {
        case ScoreMode::Full: {
          std::vector<double> mus;
          for (PuId p : nulled) mus.push_back(state.pus[p].process.mu);
          MetricInputs in;
          in.capacity = capacity;
          in.n_n = n_n;
          in.n_f = n_f;
          in.beta = config.beta;
          in.p_pu = p_pu_from_rates(mus, config.tau);
          in.t_switch = t_switch;
          cand.score = lc_metric(in);
          break;
        }
        case ScoreMode::CapacityOverInterference: {
          const double interf =
              std::max(static_cast<double>(n_n) +
                           config.beta * static_cast<double>(n_f - n_n),
                       1.0);
          cand.score = capacity / interf;
          break;
        }
        case ScoreMode::CapacityOverSwitch:
          cand.score = capacity / std::max(t_switch, kSwitchFloor);
          break;
      }
      if (!have_best || detail::better(cand, best)) {
        best = cand;
        best_group = group;
        have_best = true;
      }
    }
  }

  if (!have_best && !have_fb) return std::nullopt;

  SelectionResult result;
  if (have_best) {
    result.group = best_group;
    result.channel = best.channel;
    result.score = best.score;
    result.capacity = best.capacity;
    result.t_switch = best.t_switch;
    result.fallback = false;
  } else {
    result.group = fb_group;
    result.channel = fb.channel;
    result.score = 0.0;
    result.capacity = fb.capacity;
    result.t_switch = fb.t_switch;
    result.fallback = true;
  }
  return result;
}

// The flowchart algorithm: every channel is checked for validity against
// every candidate group, the LC metric ranks the valid pairs, and when no
// valid pair exists the minimum-switching-delay pair is taken instead.
inline SelectionResult select(const NetworkState& state, NodeId relay,
                              NodeId receiver, const ChannelModel& model,
                              const SimConfig& config) {
  const auto result =
      select_with_options(state, relay, receiver, model, config, {});
  if (!result)
    throw std::runtime_error("receiver unreachable by every candidate");
  return *result;
}

}  // namespace cscr
