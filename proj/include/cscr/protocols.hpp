#pragma once

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "cscr/selection.hpp"

namespace cscr {

enum class Protocol { Cscr, Undercover, Launch };

inline const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::Cscr: return "CSCR";
    case Protocol::Undercover: return "UNDERCOVER";
    case Protocol::Launch: return "LAUNCH";
  }
  return "?";
}

struct ControlCounters {
  std::size_t hello = 0;
  std::size_t route_request = 0;
  std::size_t route_reply = 0;
  std::size_t group_coordination = 0;
  std::size_t total() const {
    return hello + route_request + route_reply + group_coordination;
  }
};

// Periodic "Hello" contents: the sender's neighbor view, the flows it
// serves, and the PUs it senses.
struct HelloPayload {
  NodeId sender = 0;
  double emitted_at = 0.0;
  struct NeighborInfo {
    NodeId id;
    std::set<ChannelId> available_channels;
    std::vector<Complex> coeff_to_sender;  // one per channel
  };
  std::vector<NeighborInfo> neighbor_table;
  std::vector<std::pair<FlowId, ChannelId>> flow_table;
  struct SensedPu {
    PuId id;
    double mu;
    ChannelId channel;
    Complex coeff;
  };
  std::vector<SensedPu> sensed_pus;
};

// Latest payload heard from each neighbor, per SU.
using NeighborKnowledge = std::vector<std::map<NodeId, HelloPayload>>;

inline HelloPayload make_hello(const NetworkState& state,
                               const ChannelModel& model, NodeId n,
                               double now) {
  HelloPayload hp;
  hp.sender = n;
  hp.emitted_at = now;
  for (NodeId v : neighbors(state, n)) {
    HelloPayload::NeighborInfo info;
    info.id = v;
    info.available_channels = state.su(v).available_channels;
    for (std::size_t k = 0; k < model.num_channels; ++k)
      info.coeff_to_sender.push_back(
          model.coeff(v, n, static_cast<ChannelId>(k)));
    hp.neighbor_table.push_back(std::move(info));
  }
  for (const auto& usage : state.node_flow_channels[n])
    hp.flow_table.emplace_back(usage.flow, usage.channel);
  for (const PrimaryUser& pu : state.pus) {
    if (!state.senses_pu(n, pu.id)) continue;
    for (ChannelId k : pu.active_channels)
      hp.sensed_pus.push_back(
          {pu.id, pu.process.mu, k, model.coeff_pu(n, pu.id, k)});
  }
  return hp;
}

// One hello round: every SU emits once on the CCC, every neighbor stores
// the latest payload.
inline void exchange_hello(const NetworkState& state, const ChannelModel& model,
                           NeighborKnowledge& knowledge, double now,
                           ControlCounters& counters) {
  if (knowledge.size() != state.sus.size())
    knowledge.assign(state.sus.size(), {});
  for (const SecondaryUser& su : state.sus) {
    HelloPayload hp = make_hello(state, model, su.id, now);
    ++counters.hello;
    for (NodeId v : neighbors(state, su.id)) knowledge[v][su.id] = hp;
  }
}

struct RouteHop {
  NodeId sender = 0;
  SelectionResult selection;
  NodeId receiver = 0;
};

struct RouteEntry {
  FlowId flow = 0;
  std::vector<RouteHop> hops;
  double established_at = 0.0;
};

// Per-relay protocol variant of the selection step.
inline std::optional<SelectionResult> select_for_protocol(
    const NetworkState& state, NodeId relay, NodeId receiver,
    const ChannelModel& model, const SimConfig& config, Protocol protocol,
    ChannelId undercover_channel) {
  SelectOptions opts;
  switch (protocol) {
    case Protocol::Cscr:
      break;
    case Protocol::Undercover:
      opts.allowed_channels = {undercover_channel};
      opts.enforce_validity = false;
      opts.mode = ScoreMode::CapacityOverInterference;
      break;
    case Protocol::Launch:
      opts.singleton_only = true;
      opts.use_nulling = false;  // interweave: wait PUs out, never null
      opts.mode = ScoreMode::CapacityOverSwitch;
      break;
  }
  return select_with_options(state, relay, receiver, model, config, opts);
}

inline void register_route(NetworkState& state, const RouteEntry& route) {
  Flow& flow = state.flows[route.flow];
  flow.active = true;
  flow.channel_in_use_per_hop.clear();
  for (std::size_t i = 0; i < route.hops.size(); ++i) {
    const RouteHop& hop = route.hops[i];
    const ChannelId k = hop.selection.channel;
    flow.channel_in_use_per_hop[i] = k;
    for (NodeId m : hop.selection.group)
      state.node_flow_channels[m].push_back({flow.id, k, true});
    state.node_flow_channels[hop.receiver].push_back({flow.id, k, false});
  }
}

inline void unregister_route(NetworkState& state, const RouteEntry& route) {
  Flow& flow = state.flows[route.flow];
  flow.active = false;
  flow.channel_in_use_per_hop.clear();
  for (auto& entries : state.node_flow_channels)
    entries.erase(std::remove_if(entries.begin(), entries.end(),
                                 [&](const auto& e) {
                                   return e.flow == flow.id;
                                 }),
                  entries.end());
}

// On-demand discovery: a request floods the CCC up to the TTL, each relay
// evaluates the hop selection from its predecessor, and the destination
// replies along the path maximizing the bottleneck per-hop score (ties by
// fewer hops). Returns nullopt when no usable route exists.
inline std::optional<RouteEntry> discover_route(
    NetworkState& state, const ChannelModel& model, const SimConfig& config,
    FlowId flow_id, Protocol protocol, std::mt19937_64& proto_rng,
    ControlCounters& counters) {
  const Flow& flow = state.flows[flow_id];
  const NodeId source = flow.source;
  const NodeId dest = flow.destination;
  if (source == dest) throw std::invalid_argument("source equals destination");
  const std::size_t n = state.sus.size();
  const std::size_t ttl = config.route_ttl;

  // Flood: BFS over the CCC neighbor graph; every reached node forwards
  // the request exactly once.
  std::vector<int> depth(n, -1);
  std::deque<NodeId> q;
  depth[source] = 0;
  q.push_back(source);
  std::size_t reached = 0;
  while (!q.empty()) {
    const NodeId u = q.front();
    q.pop_front();
    ++reached;
    if (depth[u] >= static_cast<int>(ttl)) continue;
    for (NodeId v : neighbors(state, u)) {
      if (depth[v] < 0) {
        depth[v] = depth[u] + 1;
        q.push_back(v);
      }
    }
  }
  counters.route_request += reached;
  if (depth[dest] < 0) return std::nullopt;

  // Per-relay random channel for the channel-unaware baseline, drawn once
  // per discovery.
  std::vector<ChannelId> random_channel(n, 0);
  if (protocol == Protocol::Undercover) {
    std::uniform_int_distribution<ChannelId> chan(
        0, static_cast<ChannelId>(config.num_channels - 1));
    for (std::size_t i = 0; i < n; ++i) random_channel[i] = chan(proto_rng);
  }

  // Hop-limited widest path over lazily evaluated edge selections.
  std::map<std::pair<NodeId, NodeId>, std::optional<SelectionResult>> memo;
  auto edge = [&](NodeId u, NodeId v) -> const std::optional<SelectionResult>& {
    auto it = memo.find({u, v});
    if (it == memo.end()) {
      std::optional<SelectionResult> sel = select_for_protocol(
          state, u, v, model, config, protocol, random_channel[u]);
      if (sel && sel->capacity <= 0.0) sel.reset();  // cannot carry data
      it = memo.emplace(std::pair{u, v}, std::move(sel)).first;
    }
    return it->second;
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> bottleneck(n, -kInf);
  std::vector<std::size_t> hop_count(n, 0);
  std::vector<NodeId> parent(n, 0);
  bottleneck[source] = kInf;

  for (std::size_t round = 0; round < ttl; ++round) {
    bool changed = false;
    for (NodeId u = 0; u < n; ++u) {
      if (bottleneck[u] == -kInf || depth[u] < 0) continue;
      if (hop_count[u] >= ttl) continue;
      for (NodeId v : neighbors(state, u)) {
        const auto& sel = edge(u, v);
        if (!sel) continue;
        const double b = std::min(bottleneck[u], sel->score);
        const std::size_t h = hop_count[u] + 1;
        if (b > bottleneck[v] ||
            (b == bottleneck[v] && h < hop_count[v])) {
          bottleneck[v] = b;
          hop_count[v] = h;
          parent[v] = u;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  if (bottleneck[dest] == -kInf) return std::nullopt;

  RouteEntry route;
  route.flow = flow_id;
  route.established_at = state.now;
  std::vector<NodeId> path{dest};
  NodeId cur = dest;
  while (cur != source) {
    cur = parent[cur];
    path.push_back(cur);
    if (path.size() > ttl + 1) return std::nullopt;  // defensive cycle guard
  }
  std::reverse(path.begin(), path.end());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const auto& sel = edge(path[i], path[i + 1]);
    route.hops.push_back({path[i], *sel, path[i + 1]});
  }

  counters.route_reply += route.hops.size();
  if (protocol != Protocol::Launch) {
    // One coordination packet per member per discovery; a node serving
    // several hops of the route coordinates once.
    std::set<NodeId> members;
    for (const RouteHop& hop : route.hops)
      members.insert(hop.selection.group.begin(), hop.selection.group.end());
    counters.group_coordination += members.size();
  }

  register_route(state, route);
  return route;
}

struct ReselectionChange {
  std::size_t hop_index = 0;
  ChannelId old_channel = 0;
  ChannelId new_channel = 0;
  double t_switch = 0.0;
};

// Periodic per-hop re-selection (channel-aware cooperative scheme only).
// Each hop re-runs the selection against the current environment with its
// own flow temporarily deregistered, so other flows constrain validity but
// the hop itself is free to move.
inline std::vector<ReselectionChange> reselect_channels(
    NetworkState& state, const ChannelModel& model, const SimConfig& config,
    RouteEntry& route, double now) {
  std::vector<ReselectionChange> changes;
  for (std::size_t i = 0; i < route.hops.size(); ++i) {
    RouteHop& hop = route.hops[i];

    // Temporarily remove this hop's usage entries.
    auto strip = [&](NodeId node, bool transmits) {
      auto& entries = state.node_flow_channels[node];
      auto it = std::find(
          entries.begin(), entries.end(),
          NetworkState::FlowUsage{route.flow, hop.selection.channel,
                                  transmits});
      if (it != entries.end()) entries.erase(it);
    };
    for (NodeId m : hop.selection.group) strip(m, true);
    strip(hop.receiver, false);

    const auto sel = select_with_options(state, hop.sender, hop.receiver,
                                         model, config, {});
    // A hop never trades a working channel for one it cannot transmit on.
    if (sel && sel->capacity > 0.0) {
      if (sel->channel != hop.selection.channel)
        changes.push_back({i, hop.selection.channel, sel->channel,
                           sel->t_switch});
      hop.selection = *sel;
    }

    const ChannelId k = hop.selection.channel;
    state.flows[route.flow].channel_in_use_per_hop[i] = k;
    for (NodeId m : hop.selection.group)
      state.node_flow_channels[m].push_back({route.flow, k, true});
    state.node_flow_channels[hop.receiver].push_back({route.flow, k, false});
  }
  (void)now;
  return changes;
}

}  // namespace cscr
