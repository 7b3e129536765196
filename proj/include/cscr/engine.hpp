#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "cscr/protocols.hpp"

namespace cscr {

enum class EventKind {
  PacketArrival,
  TransmissionEnd,
  PuTransition,
  HelloTimer,
  ReselectTimer,
  DiscoveryStep,
  ServiceWakeup,
};

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::PacketArrival: return "packet-arrival";
    case EventKind::TransmissionEnd: return "transmission-end";
    case EventKind::PuTransition: return "pu-transition";
    case EventKind::HelloTimer: return "hello-timer";
    case EventKind::ReselectTimer: return "reselect-timer";
    case EventKind::DiscoveryStep: return "discovery-step";
    case EventKind::ServiceWakeup: return "service";
  }
  return "?";
}

struct Event {
  double time = 0.0;
  std::uint64_t sequence = 0;  // tie-break, unique per event
  EventKind kind = EventKind::PacketArrival;
  std::uint32_t a = 0;  // flow / pu / node / attempt, per kind
  std::uint32_t b = 0;  // packet sequence number where applicable
};

struct EventLater {
  bool operator()(const Event& x, const Event& y) const {
    if (x.time != y.time) return x.time > y.time;
    return x.sequence > y.sequence;
  }
};

enum class Outcome {
  Delivered,
  BlockedByPu,
  Collided,
  DroppedQueueOverflow,
  DroppedRetries,
  DroppedNoRoute,
};

struct TransmissionAttempt {
  std::uint64_t id = 0;
  std::uint32_t packet = 0;
  FlowId flow = 0;
  std::size_t hop_index = 0;
  NodeId sender = 0;
  std::vector<NodeId> members;
  NodeId receiver = 0;
  ChannelId channel = 0;
  std::vector<PuId> nulled;
  double start = 0.0;  // airtime start (after retune)
  double end = 0.0;
  bool aborted = false;
};

struct DeliveredRecord {
  ChannelId channel;
  double start;
  double end;
  std::vector<NodeId> members;
  std::vector<PuId> nulled;
};

struct FlowAccounting {
  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t in_flight_end = 0;
};

struct RawResults {
  Protocol protocol = Protocol::Cscr;
  double sim_duration = 0.0;

  std::uint64_t generated = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_queue = 0;
  std::uint64_t dropped_retries = 0;
  std::uint64_t dropped_pu_blocked = 0;
  std::uint64_t dropped_no_route = 0;
  std::uint64_t in_flight_end = 0;
  std::uint64_t collision_events = 0;
  std::uint64_t blocked_pu_events = 0;

  double delivered_payload_bits = 0.0;
  double total_delay_s = 0.0;
  std::uint64_t hop_transmissions = 0;
  double group_size_sum = 0.0;

  ControlCounters control;
  std::vector<FlowAccounting> per_flow;
  std::uint64_t overlay_violations = 0;
  bool conservation_ok = false;
  std::size_t routes_established = 0;

  std::uint64_t trace_hash = 0;
  std::vector<std::string> trace;  // populated only when tracing is on
};

struct MetricsReport {
  double goodput_bps = 0.0;
  double avg_delay_s = 0.0;
  double pdr = 1.0;
  bool pdr_zero_sample = false;
  double avg_group_size = 0.0;
  double overhead_pkts = 0.0;
};

inline MetricsReport collect(const RawResults& raw) {
  MetricsReport m;
  m.goodput_bps = raw.delivered_payload_bits / raw.sim_duration;
  m.avg_delay_s =
      raw.delivered > 0 ? raw.total_delay_s / static_cast<double>(raw.delivered)
                        : 0.0;
  if (raw.generated == 0) {
    m.pdr = 1.0;
    m.pdr_zero_sample = true;
  } else {
    m.pdr = static_cast<double>(raw.delivered) /
            static_cast<double>(raw.generated);
  }
  m.avg_group_size =
      raw.hop_transmissions > 0
          ? raw.group_size_sum / static_cast<double>(raw.hop_transmissions)
          : 0.0;
  m.overhead_pkts = static_cast<double>(raw.control.total());
  return m;
}

namespace detail {

struct Packet {
  FlowId flow = 0;
  std::uint32_t seq = 0;
  double created = 0.0;
  std::size_t hop_index = 0;
  std::size_t retries = 0;
};

class Engine {
 public:
  Engine(NetworkState state, ChannelModel model, Protocol protocol,
         bool keep_trace)
      : state_(std::move(state)),
        model_(std::move(model)),
        cfg_(state_.config),
        protocol_(protocol),
        keep_trace_(keep_trace),
        mac_rng_(make_rng(cfg_.rng_seed, RngStream::Mac)),
        pu_rng_(make_rng(cfg_.rng_seed, RngStream::PuActivity)),
        proto_rng_(make_rng(cfg_.rng_seed, RngStream::Protocol)) {}

  RawResults run() {
    const std::size_t n = state_.sus.size();
    queues_.resize(n);
    busy_.assign(n, false);
    busy_until_.assign(n, 0.0);
    routes_.resize(state_.flows.size());
    results_.per_flow.resize(state_.flows.size());
    results_.protocol = protocol_;
    results_.sim_duration = cfg_.sim_duration;
    pu_on_since_.assign(state_.pus.size(), -1.0);
    pu_on_intervals_.resize(state_.pus.size());

    // Initial schedule.
    for (std::size_t p = 0; p < state_.pus.size(); ++p) {
      if (state_.pus[p].process.state == PuState::On) pu_on_since_[p] = 0.0;
      push(state_.pus[p].process.next_transition, EventKind::PuTransition,
           static_cast<std::uint32_t>(p));
    }
    for (double t = 0.0; t < cfg_.sim_duration; t += cfg_.hello_period)
      push(t, EventKind::HelloTimer, 0);
    const double pkt_interval =
        static_cast<double>(cfg_.packet_size) * 8.0 / cfg_.source_rate_bps;
    // Arrivals are jittered around the nominal interval so concurrent CBR
    // sources do not phase-lock (which would hide all contention).
    std::uniform_real_distribution<double> jitter(0.5, 1.5);
    for (std::size_t f = 0; f < state_.flows.size(); ++f) {
      const double start = 0.05 + 0.1 * static_cast<double>(f);
      push(start, EventKind::DiscoveryStep, static_cast<std::uint32_t>(f));
      std::uint32_t seq = 0;
      for (double t = start; t < cfg_.sim_duration;
           t += pkt_interval * jitter(mac_rng_))
        push(t, EventKind::PacketArrival, static_cast<std::uint32_t>(f),
             seq++);
    }

    while (!events_.empty()) {
      Event ev = events_.top();
      events_.pop();
      if (ev.time > cfg_.sim_duration) break;
      state_.now = ev.time;
      dispatch(ev);
    }
    state_.now = cfg_.sim_duration;
    finalize();
    return std::move(results_);
  }

 private:
  void push(double time, EventKind kind, std::uint32_t a,
            std::uint32_t b = 0) {
    events_.push(Event{time, next_seq_++, kind, a, b});
  }

  void trace(const Event& ev, const std::string& actor,
             const std::string& detail) {
    std::ostringstream os;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9f", ev.time);
    os << buf << '\t' << event_kind_name(ev.kind) << '\t' << actor << '\t'
       << detail;
    const std::string line = os.str();
    // FNV-1a over every trace line.
    for (unsigned char c : line) {
      results_.trace_hash ^= c;
      results_.trace_hash *= 1099511628211ULL;
    }
    results_.trace_hash ^= '\n';
    results_.trace_hash *= 1099511628211ULL;
    if (keep_trace_) results_.trace.push_back(line);
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case EventKind::PacketArrival: on_packet_arrival(ev); break;
      case EventKind::TransmissionEnd: on_transmission_end(ev); break;
      case EventKind::PuTransition: on_pu_transition(ev); break;
      case EventKind::HelloTimer: on_hello(ev); break;
      case EventKind::ReselectTimer: on_reselect(ev); break;
      case EventKind::DiscoveryStep: on_discovery(ev); break;
      case EventKind::ServiceWakeup:
        trace(ev, "node" + std::to_string(ev.a), "wakeup");
        try_start(ev.a, ev.time);
        break;
    }
  }

  void on_discovery(const Event& ev) {
    const FlowId f = ev.a;
    auto route = discover_route(state_, model_, cfg_, f, protocol_,
                                proto_rng_, results_.control);
    if (route) {
      routes_[f] = std::move(*route);
      ++results_.routes_established;
      trace(ev, "flow" + std::to_string(f),
            "route hops=" + std::to_string(routes_[f]->hops.size()));
      if (protocol_ == Protocol::Cscr &&
          ev.time + cfg_.reselect_period < cfg_.sim_duration)
        push(ev.time + cfg_.reselect_period, EventKind::ReselectTimer, f);
    } else {
      trace(ev, "flow" + std::to_string(f), "no-route");
    }
  }

  void on_packet_arrival(const Event& ev) {
    const FlowId f = ev.a;
    ++results_.generated;
    ++results_.per_flow[f].generated;
    if (!routes_[f]) {
      ++results_.dropped_no_route;
      ++results_.per_flow[f].dropped;
      trace(ev, "flow" + std::to_string(f), "no-route-drop");
      return;
    }
    Packet pkt;
    pkt.flow = f;
    pkt.seq = ev.b;
    pkt.created = ev.time;
    pkt.hop_index = 0;
    const NodeId src = routes_[f]->hops.front().sender;
    if (queues_[src].size() >= cfg_.queue_capacity) {
      ++results_.dropped_queue;
      ++results_.per_flow[f].dropped;
      trace(ev, "flow" + std::to_string(f), "queue-overflow");
      return;
    }
    const std::uint32_t id = static_cast<std::uint32_t>(packets_.size());
    packets_.push_back(pkt);
    queues_[src].push_back(id);
    trace(ev, "flow" + std::to_string(f), "pkt" + std::to_string(pkt.seq));
    try_start(src, ev.time);
  }

  void on_hello(const Event& ev) {
    exchange_hello(state_, model_, knowledge_, ev.time, results_.control);
    trace(ev, "all", "round");
  }

  void on_reselect(const Event& ev) {
    const FlowId f = ev.a;
    if (routes_[f]) {
      const auto changes =
          reselect_channels(state_, model_, cfg_, *routes_[f], ev.time);
      for (const auto& ch : changes) {
        const RouteHop& hop = routes_[f]->hops[ch.hop_index];
        // Members retune now; the hop sender is unavailable meanwhile. A
        // channel change re-forms the group: one coordination packet per
        // member, like at discovery.
        for (NodeId m : hop.selection.group)
          state_.su(m).current_send_channel = ch.new_channel;
        busy_until_[hop.sender] =
            std::max(busy_until_[hop.sender], ev.time + ch.t_switch);
        results_.control.group_coordination += hop.selection.group.size();
      }
      trace(ev, "flow" + std::to_string(f),
            "changes=" + std::to_string(changes.size()));
    }
    if (ev.time + cfg_.reselect_period < cfg_.sim_duration)
      push(ev.time + cfg_.reselect_period, EventKind::ReselectTimer, f);
  }

  void on_pu_transition(const Event& ev) {
    const PuId p = ev.a;
    PuProcess& proc = state_.pus[p].process;
    advance(proc, ev.time, pu_rng_);
    push(proc.next_transition, EventKind::PuTransition, p);
    if (proc.state == PuState::On) {
      pu_on_since_[p] = ev.time;
      abort_blocked_by_pu(p, ev.time, proc.next_transition);
      trace(ev, "pu" + std::to_string(p), "on");
    } else {
      if (pu_on_since_[p] >= 0.0)
        pu_on_intervals_[p].emplace_back(pu_on_since_[p], ev.time);
      pu_on_since_[p] = -1.0;
      trace(ev, "pu" + std::to_string(p), "off");
    }
  }

  // PUs that forbid an attempt. Two cases: (a) overlay protection - the PU
  // is in range of a transmitting member and not nulled by the group's
  // beam; (b) the PU's own transmission jams the hop receiver. Nulling
  // shields the PU from the group, not the receiver from the PU.
  bool pu_blocks(const TransmissionAttempt& att, PuId p) const {
    const PrimaryUser& pu = state_.pus[p];
    if (!pu.active_channels.count(att.channel)) return false;
    if (state_.senses_pu(att.receiver, p)) return true;
    for (PuId q : att.nulled)
      if (q == p) return false;
    for (NodeId m : att.members)
      if (state_.senses_pu(m, p)) return true;
    return false;
  }

  void abort_blocked_by_pu(PuId p, double on_time, double off_time) {
    std::vector<std::uint64_t> victims;
    for (const auto& att : active_)
      if (!att.aborted && att.end > on_time && off_time > att.start &&
          pu_blocks(att, p))
        victims.push_back(att.id);
    for (std::uint64_t id : victims) abort_attempt(id, Outcome::BlockedByPu);
  }

  TransmissionAttempt* find_attempt(std::uint64_t id) {
    for (auto& att : active_)
      if (att.id == id) return &att;
    return nullptr;
  }

  void drop_front(NodeId node, FlowId f) {
    queues_[node].pop_front();
    ++results_.dropped_retries;
    ++results_.per_flow[f].dropped;
  }

  void drop_front_pu(NodeId node, FlowId f) {
    queues_[node].pop_front();
    ++results_.dropped_pu_blocked;
    ++results_.per_flow[f].dropped;
  }

  double backoff() {
    return std::uniform_real_distribution<double>(cfg_.backoff_min,
                                                  cfg_.backoff_max)(mac_rng_);
  }

  void abort_attempt(std::uint64_t id, Outcome why) {
    TransmissionAttempt* att = find_attempt(id);
    if (!att || att->aborted) return;
    att->aborted = true;
    const NodeId sender = att->sender;
    const FlowId f = att->flow;
    busy_[sender] = false;
    Packet& pkt = packets_[queues_[sender].front()];
    if (why == Outcome::Collided) {
      ++results_.collision_events;
    } else {
      ++results_.blocked_pu_events;
    }
    if (why == Outcome::BlockedByPu && protocol_ == Protocol::Launch) {
      // Interweave: wait out the PU, no retry penalty.
      push(state_.now + backoff(), EventKind::ServiceWakeup, sender);
      return;
    }
    ++pkt.retries;
    if (pkt.retries > cfg_.retry_limit) {
      drop_front(sender, f);
      push(state_.now, EventKind::ServiceWakeup, sender);
    } else {
      push(state_.now + backoff(), EventKind::ServiceWakeup, sender);
    }
  }

  void try_start(NodeId node, double now) {
    if (busy_[node] || queues_[node].empty()) return;
    if (now < busy_until_[node]) {
      push(busy_until_[node], EventKind::ServiceWakeup, node);
      return;
    }
    const std::uint32_t pkt_id = queues_[node].front();
    Packet& pkt = packets_[pkt_id];
    const FlowId f = pkt.flow;
    const RouteHop& hop = routes_[f]->hops[pkt.hop_index];

    if (hop.selection.capacity <= 0.0) {
      ++results_.blocked_pu_events;
      drop_front_pu(node, f);
      push(now, EventKind::ServiceWakeup, node);
      return;
    }

    const ChannelId k = hop.selection.channel;
    const double t_switch =
        switching_delay(state_, hop.selection.group, k, cfg_.switch_cost_c);
    const double t0 = now + t_switch;
    const double bits = static_cast<double>(cfg_.packet_size) * 8.0;
    const double end = t0 + bits / hop.selection.capacity;

    TransmissionAttempt att;
    att.id = next_attempt_++;
    att.packet = pkt_id;
    att.flow = f;
    att.hop_index = pkt.hop_index;
    att.sender = node;
    att.members = hop.selection.group;
    att.receiver = hop.receiver;
    att.channel = k;
    if (protocol_ != Protocol::Launch)  // interweave never nulls
      att.nulled = sensed_pus_on_channel(state_, hop.selection.group, k);
    att.start = t0;
    att.end = end;

    // Overlay rule: an in-range active PU must be nulled, or the medium is
    // blocked until it goes quiet.
    double latest_off = 0.0;
    bool blocked = false;
    for (const PrimaryUser& pu : state_.pus) {
      if (pu.process.state != PuState::On) continue;
      if (pu.process.next_transition <= t0) continue;  // off before airtime
      if (pu_blocks(att, pu.id)) {
        blocked = true;
        latest_off = std::max(latest_off, pu.process.next_transition);
      }
    }
    if (blocked) {
      ++results_.blocked_pu_events;
      if (protocol_ == Protocol::Launch) {
        // Interweave discipline: hold the packet until the PU goes quiet.
        push(latest_off + 1e-9, EventKind::ServiceWakeup, node);
        return;
      }
      // Overlay senders abandon the packet: PU ON periods dwarf any backoff,
      // so retrying within one is futile.
      drop_front_pu(node, f);
      push(now, EventKind::ServiceWakeup, node);
      return;
    }

    // Contention: a concurrent same-channel transmission inside the
    // interference range collides with this one. Both fail.
    const double irange = interference_range(state_);
    std::vector<std::uint64_t> conflicts;
    for (const auto& other : active_) {
      if (other.aborted || other.channel != k) continue;
      if (other.end <= t0 || end <= other.start) continue;
      bool near = false;
      for (NodeId m : att.members) {
        if (distance(state_.sus[m].position,
                     state_.sus[other.receiver].position) <= irange) {
          near = true;
          break;
        }
      }
      if (!near) {
        for (NodeId m : other.members) {
          if (distance(state_.sus[m].position,
                       state_.sus[att.receiver].position) <= irange) {
            near = true;
            break;
          }
        }
      }
      if (near) conflicts.push_back(other.id);
    }
    if (!conflicts.empty()) {
      for (std::uint64_t id : conflicts) abort_attempt(id, Outcome::Collided);
      ++results_.collision_events;
      ++pkt.retries;
      if (pkt.retries > cfg_.retry_limit) {
        drop_front(node, f);
        push(now, EventKind::ServiceWakeup, node);
      } else {
        push(now + backoff(), EventKind::ServiceWakeup, node);
      }
      return;
    }

    // Commit: members retune and the packet takes the air.
    for (NodeId m : att.members)
      state_.su(m).current_send_channel = k;
    busy_[node] = true;
    ++results_.hop_transmissions;
    results_.group_size_sum += static_cast<double>(att.members.size());
    active_.push_back(att);
    push(end, EventKind::TransmissionEnd,
         static_cast<std::uint32_t>(att.id & 0xffffffffu),
         static_cast<std::uint32_t>(att.id >> 32));
  }

  void on_transmission_end(const Event& ev) {
    const std::uint64_t id =
        static_cast<std::uint64_t>(ev.a) |
        (static_cast<std::uint64_t>(ev.b) << 32);
    TransmissionAttempt* att = find_attempt(id);
    if (!att) return;
    if (att->aborted) {
      remove_attempt(id);
      return;
    }
    const TransmissionAttempt done = *att;
    remove_attempt(id);

    const NodeId sender = done.sender;
    busy_[sender] = false;
    const std::uint32_t pkt_id = queues_[sender].front();
    queues_[sender].pop_front();
    Packet& pkt = packets_[pkt_id];
    const FlowId f = pkt.flow;
    delivered_records_.push_back(
        {done.channel, done.start, done.end, done.members, done.nulled});

    const RouteEntry& route = *routes_[f];
    if (done.hop_index + 1 == route.hops.size()) {
      ++results_.delivered;
      ++results_.per_flow[f].delivered;
      results_.delivered_payload_bits +=
          static_cast<double>(cfg_.packet_size) * 8.0;
      results_.total_delay_s += ev.time - pkt.created;
      trace(ev, "flow" + std::to_string(f),
            "delivered pkt" + std::to_string(pkt.seq));
    } else {
      pkt.hop_index = done.hop_index + 1;
      pkt.retries = 0;
      const NodeId next = route.hops[pkt.hop_index].sender;
      if (queues_[next].size() >= cfg_.queue_capacity) {
        ++results_.dropped_queue;
        ++results_.per_flow[f].dropped;
        trace(ev, "flow" + std::to_string(f), "queue-overflow");
      } else {
        queues_[next].push_back(pkt_id);
        try_start(next, ev.time);
      }
    }
    try_start(sender, ev.time);
  }

  void remove_attempt(std::uint64_t id) {
    for (std::size_t i = 0; i < active_.size(); ++i) {
      if (active_[i].id == id) {
        active_.erase(active_.begin() + static_cast<long>(i));
        return;
      }
    }
  }

  void finalize() {
    // Close open PU intervals.
    for (std::size_t p = 0; p < state_.pus.size(); ++p)
      if (pu_on_since_[p] >= 0.0)
        pu_on_intervals_[p].emplace_back(pu_on_since_[p], cfg_.sim_duration);

    // Packets still queued at the end.
    for (const auto& q : queues_) {
      for (std::uint32_t pkt_id : q) {
        ++results_.in_flight_end;
        ++results_.per_flow[packets_[pkt_id].flow].in_flight_end;
      }
    }

    results_.conservation_ok = true;
    std::uint64_t dropped_total = results_.dropped_queue +
                                  results_.dropped_retries +
                                  results_.dropped_pu_blocked +
                                  results_.dropped_no_route;
    if (results_.generated !=
        results_.delivered + dropped_total + results_.in_flight_end)
      results_.conservation_ok = false;
    for (const auto& fa : results_.per_flow)
      if (fa.generated != fa.delivered + fa.dropped + fa.in_flight_end)
        results_.conservation_ok = false;

    // Post-hoc overlay audit: delivered airtime must never overlap an
    // in-range, same-channel, un-nulled PU ON interval.
    for (const auto& rec : delivered_records_) {
      for (const PrimaryUser& pu : state_.pus) {
        if (!pu.active_channels.count(rec.channel)) continue;
        bool nulled = false;
        for (PuId q : rec.nulled)
          if (q == pu.id) nulled = true;
        if (nulled) continue;
        bool in_range = false;
        for (NodeId m : rec.members)
          if (state_.senses_pu(m, pu.id)) in_range = true;
        if (!in_range) continue;
        for (const auto& [on, off] : pu_on_intervals_[pu.id])
          if (on < rec.end && off > rec.start) ++results_.overlay_violations;
      }
    }
  }

  NetworkState state_;
  ChannelModel model_;
  SimConfig cfg_;
  Protocol protocol_;
  bool keep_trace_;
  std::mt19937_64 mac_rng_, pu_rng_, proto_rng_;

  std::priority_queue<Event, std::vector<Event>, EventLater> events_;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_attempt_ = 1;

  std::vector<std::deque<std::uint32_t>> queues_;
  std::vector<char> busy_;
  std::vector<double> busy_until_;
  std::vector<Packet> packets_;
  std::vector<std::optional<RouteEntry>> routes_;
  std::vector<TransmissionAttempt> active_;
  NeighborKnowledge knowledge_;

  std::vector<double> pu_on_since_;
  std::vector<std::vector<std::pair<double, double>>> pu_on_intervals_;
  std::vector<DeliveredRecord> delivered_records_;

  RawResults results_;
};

}  // namespace detail

inline RawResults run(const NetworkState& state, const ChannelModel& model,
                      const SimConfig& config, Protocol protocol,
                      bool keep_trace = false) {
  NetworkState s = state;
  s.config = config;
  detail::Engine engine(std::move(s), model, protocol, keep_trace);
  return engine.run();
}

}  // namespace cscr
