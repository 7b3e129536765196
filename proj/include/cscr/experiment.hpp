#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cscr/engine.hpp"

namespace cscr {

struct SweepSpec {
  std::string parameter;  // num_sus | num_pus | pu_activity | num_channels | num_flows
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::vector<Protocol> protocols{Protocol::Cscr, Protocol::Undercover,
                                  Protocol::Launch};
};

inline const std::map<std::string, std::vector<double>>& default_sweep_values() {
  static const std::map<std::string, std::vector<double>> v{
      {"num_sus", {10, 15, 20, 25, 30}},
      {"num_pus", {0, 4, 8, 12, 16}},
      {"pu_activity", {0.2, 0.4, 0.6, 0.8}},
      {"num_channels", {3, 5, 7, 9}},
      {"num_flows", {1, 4, 8, 12, 16}},
  };
  return v;
}

// Table-style value ranges per sweepable parameter.
inline const std::map<std::string, std::pair<double, double>>& sweep_ranges() {
  static const std::map<std::string, std::pair<double, double>> r{
      {"num_sus", {10, 30}},      {"num_pus", {0, 16}},
      {"pu_activity", {0.2, 0.8}}, {"num_channels", {3, 9}},
      {"num_flows", {1, 16}},
  };
  return r;
}

inline void apply_sweep_value(SimConfig& cfg, const std::string& parameter,
                              double value) {
  if (parameter == "num_sus")
    cfg.num_sus = static_cast<std::size_t>(value);
  else if (parameter == "num_pus")
    cfg.num_pus = static_cast<std::size_t>(value);
  else if (parameter == "pu_activity")
    cfg.pu_activity = value;
  else if (parameter == "num_channels") {
    cfg.num_channels = static_cast<std::size_t>(value);
    cfg.channels_per_node = cfg.num_channels;
  } else if (parameter == "num_flows")
    cfg.num_flows = static_cast<std::size_t>(value);
  else
    throw std::invalid_argument("unknown sweep parameter: " + parameter);
}

// Flat key = value configuration, '#' starts a comment.
inline void parse_config_line(SimConfig& cfg, const std::string& key,
                              const std::string& value) {
  auto as_size = [&] { return static_cast<std::size_t>(std::stoull(value)); };
  auto as_double = [&] { return std::stod(value); };
  if (key == "num_sus") cfg.num_sus = as_size();
  else if (key == "num_pus") cfg.num_pus = as_size();
  else if (key == "num_channels") cfg.num_channels = as_size();
  else if (key == "num_flows") cfg.num_flows = as_size();
  else if (key == "area_side") cfg.area_side = as_double();
  else if (key == "su_range") cfg.su_range = as_double();
  else if (key == "pu_range") cfg.pu_range = as_double();
  else if (key == "bandwidth") cfg.bandwidth = as_double();
  else if (key == "packet_size") cfg.packet_size = as_size();
  else if (key == "pu_activity") cfg.pu_activity = as_double();
  else if (key == "beta") cfg.beta = as_double();
  else if (key == "tau") cfg.tau = as_double();
  else if (key == "switch_cost_c") cfg.switch_cost_c = as_double();
  else if (key == "hello_period") cfg.hello_period = as_double();
  else if (key == "reselect_period") cfg.reselect_period = as_double();
  else if (key == "sim_duration") cfg.sim_duration = as_double();
  else if (key == "rng_seed") cfg.rng_seed = std::stoull(value);
  else if (key == "source_rate_bps") cfg.source_rate_bps = as_double();
  else if (key == "max_power") cfg.max_power = as_double();
  else if (key == "path_loss_exponent") cfg.path_loss_exponent = as_double();
  else if (key == "snr_ref_distance") cfg.snr_ref_distance = as_double();
  else if (key == "snr_ref_db") cfg.snr_ref_db = as_double();
  else if (key == "max_group_size") cfg.max_group_size = as_size();
  else if (key == "max_helpers") cfg.max_helpers = as_size();
  else if (key == "random_channel_subsets")
    cfg.random_channel_subsets = value == "true" || value == "1";
  else if (key == "channels_per_node") cfg.channels_per_node = as_size();
  else if (key == "queue_capacity") cfg.queue_capacity = as_size();
  else if (key == "retry_limit") cfg.retry_limit = as_size();
  else if (key == "backoff_min") cfg.backoff_min = as_double();
  else if (key == "backoff_max") cfg.backoff_max = as_double();
  else if (key == "route_ttl") cfg.route_ttl = as_size();
  else throw std::invalid_argument("unknown config key: " + key);
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

struct FileConfig {
  SimConfig sim;
  SweepSpec sweep;  // parameter empty unless set in the file
};

inline FileConfig parse_config(std::istream& in) {
  FileConfig out;
  std::string line;
  auto split_list = [](const std::string& v) {
    std::vector<std::string> parts;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) parts.push_back(item);
    }
    return parts;
  };
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("malformed config line: " + line);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "sweep") {
      out.sweep.parameter = value;
    } else if (key == "sweep_values") {
      out.sweep.values.clear();
      for (const auto& p : split_list(value))
        out.sweep.values.push_back(std::stod(p));
    } else if (key == "seeds") {
      out.sweep.seeds.clear();
      for (const auto& p : split_list(value))
        out.sweep.seeds.push_back(std::stoull(p));
    } else if (key == "protocols") {
      out.sweep.protocols.clear();
      for (const auto& p : split_list(value)) {
        if (p == "CSCR" || p == "cscr")
          out.sweep.protocols.push_back(Protocol::Cscr);
        else if (p == "UNDERCOVER" || p == "undercover")
          out.sweep.protocols.push_back(Protocol::Undercover);
        else if (p == "LAUNCH" || p == "launch")
          out.sweep.protocols.push_back(Protocol::Launch);
        else
          throw std::invalid_argument("unknown protocol: " + p);
      }
    } else {
      parse_config_line(out.sim, key, value);
    }
  }
  return out;
}

inline FileConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_config(in);
}

inline constexpr const char* kCsvHeader =
    "protocol,sweep_param,sweep_value,seed_count,goodput_bps_mean,"
    "goodput_bps_std,delay_s_mean,delay_s_std,pdr_mean,pdr_std,"
    "group_size_mean,overhead_pkts_mean";

struct SweepRow {
  std::string protocol;
  std::string sweep_param;
  double sweep_value = 0.0;
  std::size_t seed_count = 0;
  double goodput_mean = 0.0, goodput_std = 0.0;
  double delay_mean = 0.0, delay_std = 0.0;
  double pdr_mean = 0.0, pdr_std = 0.0;
  double group_size_mean = 0.0;
  double overhead_mean = 0.0;
};

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

inline MetricsReport run_one(const SimConfig& cfg, Protocol protocol) {
  auto rng = make_rng(cfg.rng_seed, RngStream::Topology);
  NetworkState state = build_topology(cfg, rng);
  auto fading = make_rng(cfg.rng_seed, RngStream::Fading);
  ChannelModel model = sample_coefficients(state, fading);
  return collect(run(state, model, cfg, protocol));
}

// One aggregated row per (value, protocol): mean and sample standard
// deviation over the seed list. Runs execute in parallel; output ordering
// is fixed by the spec ordering, so reruns are byte-identical.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec,
                                       const SimConfig& base) {
  if (spec.seeds.empty()) throw std::invalid_argument("empty seed list");
  std::vector<double> values = spec.values;
  if (!spec.parameter.empty()) {
    auto it = sweep_ranges().find(spec.parameter);
    if (it == sweep_ranges().end())
      throw std::invalid_argument("unknown sweep parameter: " +
                                  spec.parameter);
    if (values.empty()) values = default_sweep_values().at(spec.parameter);
    for (double v : values)
      if (v < it->second.first || v > it->second.second)
        throw std::invalid_argument("sweep value out of range for " +
                                    spec.parameter);
  }
  if (values.empty()) values = {0.0};  // plain run at the base config

  struct Job {
    double value;
    Protocol protocol;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (double v : values)
    for (Protocol p : spec.protocols)
      for (std::uint64_t s : spec.seeds) jobs.push_back({v, p, s});

  std::vector<MetricsReport> reports(jobs.size());
  std::vector<std::future<void>> futures;
  std::atomic<std::size_t> next{0};
  const std::size_t workers =
      std::min<std::size_t>(std::thread::hardware_concurrency() > 0
                                ? std::thread::hardware_concurrency()
                                : 4,
                            jobs.size());
  for (std::size_t w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= jobs.size()) return;
        SimConfig cfg = base;
        if (!spec.parameter.empty())
          apply_sweep_value(cfg, spec.parameter, jobs[i].value);
        cfg.rng_seed = jobs[i].seed;
        reports[i] = run_one(cfg, jobs[i].protocol);
      }
    }));
  }
  for (auto& f : futures) f.get();

  std::vector<SweepRow> rows;
  std::size_t idx = 0;
  std::map<std::pair<double, Protocol>, std::vector<MetricsReport>> grouped;
  for (const Job& j : jobs) grouped[{j.value, j.protocol}].push_back(reports[idx++]);

  for (double v : values) {
    for (Protocol p : spec.protocols) {
      const auto& rs = grouped[{v, p}];
      std::vector<double> goodput, delay, pdr, gsize, overhead;
      for (const auto& r : rs) {
        goodput.push_back(r.goodput_bps);
        delay.push_back(r.avg_delay_s);
        pdr.push_back(r.pdr);
        gsize.push_back(r.avg_group_size);
        overhead.push_back(r.overhead_pkts);
      }
      SweepRow row;
      row.protocol = protocol_name(p);
      row.sweep_param = spec.parameter.empty() ? "none" : spec.parameter;
      row.sweep_value = v;
      row.seed_count = spec.seeds.size();
      std::tie(row.goodput_mean, row.goodput_std) = mean_std(goodput);
      std::tie(row.delay_mean, row.delay_std) = mean_std(delay);
      std::tie(row.pdr_mean, row.pdr_std) = mean_std(pdr);
      row.group_size_mean = mean_std(gsize).first;
      row.overhead_mean = mean_std(overhead).first;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::string to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  char buf[64];
  auto num = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return std::string(buf);
  };
  for (const SweepRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%g", r.sweep_value);
    os << r.protocol << ',' << r.sweep_param << ',' << buf << ','
       << r.seed_count << ',' << num(r.goodput_mean) << ','
       << num(r.goodput_std) << ',' << num(r.delay_mean) << ','
       << num(r.delay_std) << ',' << num(r.pdr_mean) << ',' << num(r.pdr_std)
       << ',' << num(r.group_size_mean) << ',' << num(r.overhead_mean)
       << '\n';
  }
  return os.str();
}

}  // namespace cscr
