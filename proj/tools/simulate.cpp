#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cscr/cscr.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cognitive radio cooperative-routing simulator"};

  std::string config_path;
  std::string sweep_param;
  std::string protocols_arg;
  std::size_t seed_count = 0;
  std::string out_path;
  std::string trace_path;

  app.add_option("--config", config_path, "flat key=value configuration file");
  app.add_option("--sweep", sweep_param,
                 "sweep parameter (num_sus, num_pus, pu_activity, "
                 "num_channels, num_flows)");
  app.add_option("--protocols", protocols_arg,
                 "comma-separated subset of CSCR,UNDERCOVER,LAUNCH");
  app.add_option("--seeds", seed_count,
                 "number of consecutive seeds starting at rng_seed");
  app.add_option("--out", out_path, "CSV output file (default stdout)");
  app.add_option("--trace", trace_path,
                 "event-trace dump (single run, first protocol only)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  cscr::FileConfig file;
  try {
    if (!config_path.empty()) file = cscr::parse_config_file(config_path);
    if (!sweep_param.empty()) file.sweep.parameter = sweep_param;
    if (!protocols_arg.empty()) {
      std::istringstream ss(protocols_arg + ",");
      file.sweep.protocols.clear();
      std::string p;
      while (std::getline(ss, p, ',')) {
        p = cscr::trim(p);
        if (p.empty()) continue;
        if (p == "CSCR") file.sweep.protocols.push_back(cscr::Protocol::Cscr);
        else if (p == "UNDERCOVER")
          file.sweep.protocols.push_back(cscr::Protocol::Undercover);
        else if (p == "LAUNCH")
          file.sweep.protocols.push_back(cscr::Protocol::Launch);
        else throw std::invalid_argument("unknown protocol: " + p);
      }
    }
    if (seed_count > 0) {
      file.sweep.seeds.clear();
      for (std::size_t i = 0; i < seed_count; ++i)
        file.sweep.seeds.push_back(file.sim.rng_seed + i);
    }
    if (file.sweep.seeds.empty())
      for (std::size_t i = 0; i < 10; ++i)
        file.sweep.seeds.push_back(file.sim.rng_seed + i);
    file.sim.validate();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (!trace_path.empty()) {
      auto rng = cscr::make_rng(file.sim.rng_seed, cscr::RngStream::Topology);
      auto state = cscr::build_topology(file.sim, rng);
      auto fading = cscr::make_rng(file.sim.rng_seed, cscr::RngStream::Fading);
      auto model = cscr::sample_coefficients(state, fading);
      auto raw = cscr::run(state, model, file.sim,
                           file.sweep.protocols.front(), true);
      std::ofstream tf(trace_path);
      for (const auto& line : raw.trace) tf << line << '\n';
    }

    const auto rows = cscr::run_sweep(file.sweep, file.sim);
    const std::string csv = cscr::to_csv(rows);
    if (out_path.empty()) {
      std::cout << csv;
    } else {
      std::ofstream out(out_path);
      out << csv;
    }
  } catch (const std::exception& e) {
    std::cerr << "simulation failure: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
