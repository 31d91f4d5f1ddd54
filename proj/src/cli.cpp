// SPDX-License-Identifier: Apache-2.0

#include "lis/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "lis/beamforming.hpp"
#include "lis/netsim.hpp"
#include "lis/sample_io.hpp"
#include "lis/topology.hpp"

namespace lis::cli {

namespace {

Scheme rates_scheme(const std::string& scheme, TopologyKind topology) {
  if (scheme == "distributed") return Scheme::DistributedBeamforming;
  if (scheme == "centralized") {
    return topology == TopologyKind::FullyParallel ? Scheme::CentralizedParallel : Scheme::CentralizedChained;
  }
  return parse_scheme(scheme);
}

std::int64_t largest_divisor_at_most(std::int64_t n, std::int64_t cap) {
  for (std::int64_t d = std::min(n, cap); d > 1; --d) {
    if (n % d == 0) return d;
  }
  return 1;
}

const std::set<std::string>& sweep_keys() {
  static const std::set<std::string> keys = {"sweep_m", "ratio_m_over_k", "modules_per", "schemes"};
  return keys;
}

std::pair<NodeId, NodeId> parse_link_spec(const Topology& topology, const std::string& spec) {
  const auto dash = spec.find('-');
  if (dash == std::string::npos) throw ConfigError("failure link must look like 'src-dst', got '" + spec + "'");
  return {parse_node_name(topology, spec.substr(0, dash)), parse_node_name(topology, spec.substr(dash + 1))};
}

}  // namespace

int cmd_rates(const RatesArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const SurfaceConfig config = load_config(args.config);
    const Scheme scheme = rates_scheme(args.scheme, parse_topology_kind(args.topology));
    const ThroughputReport r = report(config, scheme);
    out << report_csv_header() << '\n' << report_csv_row(config, r) << '\n';
    err << "r_max_central: " << format_gbps(r.r_max_central) << " (" << format_gibps(r.r_max_central) << ")\n"
        << "r_aggregate:   " << format_gbps(r.r_aggregate) << " (" << format_gibps(r.r_aggregate) << ")\n"
        << "power:         " << r.power_backplane * 1e3 << " mW\n";
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

SweepSpec parse_sweep(const KeyValues& kv) {
  SweepSpec spec;
  for (const char* derived : {"antennas", "modules", "terminals", "grid_rows", "grid_cols"}) {
    if (kv.contains(derived)) {
      throw ParseError(std::string("'") + derived + "' is derived per sweep point and cannot be set");
    }
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw ParseError("sweep needs '" + key + "'");
    return it->second;
  };

  const std::string& range = need("sweep_m");
  const auto c1 = range.find(':');
  const auto c2 = range.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw ParseError("sweep_m must be start:stop:xfactor or start:stop:+step");
  }
  spec.m_start = parse_integer("sweep_m", range.substr(0, c1));
  spec.m_stop = parse_integer("sweep_m", range.substr(c1 + 1, c2 - c1 - 1));
  std::string step = range.substr(c2 + 1);
  if (!step.empty() && step.front() == 'x') {
    spec.multiplicative = true;
    step.erase(0, 1);
  } else if (!step.empty() && step.front() == '+') {
    spec.multiplicative = false;
    step.erase(0, 1);
  } else {
    throw ParseError("sweep_m step must start with 'x' (factor) or '+' (increment)");
  }
  spec.m_step = parse_integer("sweep_m", step);
  if (spec.m_start < 1 || spec.m_stop < spec.m_start) throw ParseError("sweep_m needs 1 <= start <= stop");
  if ((spec.multiplicative && spec.m_step < 2) || (!spec.multiplicative && spec.m_step < 1)) {
    throw ParseError("sweep_m step does not advance");
  }
  spec.ratio_m_over_k = parse_integer("ratio_m_over_k", need("ratio_m_over_k"));
  spec.modules_per = parse_integer("modules_per", need("modules_per"));
  if (spec.ratio_m_over_k < 1 || spec.modules_per < 1) {
    throw ParseError("ratio_m_over_k and modules_per must be >= 1");
  }
  if (auto it = kv.find("schemes"); it != kv.end()) {
    spec.schemes.clear();
    std::stringstream ss(it->second);
    std::string name;
    while (std::getline(ss, name, ',')) {
      name.erase(std::remove_if(name.begin(), name.end(), ::isspace), name.end());
      if (!name.empty()) spec.schemes.push_back(parse_scheme(name));
    }
    std::sort(spec.schemes.begin(), spec.schemes.end());
    spec.schemes.erase(std::unique(spec.schemes.begin(), spec.schemes.end()), spec.schemes.end());
    if (spec.schemes.empty()) throw ParseError("schemes list is empty");
  }
  for (const auto& [key, value] : kv) {
    if (!sweep_keys().contains(key)) spec.base.emplace(key, value);
  }
  // Surface a bad base key now rather than once per point.
  KeyValues probe = spec.base;
  probe["antennas"] = "1";
  probe["modules"] = "1";
  probe["terminals"] = "1";
  probe.erase("chains");
  config_from_key_values(probe);
  return spec;
}

std::vector<SweepPoint> expand_sweep(const SweepSpec& spec, std::ostream& warnings) {
  std::vector<SweepPoint> points;
  for (std::int64_t m = spec.m_start; m <= spec.m_stop;
       m = spec.multiplicative ? m * spec.m_step : m + spec.m_step) {
    if (m % spec.ratio_m_over_k != 0) {
      warnings << "warning: skipping M=" << m << ": M/K=" << spec.ratio_m_over_k << " leaves K fractional\n";
      continue;
    }
    if (m % spec.modules_per != 0) {
      warnings << "warning: skipping M=" << m << ": modules_per=" << spec.modules_per << " does not divide M\n";
      continue;
    }
    const std::int64_t n = m / spec.modules_per;
    KeyValues kv = spec.base;
    kv["antennas"] = std::to_string(m);
    kv["modules"] = std::to_string(n);
    kv["terminals"] = std::to_string(m / spec.ratio_m_over_k);
    const std::int64_t requested = kv.contains("chains") ? parse_integer("chains", kv.at("chains")) : 1;
    if (requested < 1) throw ParseError("chains must be >= 1");
    const std::int64_t chains = largest_divisor_at_most(n, requested);
    if (chains != requested) {
      warnings << "warning: M=" << m << ": chains=" << requested << " does not divide N=" << n << ", using "
               << chains << '\n';
    }
    kv["chains"] = std::to_string(chains);
    try {
      points.push_back(SweepPoint{config_from_key_values(kv), requested});
    } catch (const ConfigError& e) {
      warnings << "warning: skipping M=" << m << ": " << e.what() << '\n';
    }
  }
  return points;
}

int cmd_scan(const std::string& sweep_path, std::ostream& out, std::ostream& err) {
  std::vector<std::pair<std::pair<std::int64_t, Scheme>, std::string>> rows;
  try {
    const SweepSpec spec = parse_sweep(read_key_values_file(sweep_path));
    for (const auto& point : expand_sweep(spec, err)) {
      for (Scheme scheme : spec.schemes) {
        rows.push_back({{point.config.antennas, scheme}, report_csv_row(point.config, report(point.config, scheme))});
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  out << report_csv_header() << '\n';
  for (const auto& [key, row] : rows) out << row << '\n';
  return kExitOk;
}

int cmd_verify(const VerifyArgs& args, std::ostream& out, std::ostream& err) {
  SurfaceConfig config;
  std::vector<TopologyKind> kinds;
  BeamformingMethod method{};
  std::optional<SampleBlock> golden;
  try {
    config = load_config(args.config);
    if (args.topology) {
      kinds.push_back(parse_topology_kind(*args.topology));
    } else {
      kinds = {TopologyKind::FullyParallel, TopologyKind::DaisyChain, TopologyKind::Mesh};
    }
    if (args.method == "zf") {
      method = BeamformingMethod::ZF;
    } else if (args.method == "mrc") {
      method = BeamformingMethod::MRC;
    } else {
      throw ConfigError("method must be zf or mrc");
    }
    if (args.symbols < 1 || args.subcarriers < 1) throw ConfigError("symbols and subcarriers must be >= 1");
    if (!args.golden.empty()) golden = load_sample_block(args.golden, SampleDomain::Terminal);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    const auto nsc = static_cast<std::size_t>(args.subcarriers);
    const ChannelMatrix h = generate_channel(config.antennas, config.terminals, nsc, args.seed);
    const BeamformingWeights w = compute_weights(h, method);
    const SampleBlock x = random_symbols(config.terminals, args.symbols, nsc, args.seed + 1);
    const SampleBlock y = propagate(h, x);
    const SampleBlock up_reference = centralized_uplink(w, y);
    const SampleBlock down_reference = centralized_downlink(w, x);

    double worst = 0.0;
    bool wrote = false;
    out << std::scientific << std::setprecision(3);
    for (TopologyKind kind : kinds) {
      const Topology topology = build_topology(config, kind);
      const auto depths = compute_buffer_depths(topology);
      auto modules = make_modules(w, topology, depths);
      if (args.corrupt_weights) modules.back().weights.front()(0, 0) += Complex(1e-3, 0.0);
      const UplinkResult up = distributed_uplink(modules, y, topology);
      const SampleBlock down = distributed_downlink(modules, x, topology);
      const double up_dev = max_abs_deviation(up.estimate, up_reference);
      const double down_dev = max_abs_deviation(down, down_reference);
      double golden_dev = 0.0;
      if (golden) golden_dev = max_abs_deviation(up.estimate, *golden);
      const double dev = std::max({up_dev, down_dev, golden_dev});
      worst = std::max(worst, dev);
      out << "topology=" << to_string(kind) << " uplink_max_dev=" << up_dev << " downlink_max_dev=" << down_dev;
      if (golden) out << " golden_max_dev=" << golden_dev;
      out << ' ' << (dev < kVerifyTolerance ? "PASS" : "FAIL") << '\n';
      if (!args.out.empty() && !wrote) {
        save_sample_block(args.out, up.estimate);
        wrote = true;
      }
    }
    out << "max_deviation=" << worst << ' ' << (worst < kVerifyTolerance ? "PASS" : "FAIL") << '\n';
    return worst < kVerifyTolerance ? kExitOk : kExitFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  std::optional<Simulation> sim;
  try {
    const SurfaceConfig config = load_config(args.config);
    const Topology topology = build_topology(config, parse_topology_kind(args.topology));
    SimOptions options;
    if (args.direction == "uplink") {
      options.direction = Direction::Uplink;
    } else if (args.direction == "downlink") {
      options.direction = Direction::Downlink;
    } else {
      throw ConfigError("direction must be uplink or downlink");
    }
    if (args.duration < 1) throw ConfigError("duration must be >= 1 symbol");
    sim.emplace(config, topology, parse_sim_mode(args.scheme), options);
    if (!args.fail_link.empty()) {
      const auto [a, b] = parse_link_spec(topology, args.fail_link);
      try {
        sim->inject_failure(a, b, args.fail_step);
      } catch (const Disconnected& e) {
        err << "error: link " << args.fail_link << " failure: Disconnected: " << e.what() << '\n';
        return kExitFailed;
      }
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  const SimResult result = sim->run(args.duration);
  const Agreement agreement = check_agreement(*sim, result);
  const Topology& topology = sim->topology();

  std::ostream* summary = &out;
  if (args.out.empty()) {
    write_loads_csv(topology, result, out);
    summary = &err;
  } else {
    std::ofstream trace(args.out + ".trace.csv");
    std::ofstream loads(args.out + ".loads.csv");
    if (!trace || !loads) {
      err << "error: cannot write outputs under '" << args.out << "'\n";
      return kExitUsage;
    }
    write_trace_csv(topology, result, trace);
    write_loads_csv(topology, result, loads);
  }

  const auto& config = sim->config();
  const NodeId cp = topology.central();
  std::int64_t central_bits = 0;
  for (const auto& l : result.loads) {
    if (l.src == cp || l.dst == cp) central_bits += l.total_bits;
  }
  const auto per_second = [&](std::int64_t bits) {
    return static_cast<double>(bits) * static_cast<double>(config.bandwidth_hz) / static_cast<double>(args.duration);
  };
  *summary << "symbols=" << result.duration_symbols << " delivered=" << result.delivered_symbols
           << " missing_addends=" << result.missing_addends << '\n'
           << "total_bits=" << result.total_bits() << " aggregate_rate_bps=" << std::fixed << std::setprecision(0)
           << per_second(result.total_bits()) << '\n'
           << "central_link_bits=" << central_bits << " central_rate_bps=" << per_second(central_bits) << '\n';
  if (sim->failure_step()) {
    *summary << "failure_step=" << *sim->failure_step() << " bits_before=" << result.bits_before_failure
             << " bits_after=" << result.bits_after_failure << " rerouted_symbols=" << result.symbols_rerouted
             << '\n';
  }
  const bool delivered = result.delivered_symbols == result.duration_symbols;
  const bool pass = agreement.pass && delivered;
  *summary << "agreement: " << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? kExitOk : kExitFailed;
}

int cmd_export_topology(const ExportArgs& args, std::ostream& out, std::ostream& err) {
  try {
    const SurfaceConfig config = load_config(args.config);
    const Topology topology = build_topology(config, parse_topology_kind(args.topology));
    if (args.out.empty()) {
      export_edge_list(topology, out);
    } else {
      std::ofstream file(args.out);
      if (!file) throw ConfigError("cannot write '" + args.out + "'");
      export_edge_list(topology, file);
    }
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Backplane throughput, beamforming and simulation toolkit for large intelligent surfaces", "lis"};
  app.require_subcommand(1);

  RatesArgs rates;
  auto* rates_cmd = app.add_subcommand("rates", "closed-form throughput report for one configuration");
  rates_cmd->add_option("--config", rates.config, "configuration file")->required();
  rates_cmd->add_option("--topology", rates.topology, "parallel | chain | mesh");
  rates_cmd->add_option("--scheme", rates.scheme,
                        "centralized | distributed | centralized_parallel | centralized_chained");

  std::string sweep_path;
  auto* scan_cmd = app.add_subcommand("scan", "sweep M at a fixed M/K and report every point");
  scan_cmd->add_option("--config,sweep", sweep_path, "sweep file")->required();

  VerifyArgs verify;
  std::string verify_topology;
  auto* verify_cmd = app.add_subcommand("verify", "distributed vs centralized beamforming on random channels");
  verify_cmd->add_option("--config", verify.config, "configuration file")->required();
  verify_cmd->add_option("--seed", verify.seed, "random seed");
  verify_cmd->add_option("--topology", verify_topology, "parallel | chain | mesh (default: all)");
  verify_cmd->add_option("--method", verify.method, "zf | mrc");
  verify_cmd->add_option("--symbols", verify.symbols, "symbols per subcarrier");
  verify_cmd->add_option("--subcarriers", verify.subcarriers, "number of subcarriers");
  verify_cmd->add_option("--out", verify.out, "write the distributed uplink sample block");
  verify_cmd->add_option("--golden", verify.golden, "compare the distributed uplink against this block");
  verify_cmd->add_flag("--corrupt-weights", verify.corrupt_weights, "perturb one module weight (negative control)");

  SimulateArgs simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "hop-level traffic simulation with link accounting");
  sim_cmd->add_option("--config", simulate.config, "configuration file")->required();
  sim_cmd->add_option("--topology", simulate.topology, "parallel | chain | mesh");
  sim_cmd->add_option("--scheme", simulate.scheme, "centralized | distributed");
  sim_cmd->add_option("--direction", simulate.direction, "uplink | downlink");
  sim_cmd->add_option("--duration", simulate.duration, "symbols to simulate");
  sim_cmd->add_option("--fail-link", simulate.fail_link, "link to fail, e.g. 0-1 or 0-cp");
  sim_cmd->add_option("--fail-step", simulate.fail_step, "step at which the link fails");
  sim_cmd->add_option("--out", simulate.out, "prefix for <out>.trace.csv and <out>.loads.csv");

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export-topology", "edge list and routes of a backplane topology");
  export_cmd->add_option("--config", exp.config, "configuration file")->required();
  export_cmd->add_option("--topology", exp.topology, "parallel | chain | mesh");
  export_cmd->add_option("--out", exp.out, "output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*rates_cmd) return cmd_rates(rates, out, err);
  if (*scan_cmd) return cmd_scan(sweep_path, out, err);
  if (*verify_cmd) {
    if (!verify_topology.empty()) verify.topology = verify_topology;
    return cmd_verify(verify, out, err);
  }
  if (*sim_cmd) return cmd_simulate(simulate, out, err);
  if (*export_cmd) return cmd_export_topology(exp, out, err);
  return kExitUsage;
}

}  // namespace lis::cli
