// SPDX-License-Identifier: Apache-2.0

#include "lis/netsim.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <tuple>

namespace lis {

namespace {

struct SymbolPlan {
  std::vector<SimEvent> events;
  std::int64_t modules_delivered{};
  std::int64_t missing{};
  std::int64_t misaligned{};
};

// One symbol's traffic over `topo` starting at `base`.  Link ids are mapped
// back onto the original topology through `link_map`.
SymbolPlan plan_symbol(const Topology& topo, const std::vector<LinkId>& link_map,
                       const std::vector<std::int64_t>& depths, SimMode mode, Direction direction,
                       std::int64_t payload, std::int64_t symbol, std::int64_t base) {
  SymbolPlan plan;
  const NodeId cp = topo.central();
  auto emit = [&](std::int64_t step, NodeId src, NodeId dst, PayloadKind kind, std::int64_t carried) {
    const LinkId local = *topo.find_link(src, dst);
    plan.events.push_back(SimEvent{step, link_map[local], src, dst, kind, payload, symbol, carried});
  };
  const auto depth = [&](NodeId m) { return depths[static_cast<std::size_t>(m)]; };

  if (mode == SimMode::Distributed && direction == Direction::Uplink) {
    // Partial sums fold into the parent's accumulator when they arrive by the
    // parent's forwarding step; later arrivals miss the symbol.
    std::vector<std::int64_t> carried(static_cast<std::size_t>(topo.module_count()), 1);
    for (NodeId m : topo.children_first_order()) {
      const std::int64_t send = base + depth(m);
      const NodeId parent = topo.next_hop(m);
      emit(send, m, parent, PayloadKind::PartialSum, carried[static_cast<std::size_t>(m)]);
      if (parent == cp) {
        plan.modules_delivered += carried[static_cast<std::size_t>(m)];
        continue;
      }
      const std::int64_t arrival = send + 1;
      const std::int64_t parent_send = base + depth(parent);
      if (arrival != parent_send) ++plan.misaligned;
      if (arrival > parent_send) {
        ++plan.missing;
      } else {
        carried[static_cast<std::size_t>(parent)] += carried[static_cast<std::size_t>(m)];
      }
    }
    return plan;
  }

  if (mode == SimMode::Distributed) {
    // Downlink multicast: each link carries the K streams once, one step per
    // hop away from the central processor.
    for (NodeId m = 0; m < topo.module_count(); ++m) {
      emit(base + topo.hop_count(m) - 1, topo.next_hop(m), m, PayloadKind::TerminalStream, 1);
      ++plan.modules_delivered;
    }
    return plan;
  }

  // Centralized: every module's waveforms travel their route unchanged and
  // relays forward on arrival.  Same-step packets on a link are one event.
  std::map<std::pair<std::int64_t, LinkId>, std::size_t> merged;
  auto emit_merged = [&](std::int64_t step, NodeId src, NodeId dst) {
    const LinkId local = *topo.find_link(src, dst);
    auto [it, fresh] = merged.try_emplace({step, local}, plan.events.size());
    if (fresh) {
      plan.events.push_back(SimEvent{step, link_map[local], src, dst, PayloadKind::AntennaWaveform, payload, symbol, 1});
    } else {
      plan.events[it->second].bits += payload;
      plan.events[it->second].modules_carried += 1;
    }
  };
  for (NodeId m = 0; m < topo.module_count(); ++m) {
    const auto& route = topo.route(m);
    const std::size_t hops = route.size() - 1;
    if (direction == Direction::Uplink) {
      const std::int64_t start = base + depth(m);
      for (std::size_t i = 0; i < hops; ++i) {
        emit_merged(start + static_cast<std::int64_t>(i), route[i], route[i + 1]);
      }
    } else {
      for (std::size_t i = 0; i < hops; ++i) {
        emit_merged(base + static_cast<std::int64_t>(i), route[hops - i], route[hops - i - 1]);
      }
    }
    ++plan.modules_delivered;
  }
  std::sort(plan.events.begin(), plan.events.end(),
            [](const SimEvent& a, const SimEvent& b) { return std::tie(a.step, a.link) < std::tie(b.step, b.link); });
  return plan;
}

std::vector<LinkId> identity_map(const Topology& t) {
  std::vector<LinkId> map(t.links().size());
  for (LinkId i = 0; i < map.size(); ++i) map[i] = i;
  return map;
}

std::vector<LinkId> map_onto(const Topology& from, const Topology& onto) {
  std::vector<LinkId> map;
  map.reserve(from.links().size());
  for (const auto& l : from.links()) map.push_back(*onto.find_link(l.src, l.dst));
  return map;
}

std::int64_t scaled_payload(std::int64_t bits, Ratio overhead) {
  const Ratio r = overhead.reduced();
  if (r.num < 1 || r.den < 1) throw RangeError("overhead factor must be positive");
  if ((bits * r.num) % r.den != 0) throw RangeError("overhead leaves a fractional payload");
  return bits * r.num / r.den;
}

}  // namespace

std::string to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::AntennaWaveform: return "antenna_waveform";
    case PayloadKind::PartialSum: return "partial_sum";
    case PayloadKind::TerminalStream: return "terminal_stream";
  }
  return "?";
}

SimMode parse_sim_mode(const std::string& text) {
  if (text == "centralized") return SimMode::Centralized;
  if (text == "distributed") return SimMode::Distributed;
  throw ConfigError("unknown scheme '" + text + "' (expected centralized or distributed)");
}

std::int64_t SimResult::total_bits() const {
  std::int64_t total = 0;
  for (const auto& l : loads) total += l.total_bits;
  return total;
}

const LinkLoad& SimResult::load_between(NodeId a, NodeId b) const {
  for (const auto& l : loads) {
    if ((l.src == a && l.dst == b) || (l.src == b && l.dst == a)) return l;
  }
  throw TopologyError("no link between " + std::to_string(a) + " and " + std::to_string(b));
}

std::vector<std::int64_t> compute_buffer_depths(const Topology& topology) {
  const std::int64_t deepest = topology.max_hop_count();
  std::vector<std::int64_t> depths(static_cast<std::size_t>(topology.module_count()));
  for (NodeId m = 0; m < topology.module_count(); ++m) {
    depths[static_cast<std::size_t>(m)] = deepest - topology.hop_count(m);
  }
  return depths;
}

std::int64_t antenna_payload_bits(const SurfaceConfig& config) {
  validate(config);
  const Ratio os = config.oversampling.reduced();
  return config.antennas_per_module() * (2 * config.adc_bits * os.num / os.den);
}

std::int64_t terminal_payload_bits(const SurfaceConfig& config) {
  validate(config);
  return 2 * config.terminals * config.beamf_bits;
}

Simulation::Simulation(SurfaceConfig config, Topology topology, SimMode mode, SimOptions options)
    : config_(std::move(config)), topology_(std::move(topology)), mode_(mode), options_(std::move(options)) {
  validate(config_);
  if (topology_.module_count() != config_.modules) {
    throw TopologyError("topology has " + std::to_string(topology_.module_count()) + " modules, config has " +
                        std::to_string(config_.modules));
  }
  if (options_.buffer_depths) {
    if (static_cast<std::int64_t>(options_.buffer_depths->size()) != config_.modules) {
      throw RangeError("need one buffer depth per module");
    }
    for (auto d : *options_.buffer_depths) {
      if (d < 0) throw RangeError("buffer depths must be >= 0");
    }
  }
}

void Simulation::inject_failure(LinkId link, std::int64_t at_step) {
  if (at_step < 0) throw RangeError("failure step must be >= 0");
  rerouted_ = reroute_on_failure(topology_, link);
  failure_step_ = at_step;
}

void Simulation::inject_failure(NodeId a, NodeId b, std::int64_t at_step) {
  const auto link = topology_.find_link(a, b);
  if (!link) throw TopologyError("no link between " + node_name(topology_, a) + " and " + node_name(topology_, b));
  inject_failure(*link, at_step);
}

SimResult Simulation::run(std::int64_t duration_symbols) const {
  if (duration_symbols < 1) throw RangeError("simulation needs at least one symbol");
  const std::int64_t payload = scaled_payload(
      mode_ == SimMode::Centralized ? antenna_payload_bits(config_) : terminal_payload_bits(config_),
      options_.overhead);

  const auto original_depths = options_.buffer_depths.value_or(compute_buffer_depths(topology_));
  const auto original_map = identity_map(topology_);
  std::vector<std::int64_t> rerouted_depths;
  std::vector<LinkId> rerouted_map;
  if (rerouted_) {
    rerouted_depths = options_.buffer_depths.value_or(compute_buffer_depths(*rerouted_));
    rerouted_map = map_onto(*rerouted_, topology_);
  }
  const std::int64_t fail_at = failure_step_.value_or(std::numeric_limits<std::int64_t>::max());

  SimResult result;
  result.duration_symbols = duration_symbols;
  for (std::int64_t s = 0; s < duration_symbols; ++s) {
    SymbolPlan plan = plan_symbol(topology_, original_map, original_depths, mode_, options_.direction, payload, s, s);
    const bool touches_failure =
        rerouted_ && std::any_of(plan.events.begin(), plan.events.end(),
                                 [&](const SimEvent& e) { return e.step >= fail_at; });
    if (touches_failure) {
      plan = plan_symbol(*rerouted_, rerouted_map, rerouted_depths, mode_, options_.direction, payload, s,
                         std::max(s, fail_at));
      ++result.symbols_rerouted;
    } else {
      ++result.symbols_on_original;
    }
    if (plan.modules_delivered == config_.modules) ++result.delivered_symbols;
    result.missing_addends += plan.missing;
    result.misaligned_addends += plan.misaligned;
    result.trace.insert(result.trace.end(), plan.events.begin(), plan.events.end());
  }

  std::stable_sort(result.trace.begin(), result.trace.end(), [](const SimEvent& a, const SimEvent& b) {
    return std::tie(a.step, a.link, a.symbol) < std::tie(b.step, b.link, b.symbol);
  });

  std::vector<std::map<std::int64_t, std::int64_t>> per_step(topology_.links().size());
  result.loads.resize(topology_.links().size());
  for (LinkId i = 0; i < topology_.links().size(); ++i) {
    result.loads[i] = LinkLoad{i, topology_.links()[i].src, topology_.links()[i].dst, 0, 0};
  }
  for (const auto& e : result.trace) {
    result.loads[e.link].total_bits += e.bits;
    per_step[e.link][e.step] += e.bits;
    (e.step < fail_at ? result.bits_before_failure : result.bits_after_failure) += e.bits;
  }
  for (LinkId i = 0; i < per_step.size(); ++i) {
    for (const auto& [step, bits] : per_step[i]) {
      result.loads[i].peak_bits_per_step = std::max(result.loads[i].peak_bits_per_step, bits);
    }
  }
  return result;
}

SimResult simulate_centralized(const SurfaceConfig& config, const Topology& topology, std::int64_t duration_symbols,
                               SimOptions options) {
  return Simulation(config, topology, SimMode::Centralized, std::move(options)).run(duration_symbols);
}

SimResult simulate_distributed(const SurfaceConfig& config, const Topology& topology, std::int64_t duration_symbols,
                               SimOptions options) {
  return Simulation(config, topology, SimMode::Distributed, std::move(options)).run(duration_symbols);
}

BitRate analytic_aggregate(const SurfaceConfig& config, const Topology& topology, SimMode mode) {
  if (mode == SimMode::Distributed) return distributed_aggregate(config);
  switch (topology.kind()) {
    case TopologyKind::FullyParallel: return centralized_max(config);
    case TopologyKind::DaisyChain: return centralized_aggregate(config);
    case TopologyKind::Mesh: break;
  }
  std::vector<std::int64_t> hops;
  for (NodeId m = 0; m < topology.module_count(); ++m) hops.push_back(topology.hop_count(m));
  return centralized_route_aggregate(config, hops);
}

Agreement check_agreement(const Simulation& sim, const SimResult& result) {
  const auto& config = sim.config();
  const Ratio overhead = sim.options().overhead.reduced();
  Agreement a;
  a.simulated = static_cast<WideInt>(result.total_bits()) * config.bandwidth_hz * overhead.den;
  a.expected = static_cast<WideInt>(analytic_aggregate(config, sim.topology(), sim.mode())) *
               result.symbols_on_original * overhead.num;
  if (result.symbols_rerouted > 0) {
    a.expected += static_cast<WideInt>(analytic_aggregate(config, *sim.rerouted(), sim.mode())) *
                  result.symbols_rerouted * overhead.num;
  }
  a.pass = a.simulated == a.expected;
  return a;
}

void write_trace_csv(const Topology& topology, const SimResult& result, std::ostream& out) {
  out << "step,link_src,link_dst,payload_kind,bits\n";
  for (const auto& e : result.trace) {
    out << e.step << ',' << node_name(topology, e.src) << ',' << node_name(topology, e.dst) << ','
        << to_string(e.kind) << ',' << e.bits << '\n';
  }
}

void write_loads_csv(const Topology& topology, const SimResult& result, std::ostream& out) {
  out << "link_src,link_dst,total_bits,peak_bits_per_step\n";
  for (const auto& l : result.loads) {
    out << node_name(topology, l.src) << ',' << node_name(topology, l.dst) << ',' << l.total_bits << ','
        << l.peak_bits_per_step << '\n';
  }
}

}  // namespace lis
