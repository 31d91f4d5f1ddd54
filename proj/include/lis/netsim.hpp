// SPDX-License-Identifier: Apache-2.0
//
// Hop-level backplane simulator.  Time advances in hop steps: one link
// traversal per step, one symbol injected per step.  There is no queueing;
// the simulator accounts the bits every link carries and checks that the
// per-module buffers line partial sums up at each aggregation point.

#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lis/beamforming.hpp"
#include "lis/core.hpp"
#include "lis/rates.hpp"
#include "lis/topology.hpp"

namespace lis {

enum class PayloadKind { AntennaWaveform, PartialSum, TerminalStream };

std::string to_string(PayloadKind kind);

/// Where beamforming happens.  Centralized ships antenna waveforms to the
/// central processor; distributed ships K-wide partial sums (uplink) or the
/// K terminal streams (downlink).
enum class SimMode { Centralized, Distributed };

SimMode parse_sim_mode(const std::string& text);  // centralized | distributed

struct SimEvent {
  std::int64_t step{};
  LinkId link{};  // id in the topology the simulation was built on
  NodeId src{};
  NodeId dst{};
  PayloadKind kind{};
  std::int64_t bits{};
  std::int64_t symbol{};
  std::int64_t modules_carried{};  // module contributions folded into this payload

  friend bool operator==(const SimEvent&, const SimEvent&) = default;
};

struct LinkLoad {
  LinkId link{};
  NodeId src{};
  NodeId dst{};
  std::int64_t total_bits{};
  std::int64_t peak_bits_per_step{};

  friend bool operator==(const LinkLoad&, const LinkLoad&) = default;
};

struct SimOptions {
  Direction direction{Direction::Uplink};
  /// Multiplies every payload; the product must stay a whole number of bits.
  Ratio overhead{1, 1};
  /// Per-module buffer depths; defaults to compute_buffer_depths.
  std::optional<std::vector<std::int64_t>> buffer_depths;
};

struct SimResult {
  std::vector<SimEvent> trace;
  std::vector<LinkLoad> loads;  // one per link, in topology link order
  std::int64_t duration_symbols{};
  std::int64_t delivered_symbols{};
  /// Aggregations where a child's partial sum arrived after the parent had
  /// already forwarded; that contribution is lost for the symbol.
  std::int64_t missing_addends{};
  /// Aggregations where an addend arrived at any step other than the
  /// parent's forwarding step.
  std::int64_t misaligned_addends{};
  std::int64_t symbols_on_original{};
  std::int64_t symbols_rerouted{};
  std::int64_t bits_before_failure{};
  std::int64_t bits_after_failure{};

  std::int64_t total_bits() const;
  const LinkLoad& load_between(NodeId a, NodeId b) const;
};

/// depth(m) = max hop count - hop count(m).  With these delays every
/// partial sum of a symbol reaches its aggregation point on the same step.
std::vector<std::int64_t> compute_buffer_depths(const Topology& topology);

/// Bits one module puts on its link per symbol in centralized mode:
/// (M/N) antennas x 2 components x adc_bits x oversampling.
std::int64_t antenna_payload_bits(const SurfaceConfig& config);
/// Bits of one K-wide beamformed sample: 2 K beamf_bits.
std::int64_t terminal_payload_bits(const SurfaceConfig& config);

class Simulation {
 public:
  Simulation(SurfaceConfig config, Topology topology, SimMode mode, SimOptions options = {});

  /// Fail-stop of one link from `at_step` on.  Only meshes can route around
  /// it; Disconnected and UnsupportedTopology propagate from rerouting.
  void inject_failure(LinkId link, std::int64_t at_step);
  void inject_failure(NodeId a, NodeId b, std::int64_t at_step);

  /// Symbols whose whole delivery on the original routes ends before the
  /// failure step use them; every later symbol is sent over the rerouted
  /// topology, starting no earlier than the failure step.
  SimResult run(std::int64_t duration_symbols) const;

  const SurfaceConfig& config() const { return config_; }
  const Topology& topology() const { return topology_; }
  const std::optional<Topology>& rerouted() const { return rerouted_; }
  std::optional<std::int64_t> failure_step() const { return failure_step_; }
  SimMode mode() const { return mode_; }
  const SimOptions& options() const { return options_; }

 private:
  SurfaceConfig config_;
  Topology topology_;
  SimMode mode_;
  SimOptions options_;
  std::optional<Topology> rerouted_;
  std::optional<std::int64_t> failure_step_;
};

SimResult simulate_centralized(const SurfaceConfig& config, const Topology& topology, std::int64_t duration_symbols,
                               SimOptions options = {});
SimResult simulate_distributed(const SurfaceConfig& config, const Topology& topology, std::int64_t duration_symbols,
                               SimOptions options = {});

/// The closed-form aggregate a run on `topology` must reproduce: the star
/// and chain formulas for those topologies, the per-hop sum for meshes and
/// 2 N K B beamf_bits for distributed runs.
BitRate analytic_aggregate(const SurfaceConfig& config, const Topology& topology, SimMode mode);

/// Wide enough for bits x Hz products over long runs.
__extension__ typedef __int128 WideInt;

struct Agreement {
  bool pass{};
  /// Both sides scaled to bits x Hz so the comparison stays integral.
  WideInt simulated{};
  WideInt expected{};
};

/// Compares simulated bits per second with the rates module, splitting the
/// expectation across original and rerouted symbols.
Agreement check_agreement(const Simulation& sim, const SimResult& result);

void write_trace_csv(const Topology& topology, const SimResult& result, std::ostream& out);
void write_loads_csv(const Topology& topology, const SimResult& result, std::ostream& out);

}  // namespace lis
