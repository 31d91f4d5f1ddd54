// SPDX-License-Identifier: Apache-2.0
//
// Backplane interconnect graphs: fully parallel star, parallel daisy-chains
// and the nearest-neighbour mesh.  Modules are numbered row-major over the
// module grid (id = row * cols + col); the central processor is node N.

#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <ostream>
#include <string>
#include <vector>

#include "lis/core.hpp"

namespace lis {

class TopologyError : public Error {
 public:
  using Error::Error;
};

/// Some module has no remaining path to the central processor.
class Disconnected : public TopologyError {
 public:
  using TopologyError::TopologyError;
};

/// Operation needs a kind of topology it was not given.
class UnsupportedTopology : public TopologyError {
 public:
  using TopologyError::TopologyError;
};

enum class TopologyKind { FullyParallel, DaisyChain, Mesh };

std::string to_string(TopologyKind kind);
TopologyKind parse_topology_kind(const std::string& text);  // parallel | chain | mesh

using NodeId = std::int64_t;
using LinkId = std::size_t;

struct Link {
  NodeId src{};
  NodeId dst{};
  double length_m{};

  bool joins(NodeId a, NodeId b) const { return (src == a && dst == b) || (src == b && dst == a); }
};

class Topology {
 public:
  Topology(TopologyKind kind, GridShape grid, std::vector<Link> links,
           std::vector<std::vector<NodeId>> routes);

  TopologyKind kind() const { return kind_; }
  GridShape grid() const { return grid_; }
  std::int64_t module_count() const { return grid_.rows * grid_.cols; }
  NodeId central() const { return module_count(); }
  std::int64_t node_count() const { return module_count() + 1; }

  const std::vector<Link>& links() const { return links_; }
  /// Path from module `m` to the central processor, both ends included.
  const std::vector<NodeId>& route(NodeId m) const { return routes_.at(static_cast<std::size_t>(m)); }
  const std::vector<std::vector<NodeId>>& routes() const { return routes_; }

  /// Links on the route, i.e. the number of node-to-node traversals.
  std::int64_t hop_count(NodeId m) const { return static_cast<std::int64_t>(route(m).size()) - 1; }
  std::int64_t max_hop_count() const;
  /// First node after `m` on its route; the central processor for heads.
  NodeId next_hop(NodeId m) const { return route(m).at(1); }

  std::optional<LinkId> find_link(NodeId a, NodeId b) const;
  /// Link between a module and its next hop.
  LinkId uplink(NodeId m) const;

  /// Modules ordered so that every module comes after all modules routed
  /// through it (deepest first, ties by id).
  std::vector<NodeId> children_first_order() const;

 private:
  TopologyKind kind_;
  GridShape grid_;
  std::vector<Link> links_;
  std::vector<std::vector<NodeId>> routes_;
  std::map<std::pair<NodeId, NodeId>, LinkId> link_index_;
};

Topology build_fully_parallel(const SurfaceConfig& config);
Topology build_daisy_chains(const SurfaceConfig& config);
Topology build_mesh(const SurfaceConfig& config);
Topology build_topology(const SurfaceConfig& config, TopologyKind kind);

/// Mesh only: drops `failed` and recomputes shortest-hop routes.
Topology reroute_on_failure(const Topology& topology, LinkId failed);

/// `src dst length_m` per link, then a `# routes` section.  The central
/// processor is written as `cp`.
void export_edge_list(const Topology& topology, std::ostream& out);

std::string node_name(const Topology& topology, NodeId node);
NodeId parse_node_name(const Topology& topology, const std::string& name);

}  // namespace lis
