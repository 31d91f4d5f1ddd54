// SPDX-License-Identifier: Apache-2.0

#include "lis/topology.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>

namespace lis {

namespace {

struct Point {
  double x;
  double y;
};

Point module_position(const GridShape& grid, double pitch, NodeId m) {
  const auto row = m / grid.cols;
  const auto col = m % grid.cols;
  return Point{static_cast<double>(col) * pitch, static_cast<double>(row) * pitch};
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Serpentine walk over the grid: even rows left to right, odd rows back.
std::vector<NodeId> serpentine_order(const GridShape& grid) {
  std::vector<NodeId> order;
  order.reserve(static_cast<std::size_t>(grid.rows * grid.cols));
  for (std::int64_t r = 0; r < grid.rows; ++r) {
    for (std::int64_t i = 0; i < grid.cols; ++i) {
      const std::int64_t c = (r % 2 == 0) ? i : grid.cols - 1 - i;
      order.push_back(r * grid.cols + c);
    }
  }
  return order;
}

// Breadth-first distances from the attachment module over module-to-module
// links, then next hops picked toward decreasing distance with row steps
// tried before column steps.
std::vector<std::vector<NodeId>> mesh_routes(const GridShape& grid, const std::vector<Link>& links) {
  const NodeId n = grid.rows * grid.cols;
  const NodeId cp = n;

  std::optional<NodeId> attachment;
  std::set<std::pair<NodeId, NodeId>> edges;
  for (const auto& l : links) {
    if (l.src == cp || l.dst == cp) {
      attachment = (l.src == cp) ? l.dst : l.src;
      continue;
    }
    edges.emplace(std::min(l.src, l.dst), std::max(l.src, l.dst));
  }
  if (!attachment) throw Disconnected("mesh has no link to the central processor");
  auto linked = [&](NodeId a, NodeId b) { return edges.contains({std::min(a, b), std::max(a, b)}); };

  auto neighbours = [&](NodeId m) {
    const auto r = m / grid.cols;
    const auto c = m % grid.cols;
    std::vector<NodeId> out;
    if (r > 0) out.push_back(m - grid.cols);
    if (r + 1 < grid.rows) out.push_back(m + grid.cols);
    if (c > 0) out.push_back(m - 1);
    if (c + 1 < grid.cols) out.push_back(m + 1);
    std::erase_if(out, [&](NodeId o) { return !linked(m, o); });
    return out;
  };

  constexpr std::int64_t unreached = -1;
  std::vector<std::int64_t> dist(static_cast<std::size_t>(n), unreached);
  std::deque<NodeId> queue{*attachment};
  dist[static_cast<std::size_t>(*attachment)] = 0;
  while (!queue.empty()) {
    const NodeId m = queue.front();
    queue.pop_front();
    for (NodeId o : neighbours(m)) {
      if (dist[static_cast<std::size_t>(o)] == unreached) {
        dist[static_cast<std::size_t>(o)] = dist[static_cast<std::size_t>(m)] + 1;
        queue.push_back(o);
      }
    }
  }

  std::vector<NodeId> parent(static_cast<std::size_t>(n), cp);
  for (NodeId m = 0; m < n; ++m) {
    const auto d = dist[static_cast<std::size_t>(m)];
    if (d == unreached) {
      throw Disconnected("module " + std::to_string(m) + " has no path to the central processor");
    }
    if (d == 0) continue;
    for (NodeId o : neighbours(m)) {
      if (dist[static_cast<std::size_t>(o)] == d - 1) {
        parent[static_cast<std::size_t>(m)] = o;
        break;
      }
    }
  }

  std::vector<std::vector<NodeId>> routes(static_cast<std::size_t>(n));
  for (NodeId m = 0; m < n; ++m) {
    auto& route = routes[static_cast<std::size_t>(m)];
    for (NodeId at = m; at != cp; at = parent[static_cast<std::size_t>(at)]) route.push_back(at);
    route.push_back(cp);
  }
  return routes;
}

}  // namespace

std::string to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::FullyParallel: return "parallel";
    case TopologyKind::DaisyChain: return "chain";
    case TopologyKind::Mesh: return "mesh";
  }
  return "?";
}

TopologyKind parse_topology_kind(const std::string& text) {
  if (text == "parallel") return TopologyKind::FullyParallel;
  if (text == "chain") return TopologyKind::DaisyChain;
  if (text == "mesh") return TopologyKind::Mesh;
  throw ConfigError("unknown topology '" + text + "' (expected parallel, chain or mesh)");
}

Topology::Topology(TopologyKind kind, GridShape grid, std::vector<Link> links,
                   std::vector<std::vector<NodeId>> routes)
    : kind_(kind), grid_(grid), links_(std::move(links)), routes_(std::move(routes)) {
  const NodeId cp = central();
  for (LinkId i = 0; i < links_.size(); ++i) {
    const auto& l = links_[i];
    if (!link_index_.emplace(std::minmax(l.src, l.dst), i).second) {
      throw TopologyError("duplicate link between " + std::to_string(l.src) + " and " + std::to_string(l.dst));
    }
  }
  if (static_cast<std::int64_t>(routes_.size()) != module_count()) {
    throw TopologyError("route table does not cover every module");
  }
  for (NodeId m = 0; m < module_count(); ++m) {
    const auto& r = route(m);
    if (r.size() < 2 || r.front() != m || r.back() != cp) {
      throw TopologyError("route of module " + std::to_string(m) + " does not reach the central processor");
    }
    std::set<NodeId> seen(r.begin(), r.end());
    if (seen.size() != r.size()) throw TopologyError("route of module " + std::to_string(m) + " repeats a node");
    for (std::size_t i = 0; i + 1 < r.size(); ++i) {
      if (!find_link(r[i], r[i + 1])) {
        throw TopologyError("route of module " + std::to_string(m) + " uses a missing link");
      }
    }
  }
}

std::int64_t Topology::max_hop_count() const {
  std::int64_t best = 0;
  for (NodeId m = 0; m < module_count(); ++m) best = std::max(best, hop_count(m));
  return best;
}

std::optional<LinkId> Topology::find_link(NodeId a, NodeId b) const {
  auto it = link_index_.find(std::minmax(a, b));
  if (it == link_index_.end()) return std::nullopt;
  return it->second;
}

LinkId Topology::uplink(NodeId m) const { return *find_link(m, next_hop(m)); }

std::vector<NodeId> Topology::children_first_order() const {
  std::vector<NodeId> order(static_cast<std::size_t>(module_count()));
  for (NodeId m = 0; m < module_count(); ++m) order[static_cast<std::size_t>(m)] = m;
  std::stable_sort(order.begin(), order.end(),
                   [&](NodeId a, NodeId b) { return hop_count(a) > hop_count(b); });
  return order;
}

Topology build_fully_parallel(const SurfaceConfig& config) {
  validate(config);
  const auto& grid = config.grid;
  const NodeId n = config.modules;
  const Point cp_at = config.cp_position == CpPosition::Center
                          ? Point{static_cast<double>(grid.cols - 1) * config.module_pitch_m / 2.0,
                                  static_cast<double>(grid.rows - 1) * config.module_pitch_m / 2.0}
                          : Point{0.0, 0.0};
  std::vector<Link> links;
  std::vector<std::vector<NodeId>> routes;
  for (NodeId m = 0; m < n; ++m) {
    links.push_back(Link{m, n, distance(module_position(grid, config.module_pitch_m, m), cp_at)});
    routes.push_back({m, n});
  }
  return Topology(TopologyKind::FullyParallel, grid, std::move(links), std::move(routes));
}

Topology build_daisy_chains(const SurfaceConfig& config) {
  validate(config);
  const auto& grid = config.grid;
  const double pitch = config.module_pitch_m;
  const NodeId n = config.modules;
  const std::int64_t depth = config.chain_depth();
  const auto order = serpentine_order(grid);

  std::vector<Link> links;
  std::vector<std::vector<NodeId>> routes(static_cast<std::size_t>(n));
  for (std::int64_t chain = 0; chain < config.chains; ++chain) {
    const auto first = static_cast<std::size_t>(chain * depth);
    // The central processor runs along the left edge of the grid, one pitch
    // out, level with each chain head.
    const Point head = module_position(grid, pitch, order[first]);
    links.push_back(Link{order[first], n, head.x + pitch});
    for (std::size_t i = 1; i < static_cast<std::size_t>(depth); ++i) {
      const NodeId prev = order[first + i - 1];
      const NodeId cur = order[first + i];
      links.push_back(Link{cur, prev,
                           distance(module_position(grid, pitch, cur), module_position(grid, pitch, prev))});
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(depth); ++i) {
      auto& route = routes[static_cast<std::size_t>(order[first + i])];
      for (std::size_t j = i + 1; j-- > 0;) route.push_back(order[first + j]);
      route.push_back(n);
    }
  }
  return Topology(TopologyKind::DaisyChain, grid, std::move(links), std::move(routes));
}

Topology build_mesh(const SurfaceConfig& config) {
  validate(config);
  const auto& grid = config.grid;
  const double pitch = config.module_pitch_m;
  const NodeId n = config.modules;
  std::vector<Link> links;
  for (std::int64_t r = 0; r < grid.rows; ++r) {
    for (std::int64_t c = 0; c < grid.cols; ++c) {
      const NodeId m = r * grid.cols + c;
      if (c + 1 < grid.cols) links.push_back(Link{m, m + 1, pitch});
      if (r + 1 < grid.rows) links.push_back(Link{m, m + grid.cols, pitch});
    }
  }
  links.push_back(Link{0, n, pitch});
  auto routes = mesh_routes(grid, links);
  return Topology(TopologyKind::Mesh, grid, std::move(links), std::move(routes));
}

Topology build_topology(const SurfaceConfig& config, TopologyKind kind) {
  switch (kind) {
    case TopologyKind::FullyParallel: return build_fully_parallel(config);
    case TopologyKind::DaisyChain: return build_daisy_chains(config);
    case TopologyKind::Mesh: return build_mesh(config);
  }
  throw UnsupportedTopology("unknown topology kind");
}

Topology reroute_on_failure(const Topology& topology, LinkId failed) {
  if (topology.kind() != TopologyKind::Mesh) {
    throw UnsupportedTopology(to_string(topology.kind()) + " backplane has no redundant paths");
  }
  if (failed >= topology.links().size()) {
    throw TopologyError("no link with id " + std::to_string(failed));
  }
  std::vector<Link> links = topology.links();
  links.erase(links.begin() + static_cast<std::ptrdiff_t>(failed));
  auto routes = mesh_routes(topology.grid(), links);
  return Topology(TopologyKind::Mesh, topology.grid(), std::move(links), std::move(routes));
}

std::string node_name(const Topology& topology, NodeId node) {
  return node == topology.central() ? std::string("cp") : std::to_string(node);
}

NodeId parse_node_name(const Topology& topology, const std::string& name) {
  if (name == "cp") return topology.central();
  try {
    std::size_t used = 0;
    const long long v = std::stoll(name, &used);
    if (used == name.size() && v >= 0 && v < topology.module_count()) return v;
  } catch (const std::exception&) {
  }
  throw TopologyError("no node named '" + name + "'");
}

void export_edge_list(const Topology& topology, std::ostream& out) {
  const auto old_precision = out.precision(10);
  for (const auto& l : topology.links()) {
    out << node_name(topology, l.src) << ' ' << node_name(topology, l.dst) << ' ' << l.length_m << '\n';
  }
  out << "# routes\n";
  for (NodeId m = 0; m < topology.module_count(); ++m) {
    out << "# " << m << ':';
    for (NodeId node : topology.route(m)) out << ' ' << node_name(topology, node);
    out << '\n';
  }
  out.precision(old_precision);
}

}  // namespace lis
