#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace paretolab {

/// Undirected weighted graph without self-loops. Weights live on edges, so
/// weight(i, j) == weight(j, i) holds by construction. Topology is fixed
/// after generation; only weights change.
class WeightedNetwork {
 public:
  struct Edge {
    std::size_t u = 0;
    std::size_t v = 0;
    double weight = 0.0;
    friend bool operator==(const Edge&, const Edge&) = default;
  };
  /// Adjacency entry: neighbor id and the index of the shared edge.
  struct Link {
    std::size_t neighbor = 0;
    std::size_t edge = 0;
    friend bool operator==(const Link&, const Link&) = default;
  };

  WeightedNetwork() = default;
  explicit WeightedNetwork(std::size_t n_nodes);

  /// Returns the new edge index. Throws ParameterError on self-loops,
  /// out-of-range ids or duplicate edges.
  std::size_t add_edge(std::size_t u, std::size_t v, double weight = 0.0);

  std::size_t n_nodes() const noexcept { return adjacency_.size(); }
  std::size_t n_edges() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  std::span<const Link> neighbors(std::size_t node) const { return adjacency_.at(node); }
  std::size_t degree(std::size_t node) const { return adjacency_.at(node).size(); }

  bool has_edge(std::size_t u, std::size_t v) const;
  /// Weight of link (u, v); 0 when the nodes are not linked.
  double weight(std::size_t u, std::size_t v) const;
  void add_weight(std::size_t edge, double amount);
  /// Node strength: sum of the weights of incident links.
  double strength(std::size_t node) const;

  /// True when every node is reachable from node 0 (empty graphs count).
  bool connected() const;
  /// True when the subgraph induced by `members` is connected.
  bool induced_connected(std::span<const std::size_t> members) const;

  friend bool operator==(const WeightedNetwork&, const WeightedNetwork&) = default;

 private:
  std::vector<std::vector<Link>> adjacency_;
  std::vector<Edge> edges_;
};

/// Barabasi-Albert preferential attachment: a seed clique of m + 1 nodes, then
/// each new node links to m distinct existing nodes chosen with probability
/// proportional to their current degree. Weights start at zero.
/// Throws ParameterError unless m >= 1 and n >= m + 1.
WeightedNetwork generate_scale_free(std::size_t n, std::size_t m, std::uint64_t seed);

enum class Selection { RandomFraction, BreadthFirstBall };

struct SubsystemSpec {
  Selection selection = Selection::BreadthFirstBall;
  double fraction = 0.2;
};

/// Picks ceil(fraction * n) members (clamped to [1, n - 1]) either uniformly
/// or as a breadth-first ball around a random root. Returns sorted ids.
/// Throws ParameterError unless 0 < fraction < 1 and n >= 2.
std::vector<std::size_t> carve_subsystem(const WeightedNetwork& network, const SubsystemSpec& spec,
                                         std::uint64_t seed);

/// Edge list, one line per edge: "i j weight", 0-based ids, weights printed
/// in shortest round-trip decimal form.
void write_edge_list(const WeightedNetwork& network, std::ostream& out);
WeightedNetwork read_edge_list(std::istream& in, std::size_t n_nodes);

}  // namespace paretolab
