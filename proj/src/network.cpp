#include "paretolab/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "paretolab/errors.hpp"
#include "paretolab/rng.hpp"

namespace paretolab {

WeightedNetwork::WeightedNetwork(std::size_t n_nodes) : adjacency_(n_nodes) {}

std::size_t WeightedNetwork::add_edge(std::size_t u, std::size_t v, double weight) {
  if (u >= n_nodes() || v >= n_nodes()) throw ParameterError("edge endpoint out of range");
  if (u == v) throw ParameterError("self-loops are not allowed");
  if (has_edge(u, v)) throw ParameterError("duplicate edge");
  if (!(weight >= 0.0)) throw DomainError("link weight must be >= 0");
  const std::size_t e = edges_.size();
  edges_.push_back(Edge{std::min(u, v), std::max(u, v), weight});
  adjacency_[u].push_back(Link{v, e});
  adjacency_[v].push_back(Link{u, e});
  return e;
}

bool WeightedNetwork::has_edge(std::size_t u, std::size_t v) const {
  const auto& smaller = adjacency_.at(u).size() <= adjacency_.at(v).size() ? adjacency_[u]
                                                                          : adjacency_[v];
  const std::size_t other = &smaller == &adjacency_[u] ? v : u;
  return std::any_of(smaller.begin(), smaller.end(),
                     [other](const Link& l) { return l.neighbor == other; });
}

double WeightedNetwork::weight(std::size_t u, std::size_t v) const {
  for (const auto& l : adjacency_.at(u)) {
    if (l.neighbor == v) return edges_[l.edge].weight;
  }
  return 0.0;
}

void WeightedNetwork::add_weight(std::size_t edge, double amount) {
  if (!(amount >= 0.0)) throw DomainError("weight increment must be >= 0");
  edges_.at(edge).weight += amount;
}

double WeightedNetwork::strength(std::size_t node) const {
  double s = 0.0;
  for (const auto& l : adjacency_.at(node)) s += edges_[l.edge].weight;
  return s;
}

bool WeightedNetwork::connected() const {
  if (n_nodes() == 0) return true;
  std::vector<std::size_t> all(n_nodes());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return induced_connected(all);
}

bool WeightedNetwork::induced_connected(std::span<const std::size_t> members) const {
  if (members.empty()) return true;
  std::vector<char> in(n_nodes(), 0);
  for (auto m : members) in.at(m) = 1;
  std::vector<char> seen(n_nodes(), 0);
  std::deque<std::size_t> queue{members.front()};
  seen[members.front()] = 1;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    for (const auto& l : adjacency_[v]) {
      if (in[l.neighbor] && !seen[l.neighbor]) {
        seen[l.neighbor] = 1;
        ++reached;
        queue.push_back(l.neighbor);
      }
    }
  }
  return reached == members.size();
}

WeightedNetwork generate_scale_free(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw ParameterError("scale-free generator needs m >= 1");
  if (n <= m) {
    throw ParameterError("scale-free generator needs n >= m + 1 (n=" + std::to_string(n) +
                         ", m=" + std::to_string(m) + ")");
  }
  Rng rng(seed);
  WeightedNetwork net(n);
  // Every node appears here once per incident edge, so a uniform draw is a
  // degree-proportional draw.
  std::vector<std::size_t> stubs;
  stubs.reserve(2 * m * n);
  for (std::size_t v = 1; v <= m; ++v) {
    for (std::size_t u = 0; u < v; ++u) {
      net.add_edge(u, v);
      stubs.push_back(u);
      stubs.push_back(v);
    }
  }
  std::vector<std::size_t> chosen;
  chosen.reserve(m);
  for (std::size_t v = m + 1; v < n; ++v) {
    chosen.clear();
    while (chosen.size() < m) {
      const auto target = stubs[uniform_index(rng, stubs.size())];
      if (std::find(chosen.begin(), chosen.end(), target) == chosen.end()) {
        chosen.push_back(target);
      }
    }
    for (auto u : chosen) {
      net.add_edge(u, v);
      stubs.push_back(u);
      stubs.push_back(v);
    }
  }
  return net;
}

std::vector<std::size_t> carve_subsystem(const WeightedNetwork& network, const SubsystemSpec& spec,
                                         std::uint64_t seed) {
  if (!(spec.fraction > 0.0 && spec.fraction < 1.0)) {
    throw ParameterError("subsystem fraction must be in (0, 1), got " +
                         std::to_string(spec.fraction));
  }
  const std::size_t n = network.n_nodes();
  if (n < 2) throw ParameterError("a subsystem needs a network of at least two nodes");
  auto target = static_cast<std::size_t>(std::ceil(spec.fraction * static_cast<double>(n)));
  target = std::clamp<std::size_t>(target, 1, n - 1);

  Rng rng(seed);
  std::vector<std::size_t> members;
  members.reserve(target);
  if (spec.selection == Selection::RandomFraction) {
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = i;
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < target; ++i) {
      const auto j = i + uniform_index(rng, n - i);
      std::swap(ids[i], ids[j]);
    }
    members.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(target));
  } else {
    std::vector<char> seen(n, 0);
    std::deque<std::size_t> queue;
    while (members.size() < target) {
      if (queue.empty()) {
        // New root; only reached again when the graph is disconnected.
        std::size_t root = uniform_index(rng, n);
        while (seen[root]) root = (root + 1) % n;
        seen[root] = 1;
        queue.push_back(root);
      }
      const auto v = queue.front();
      queue.pop_front();
      members.push_back(v);
      for (const auto& l : network.neighbors(v)) {
        if (!seen[l.neighbor]) {
          seen[l.neighbor] = 1;
          queue.push_back(l.neighbor);
        }
      }
    }
  }
  std::sort(members.begin(), members.end());
  return members;
}

namespace {

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace

void write_edge_list(const WeightedNetwork& network, std::ostream& out) {
  for (const auto& e : network.edges()) {
    out << e.u << ' ' << e.v << ' ' << format_double(e.weight) << '\n';
  }
}

WeightedNetwork read_edge_list(std::istream& in, std::size_t n_nodes) {
  WeightedNetwork net(n_nodes);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t u = 0, v = 0;
    std::string w;
    if (!(fields >> u >> v >> w)) {
      throw IoError("malformed edge list line " + std::to_string(lineno));
    }
    double weight = 0.0;
    const auto res = std::from_chars(w.data(), w.data() + w.size(), weight);
    if (res.ec != std::errc{}) throw IoError("bad weight on line " + std::to_string(lineno));
    net.add_edge(u, v, weight);
  }
  return net;
}

}  // namespace paretolab
