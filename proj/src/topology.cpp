#include "fedlogit/topology.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "fedlogit/rng.hpp"

namespace fedlogit {
namespace {

constexpr int kRegularSampleAttempts = 200;

std::vector<std::string> sorted_unique_ids(const std::vector<std::string>& ids,
                                           const char* what) {
  if (ids.empty()) throw GraphError(std::string(what) + " requires at least one node");
  std::vector<std::string> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].empty()) throw GraphError("node ids must be non-empty");
    if (i > 0 && sorted[i] == sorted[i - 1])
      throw GraphError("duplicate node id '" + sorted[i] + "'");
  }
  return sorted;
}

std::string format_weight(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void EmpiricalGraph::index_edges() {
  std::sort(edges_.begin(), edges_.end(), [](const GraphEdge& x, const GraphEdge& y) {
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  adjacency_.clear();
  for (const std::string& n : nodes_) adjacency_[n];  // ensure isolated nodes appear
  for (const GraphEdge& e : edges_) {
    adjacency_[e.a].emplace_back(e.b, e.weight);
    adjacency_[e.b].emplace_back(e.a, e.weight);
  }
  for (auto& [id, nbrs] : adjacency_)
    std::sort(nbrs.begin(), nbrs.end());

  // BFS connectivity over the undirected graph.
  connected_ = true;
  if (nodes_.size() > 1) {
    std::unordered_set<std::string> seen;
    std::queue<std::string> frontier;
    frontier.push(nodes_.front());
    seen.insert(nodes_.front());
    while (!frontier.empty()) {
      const std::string cur = frontier.front();
      frontier.pop();
      for (const auto& [nb, w] : adjacency_.at(cur)) {
        (void)w;
        if (seen.insert(nb).second) frontier.push(nb);
      }
    }
    connected_ = seen.size() == nodes_.size();
  }
}

EmpiricalGraph EmpiricalGraph::client_server(const std::vector<std::string>& clients,
                                             const std::string& server_id) {
  std::vector<std::string> sorted = sorted_unique_ids(clients, "client-server graph");
  if (server_id.empty()) throw GraphError("server id must be non-empty");
  if (std::binary_search(sorted.begin(), sorted.end(), server_id))
    throw GraphError("server id '" + server_id + "' collides with a client id");
  EmpiricalGraph g;
  g.architecture_ = GraphArchitecture::ClientServer;
  g.server_id_ = server_id;
  g.nodes_ = sorted;
  g.nodes_.push_back(server_id);
  std::sort(g.nodes_.begin(), g.nodes_.end());
  g.edges_.reserve(sorted.size());
  for (const std::string& c : sorted) {
    GraphEdge e{std::min(c, server_id), std::max(c, server_id), 1.0};
    g.edges_.push_back(std::move(e));
  }
  g.index_edges();
  return g;
}

EmpiricalGraph EmpiricalGraph::peer_to_peer(const std::vector<std::string>& nodes,
                                            const std::vector<GraphEdge>& edges) {
  EmpiricalGraph g;
  g.architecture_ = GraphArchitecture::PeerToPeer;
  g.nodes_ = sorted_unique_ids(nodes, "peer-to-peer graph");
  std::set<std::pair<std::string, std::string>> seen;
  g.edges_.reserve(edges.size());
  for (GraphEdge e : edges) {
    if (e.a == e.b) throw GraphError("self-loop on node '" + e.a + "'");
    if (!std::binary_search(g.nodes_.begin(), g.nodes_.end(), e.a))
      throw GraphError("edge references unknown node '" + e.a + "'");
    if (!std::binary_search(g.nodes_.begin(), g.nodes_.end(), e.b))
      throw GraphError("edge references unknown node '" + e.b + "'");
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw GraphError("edge (" + e.a + ", " + e.b + ") must have a positive finite weight");
    if (e.b < e.a) std::swap(e.a, e.b);
    if (!seen.emplace(e.a, e.b).second)
      throw GraphError("duplicate edge (" + e.a + ", " + e.b + ")");
    g.edges_.push_back(std::move(e));
  }
  g.index_edges();
  return g;
}

bool EmpiricalGraph::has_node(const std::string& id) const {
  return adjacency_.count(id) > 0;
}

std::size_t EmpiricalGraph::degree(const std::string& id) const {
  return neighbors(id).size();
}

const std::vector<std::pair<std::string, double>>& EmpiricalGraph::neighbors(
    const std::string& id) const {
  auto it = adjacency_.find(id);
  if (it == adjacency_.end()) throw LookupError("unknown node '" + id + "'");
  return it->second;
}

std::string EmpiricalGraph::to_edge_list() const {
  std::ostringstream out;
  for (const GraphEdge& e : edges_)
    out << e.a << ' ' << e.b << ' ' << format_weight(e.weight) << '\n';
  return out.str();
}

std::string EmpiricalGraph::adjacency_json() const {
  nlohmann::json j;
  j["architecture"] = architecture_ == GraphArchitecture::ClientServer
                          ? "client-server"
                          : "peer-to-peer";
  if (architecture_ == GraphArchitecture::ClientServer) j["server"] = server_id_;
  j["nodes"] = nodes_;
  j["connected"] = connected_;
  j["edges"] = nlohmann::json::array();
  for (const GraphEdge& e : edges_)
    j["edges"].push_back({{"a", e.a}, {"b", e.b}, {"weight", e.weight}});
  return j.dump(2);
}

const char* topology_kind_name(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::Star: return "star";
    case TopologyKind::Ring: return "ring";
    case TopologyKind::RandomRegular: return "random-regular";
    case TopologyKind::Complete: return "complete";
    case TopologyKind::ExplicitEdges: return "explicit";
  }
  return "unknown";
}

namespace {

EmpiricalGraph build_random_regular(const std::vector<std::string>& sorted,
                                    std::size_t degree, std::uint64_t seed) {
  const std::size_t n = sorted.size();
  if (degree < 1) throw GraphError("random regular graph requires degree >= 1");
  if (degree >= n)
    throw GraphError("random regular graph requires degree < site count (degree " +
                     std::to_string(degree) + ", sites " + std::to_string(n) + ")");
  if ((n * degree) % 2 != 0)
    throw GraphError("random regular graph requires an even number of edge endpoints; " +
                     std::to_string(n) + " sites * degree " + std::to_string(degree) +
                     " is odd");
  std::mt19937_64 engine = make_engine(seed);
  for (int attempt = 0; attempt < kRegularSampleAttempts; ++attempt) {
    // Incremental pairing: draw stub pairs uniformly but keep only legal ones
    // (no loops, no duplicate edges), restarting when the tail gets stuck.
    // Unlike whole-matching rejection this stays practical at higher degrees.
    std::vector<std::size_t> stubs;
    stubs.reserve(n * degree);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < degree; ++d) stubs.push_back(i);
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t rejections = 0;
    bool stuck = false;
    while (stubs.size() >= 2) {
      std::uniform_int_distribution<std::size_t> pick(0, stubs.size() - 1);
      std::size_t i = pick(engine);
      std::size_t j = pick(engine);
      if (i == j) continue;
      std::size_t a = stubs[i], b = stubs[j];
      if (b < a) std::swap(a, b);
      if (a == b || pairs.count({a, b}) != 0) {
        if (++rejections > 64 * n * degree) {
          stuck = true;
          break;
        }
        continue;
      }
      pairs.emplace(a, b);
      if (i < j) std::swap(i, j);  // remove the higher index first
      stubs[i] = stubs.back();
      stubs.pop_back();
      stubs[j] = stubs.back();
      stubs.pop_back();
    }
    if (stuck || !stubs.empty()) continue;
    std::vector<GraphEdge> edges;
    edges.reserve(pairs.size());
    for (const auto& [a, b] : pairs)
      edges.push_back(GraphEdge{sorted[a], sorted[b], 1.0});
    EmpiricalGraph g = EmpiricalGraph::peer_to_peer(sorted, edges);
    if (g.connected()) return g;
  }
  throw GraphError("failed to sample a connected " + std::to_string(degree) +
                   "-regular graph over " + std::to_string(n) + " sites after " +
                   std::to_string(kRegularSampleAttempts) + " attempts");
}

}  // namespace

EmpiricalGraph build_graph(const std::vector<std::string>& site_ids,
                           const TopologySpec& spec) {
  std::vector<std::string> sorted = sorted_unique_ids(site_ids, "topology");
  switch (spec.kind) {
    case TopologyKind::Star: {
      if (std::binary_search(sorted.begin(), sorted.end(), kServerNodeId))
        throw GraphError("site id '" + kServerNodeId +
                         "' collides with the dedicated server node");
      return EmpiricalGraph::client_server(sorted, kServerNodeId);
    }
    case TopologyKind::Ring: {
      if (sorted.size() < 2) throw GraphError("ring topology requires at least 2 sites");
      std::vector<GraphEdge> edges;
      if (sorted.size() == 2) {
        edges.push_back(GraphEdge{sorted[0], sorted[1], 1.0});
      } else {
        for (std::size_t i = 0; i < sorted.size(); ++i)
          edges.push_back(GraphEdge{sorted[i], sorted[(i + 1) % sorted.size()], 1.0});
      }
      return EmpiricalGraph::peer_to_peer(sorted, edges);
    }
    case TopologyKind::Complete: {
      if (sorted.size() < 2)
        throw GraphError("complete topology requires at least 2 sites");
      std::vector<GraphEdge> edges;
      for (std::size_t i = 0; i < sorted.size(); ++i)
        for (std::size_t j = i + 1; j < sorted.size(); ++j)
          edges.push_back(GraphEdge{sorted[i], sorted[j], 1.0});
      return EmpiricalGraph::peer_to_peer(sorted, edges);
    }
    case TopologyKind::RandomRegular:
      return build_random_regular(sorted, spec.degree, spec.seed);
    case TopologyKind::ExplicitEdges:
      return EmpiricalGraph::peer_to_peer(sorted, spec.edges);
  }
  throw ConfigError("unknown topology kind");
}

std::vector<GraphEdge> parse_edge_list(const std::string& text) {
  std::vector<GraphEdge> edges;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream cells(line);
    std::string a, b, w;
    if (!(cells >> a)) continue;  // blank or comment-only line
    if (!(cells >> b))
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected 'node node [weight]'");
    GraphEdge e{a, b, 1.0};
    if (cells >> w) {
      const char* first = w.data();
      const char* last = w.data() + w.size();
      auto res = std::from_chars(first, last, e.weight);
      if (res.ec != std::errc() || res.ptr != last || !(e.weight > 0.0) ||
          !std::isfinite(e.weight))
        throw ParseError("line " + std::to_string(line_no) +
                         ": weight must be a positive number, got '" + w + "'");
    }
    std::string extra;
    if (cells >> extra)
      throw ParseError("line " + std::to_string(line_no) + ": unexpected token '" +
                       extra + "'");
    edges.push_back(std::move(e));
  }
  return edges;
}

}  // namespace fedlogit
