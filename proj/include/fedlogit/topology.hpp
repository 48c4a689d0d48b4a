// Empirical communication graphs: client-server stars and peer-to-peer
// topologies (ring, random regular, complete, explicit edge lists).
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedlogit/errors.hpp"

namespace fedlogit {

enum class GraphArchitecture { ClientServer, PeerToPeer };

struct GraphEdge {
  std::string a;  // endpoints stored with a < b
  std::string b;
  double weight = 1.0;
};

// Undirected weighted graph over named nodes. Immutable after construction.
class EmpiricalGraph {
 public:
  // Star: the server is adjacent to every client with weight 1.
  static EmpiricalGraph client_server(const std::vector<std::string>& clients,
                                      const std::string& server_id);
  // Arbitrary peer-to-peer graph. Edges must reference known nodes, have
  // positive weight, and contain no self-loops or duplicates.
  static EmpiricalGraph peer_to_peer(const std::vector<std::string>& nodes,
                                     const std::vector<GraphEdge>& edges);

  GraphArchitecture architecture() const { return architecture_; }
  const std::string& server_id() const { return server_id_; }  // empty for P2P
  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  bool connected() const { return connected_; }

  bool has_node(const std::string& id) const;
  std::size_t degree(const std::string& id) const;
  // Neighbors in ascending node-id order with edge weights. Throws LookupError.
  const std::vector<std::pair<std::string, double>>& neighbors(
      const std::string& id) const;

  // "a b weight" lines, edges sorted by (a, b). Round-trips via parse_edge_list.
  std::string to_edge_list() const;
  std::string adjacency_json() const;

 private:
  EmpiricalGraph() = default;
  void index_edges();

  GraphArchitecture architecture_ = GraphArchitecture::PeerToPeer;
  std::string server_id_;
  std::vector<std::string> nodes_;
  std::vector<GraphEdge> edges_;
  std::map<std::string, std::vector<std::pair<std::string, double>>> adjacency_;
  bool connected_ = true;
};

enum class TopologyKind { Star, Ring, RandomRegular, Complete, ExplicitEdges };

struct TopologySpec {
  TopologyKind kind = TopologyKind::RandomRegular;
  std::size_t degree = 3;        // RandomRegular only
  std::uint64_t seed = 0;        // RandomRegular only
  std::vector<GraphEdge> edges;  // ExplicitEdges only
};

const char* topology_kind_name(TopologyKind kind);

// Builds the requested graph over the given site ids (order-insensitive;
// deterministic constructions use ascending id order). Star adds a dedicated
// "server" node. RandomRegular uses the pairing model, resampling until the
// graph is simple and connected (bounded retries), and requires
// sites*degree even and degree < sites. Throws GraphError on infeasible
// parameters, ConfigError on invalid spec fields.
EmpiricalGraph build_graph(const std::vector<std::string>& site_ids,
                           const TopologySpec& spec);

// Parses "a b [weight]" lines (default weight 1). '#' starts a comment.
// Nodes are the union of endpoints. Throws ParseError with 1-based line numbers.
std::vector<GraphEdge> parse_edge_list(const std::string& text);

inline const std::string kServerNodeId = "server";

}  // namespace fedlogit
