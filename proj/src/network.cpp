#include "mfgnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mfgnet {

  double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

  const char* to_string(NetworkErrc code) {
    switch (code) {
      case NetworkErrc::EmptyInput:
        return "EmptyInput";
      case NetworkErrc::BadId:
        return "BadId";
      case NetworkErrc::DanglingEdgeEndpoint:
        return "DanglingEdgeEndpoint";
      case NetworkErrc::SelfLoop:
        return "SelfLoop";
      case NetworkErrc::NonpositiveLength:
        return "NonpositiveLength";
      case NetworkErrc::DisconnectedGraph:
        return "DisconnectedGraph";
      case NetworkErrc::ExitNotDegreeOne:
        return "ExitNotDegreeOne";
    }
    return "Unknown";
  }

  namespace {
    [[noreturn]] void fail(NetworkErrc code, const std::string& msg) {
      throw NetworkError(code, std::string(to_string(code)) + ": " + msg);
    }
  }  // namespace

  Network Network::build(std::vector<Vertex> vertices, std::vector<EdgeSpec> edges,
                         VertexId exit_vertex) {
    if (vertices.empty() || edges.empty()) {
      fail(NetworkErrc::EmptyInput, "network needs at least one vertex and one edge");
    }
    std::sort(vertices.begin(), vertices.end(),
              [](const Vertex& a, const Vertex& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      if (vertices[i].id != i) {
        fail(NetworkErrc::BadId, "vertex ids must be dense and unique, expected " +
                                     std::to_string(i) + " got " + std::to_string(vertices[i].id));
      }
    }
    std::sort(edges.begin(), edges.end(),
              [](const EdgeSpec& a, const EdgeSpec& b) { return a.id < b.id; });

    Network net;
    net.m_incident.resize(vertices.size());
    net.m_edges.reserve(edges.size());
    for (std::size_t j = 0; j < edges.size(); ++j) {
      const auto& e = edges[j];
      if (e.id != j) {
        fail(NetworkErrc::BadId, "edge ids must be dense and unique, expected " +
                                     std::to_string(j) + " got " + std::to_string(e.id));
      }
      if (e.tail >= vertices.size() || e.head >= vertices.size()) {
        fail(NetworkErrc::DanglingEdgeEndpoint,
             "edge " + std::to_string(j) + " references a missing vertex");
      }
      if (e.tail == e.head) {
        fail(NetworkErrc::SelfLoop, "edge " + std::to_string(j) + " starts and ends at vertex " +
                                        std::to_string(e.tail));
      }
      const double len = e.length.value_or(
          distance(vertices[e.tail].position, vertices[e.head].position));
      if (!(len > 0.0) || !std::isfinite(len)) {
        fail(NetworkErrc::NonpositiveLength, "edge " + std::to_string(j) + " has length " +
                                                 std::to_string(len));
      }
      net.m_edges.push_back(Edge{j, e.tail, e.head, len});
      net.m_incident[e.tail].push_back(j);
      net.m_incident[e.head].push_back(j);
    }
    if (exit_vertex >= vertices.size()) {
      fail(NetworkErrc::BadId, "exit vertex " + std::to_string(exit_vertex) + " does not exist");
    }

    // connectivity by flood fill from the exit
    std::vector<bool> seen(vertices.size(), false);
    std::vector<VertexId> stack{exit_vertex};
    seen[exit_vertex] = true;
    while (!stack.empty()) {
      const VertexId v = stack.back();
      stack.pop_back();
      for (EdgeId j : net.m_incident[v]) {
        const auto& e = net.m_edges[j];
        const VertexId w = e.tail == v ? e.head : e.tail;
        if (!seen[w]) {
          seen[w] = true;
          stack.push_back(w);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
      fail(NetworkErrc::DisconnectedGraph, "not every vertex is reachable from the exit");
    }
    if (net.m_incident[exit_vertex].size() != 1) {
      fail(NetworkErrc::ExitNotDegreeOne,
           "exit vertex has degree " + std::to_string(net.m_incident[exit_vertex].size()));
    }

    net.m_vertices = std::move(vertices);
    net.m_exit = exit_vertex;
    return net;
  }

  int Network::incidence_sign(VertexId i, EdgeId j) const {
    const auto& e = m_edges.at(j);
    if (e.tail == i) return 1;
    if (e.head == i) return -1;
    return 0;
  }

  VertexClasses Network::classify_vertices() const {
    VertexClasses out;
    for (VertexId i = 0; i < m_vertices.size(); ++i) {
      (m_incident[i].size() == 1 ? out.boundary : out.transition).push_back(i);
    }
    return out;
  }

  double Network::total_length() const noexcept {
    return std::accumulate(m_edges.begin(), m_edges.end(), 0.0,
                           [](double acc, const Edge& e) { return acc + e.length; });
  }

  Point2 Network::position(EdgeId j, double arc) const {
    const auto& e = m_edges.at(j);
    const Point2 a = m_vertices[e.tail].position;
    const Point2 b = m_vertices[e.head].position;
    const double s = arc / e.length;
    return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
  }

}  // namespace mfgnet
