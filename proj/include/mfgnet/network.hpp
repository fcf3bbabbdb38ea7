#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfgnet {

  using VertexId = std::size_t;
  using EdgeId = std::size_t;

  struct Point2 {
    double x{0.0};
    double y{0.0};

    bool operator==(const Point2&) const = default;
  };

  double distance(Point2 a, Point2 b);

  struct Vertex {
    VertexId id{};
    Point2 position{};

    bool operator==(const Vertex&) const = default;
  };

  /// Edge as supplied by the caller. When `length` is empty the Euclidean
  /// distance between the endpoint positions is used.
  struct EdgeSpec {
    EdgeId id{};
    VertexId tail{};
    VertexId head{};
    std::optional<double> length;

    bool operator==(const EdgeSpec&) const = default;
  };

  /// Resolved edge: parametrized from `tail` (arc 0) to `head` (arc `length`).
  struct Edge {
    EdgeId id{};
    VertexId tail{};
    VertexId head{};
    double length{};
  };

  enum class NetworkErrc {
    EmptyInput,
    BadId,
    DanglingEdgeEndpoint,
    SelfLoop,
    NonpositiveLength,
    DisconnectedGraph,
    ExitNotDegreeOne,
  };

  const char* to_string(NetworkErrc code);

  class NetworkError : public std::runtime_error {
  public:
    NetworkError(NetworkErrc code, const std::string& what)
        : std::runtime_error(what), m_code(code) {}
    NetworkErrc code() const noexcept { return m_code; }

  private:
    NetworkErrc m_code;
  };

  struct VertexClasses {
    std::vector<VertexId> boundary;    // #Inc_i == 1
    std::vector<VertexId> transition;  // everything else
  };

  /// Immutable metric graph with the orientation induced by edge
  /// parametrizations and a single absorbing exit vertex.
  class Network {
  public:
    /// Validates the input and precomputes incidence lists.
    /// Throws NetworkError.
    static Network build(std::vector<Vertex> vertices, std::vector<EdgeSpec> edges,
                         VertexId exit_vertex);

    std::size_t n_vertices() const noexcept { return m_vertices.size(); }
    std::size_t n_edges() const noexcept { return m_edges.size(); }
    const std::vector<Vertex>& vertices() const noexcept { return m_vertices; }
    const std::vector<Edge>& edges() const noexcept { return m_edges; }
    const Vertex& vertex(VertexId i) const { return m_vertices.at(i); }
    const Edge& edge(EdgeId j) const { return m_edges.at(j); }
    VertexId exit_vertex() const noexcept { return m_exit; }
    /// The unique edge incident to the exit vertex.
    EdgeId exit_edge() const noexcept { return m_incident[m_exit].front(); }

    /// Inc_i, in increasing edge id order.
    std::span<const EdgeId> incident_edges(VertexId i) const { return m_incident.at(i); }
    std::size_t degree(VertexId i) const { return m_incident.at(i).size(); }

    /// Signed incidence a_ij: +1 if edge j starts at i, -1 if it ends there, 0 otherwise.
    int incidence_sign(VertexId i, EdgeId j) const;

    VertexClasses classify_vertices() const;

    double total_length() const noexcept;

    /// Ambient position of the point at arc coordinate `arc` on edge `j`,
    /// on the straight segment from tail to head.
    Point2 position(EdgeId j, double arc) const;

  private:
    std::vector<Vertex> m_vertices;
    std::vector<Edge> m_edges;
    std::vector<std::vector<EdgeId>> m_incident;
    VertexId m_exit{};
  };

}  // namespace mfgnet
