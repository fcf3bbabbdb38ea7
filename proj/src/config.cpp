#include "mfgnet/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include <json.hpp>

#include "mfgnet/errors.hpp"

namespace mfgnet {

  using nlohmann::json;

  ParseError::ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
        m_line(line),
        m_column(column) {}

  ValidationError::ValidationError(std::string field, std::string path, const std::string& what)
      : std::runtime_error(path + ": " + what), m_field(std::move(field)), m_path(std::move(path)) {}

  const char* to_string(RunMode mode) {
    switch (mode) {
      case RunMode::Solve:
        return "solve";
      case RunMode::Oracle:
        return "oracle";
      case RunMode::RefineStudy:
        return "refine-study";
    }
    return "solve";
  }

  std::optional<RunMode> parse_run_mode(std::string_view text) {
    if (text == "solve") return RunMode::Solve;
    if (text == "oracle") return RunMode::Oracle;
    if (text == "refine-study") return RunMode::RefineStudy;
    return std::nullopt;
  }

  namespace {
    const char* to_string(InitialMassConfig::Kind kind) {
      switch (kind) {
        case InitialMassConfig::Kind::Abs:
          return "abs";
        case InitialMassConfig::Kind::Bumps:
          return "bumps";
        case InitialMassConfig::Kind::Tabulated:
          return "tabulated";
      }
      return "abs";
    }

    const char* to_string(Quadrature rule) {
      return rule == Quadrature::LeftRectangle ? "left" : "interior";
    }

    // A JSON object being read, with its dotted location for messages.
    class Node {
    public:
      Node(const json& value, std::string path) : m_value(value), m_path(std::move(path)) {}

      const json& value() const { return m_value; }
      const std::string& path() const { return m_path; }

      std::string child_path(std::string_view key) const {
        return m_path.empty() ? std::string(key) : m_path + "." + std::string(key);
      }

      [[noreturn]] void fail(std::string_view key, const std::string& what) const {
        throw ValidationError(std::string(key), child_path(key), what);
      }

      void require_object(std::string_view self) const {
        if (!m_value.is_object()) {
          throw ValidationError(std::string(self), m_path.empty() ? std::string(self) : m_path, "expected an object");
        }
      }

      void allow_only(std::initializer_list<std::string_view> keys) const {
        for (const auto& item : m_value.items()) {
          if (std::find(keys.begin(), keys.end(), item.key()) == keys.end()) {
            fail(item.key(), "unknown key");
          }
        }
      }

      bool has(std::string_view key) const { return m_value.contains(std::string(key)); }

      const json& get(std::string_view key) const {
        auto it = m_value.find(std::string(key));
        if (it == m_value.end()) fail(key, "missing required key");
        return *it;
      }

      Node object(std::string_view key) const {
        Node child(get(key), child_path(key));
        child.require_object(key);
        return child;
      }

      double number(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_number()) fail(key, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) fail(key, "expected a finite number");
        return x;
      }

      double number_or(std::string_view key, double fallback) const {
        return has(key) ? number(key) : fallback;
      }

      std::uint64_t unsigned_integer(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_number_unsigned()) fail(key, "expected a nonnegative integer");
        return v.get<std::uint64_t>();
      }

      std::string string(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_string()) fail(key, "expected a string");
        return v.get<std::string>();
      }

      const json& array(std::string_view key) const {
        const json& v = get(key);
        if (!v.is_array()) fail(key, "expected an array");
        return v;
      }

      std::vector<double> numbers(std::string_view key) const {
        std::vector<double> out;
        for (const auto& item : array(key)) {
          if (!item.is_number() || !std::isfinite(item.get<double>())) fail(key, "expected an array of numbers");
          out.push_back(item.get<double>());
        }
        return out;
      }

    private:
      const json& m_value;
      std::string m_path;
    };

    std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
      std::size_t line = 1;
      std::size_t column = 1;
      for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
          ++line;
          column = 1;
        } else {
          ++column;
        }
      }
      return {line, column};
    }

    void parse_network(const Node& net, RunConfig& out) {
      net.allow_only({"vertices", "edges", "exit_vertex"});
      std::set<VertexId> vertex_ids;
      const json& vertices = net.array("vertices");
      for (std::size_t i = 0; i < vertices.size(); ++i) {
        Node v(vertices[i], net.child_path("vertices") + "[" + std::to_string(i) + "]");
        v.require_object("vertices");
        v.allow_only({"id", "x", "y"});
        Vertex vertex{v.unsigned_integer("id"), {v.number("x"), v.number("y")}};
        if (!vertex_ids.insert(vertex.id).second) v.fail("id", "duplicate vertex id");
        out.vertices.push_back(vertex);
      }
      std::set<EdgeId> edge_ids;
      const json& edges = net.array("edges");
      for (std::size_t i = 0; i < edges.size(); ++i) {
        Node e(edges[i], net.child_path("edges") + "[" + std::to_string(i) + "]");
        e.require_object("edges");
        e.allow_only({"id", "tail", "head", "length"});
        EdgeSpec edge{e.unsigned_integer("id"), e.unsigned_integer("tail"), e.unsigned_integer("head"), std::nullopt};
        if (e.has("length")) {
          edge.length = e.number("length");
          if (!(*edge.length > 0.0)) e.fail("length", "must be positive");
        }
        if (!edge_ids.insert(edge.id).second) e.fail("id", "duplicate edge id");
        if (!vertex_ids.contains(edge.tail)) e.fail("tail", "unknown vertex " + std::to_string(edge.tail));
        if (!vertex_ids.contains(edge.head)) e.fail("head", "unknown vertex " + std::to_string(edge.head));
        out.edges.push_back(edge);
      }
      out.exit_vertex = net.unsigned_integer("exit_vertex");
      if (!vertex_ids.contains(out.exit_vertex)) net.fail("exit_vertex", "unknown vertex");
    }

    void parse_initial_mass(const Node& mass, const RunConfig& config, InitialMassConfig& out) {
      const std::string kind = mass.string("kind");
      if (kind == "abs") {
        mass.allow_only({"kind"});
        out.kind = InitialMassConfig::Kind::Abs;
      } else if (kind == "bumps") {
        mass.allow_only({"kind", "bumps"});
        out.kind = InitialMassConfig::Kind::Bumps;
        const json& bumps = mass.array("bumps");
        if (bumps.empty()) mass.fail("bumps", "needs at least one bump");
        for (std::size_t i = 0; i < bumps.size(); ++i) {
          Node b(bumps[i], mass.child_path("bumps") + "[" + std::to_string(i) + "]");
          b.require_object("bumps");
          b.allow_only({"center", "radius"});
          const auto c = b.numbers("center");
          if (c.size() != 2) b.fail("center", "expected [x, y]");
          const double r = b.number("radius");
          if (!(r > 0.0)) b.fail("radius", "must be positive");
          out.bumps.push_back({{c[0], c[1]}, r});
        }
      } else if (kind == "tabulated") {
        mass.allow_only({"kind", "edges"});
        out.kind = InitialMassConfig::Kind::Tabulated;
        const json& edges = mass.array("edges");
        std::set<EdgeId> seen;
        for (std::size_t i = 0; i < edges.size(); ++i) {
          Node t(edges[i], mass.child_path("edges") + "[" + std::to_string(i) + "]");
          t.require_object("edges");
          t.allow_only({"edge", "values"});
          EdgeTable table{t.unsigned_integer("edge"), t.numbers("values")};
          const bool known = std::any_of(config.edges.begin(), config.edges.end(),
                                         [&](const EdgeSpec& e) { return e.id == table.edge; });
          if (!known) t.fail("edge", "unknown edge " + std::to_string(table.edge));
          if (!seen.insert(table.edge).second) t.fail("edge", "edge tabulated twice");
          if (table.values.size() < 2) t.fail("values", "need at least two values");
          if (std::any_of(table.values.begin(), table.values.end(), [](double v) { return v < 0.0; })) {
            t.fail("values", "density must be nonnegative");
          }
          out.tables.push_back(std::move(table));
        }
      } else {
        mass.fail("kind", "expected abs, bumps or tabulated");
      }
    }

    void parse_problem(const Node& problem, RunConfig& out) {
      problem.allow_only({"t0", "T_max", "theta", "cost", "initial_mass"});
      out.cost.t0 = problem.number_or("t0", out.cost.t0);
      out.cost.t_max = problem.number_or("T_max", out.cost.t_max);
      out.theta = problem.number("theta");
      if (!(out.theta > 0.0 && out.theta < 1.0)) problem.fail("theta", "must lie in (0, 1)");
      if (!(out.cost.t0 >= 0.0)) problem.fail("t0", "must be nonnegative");
      if (!(out.cost.t_max > out.cost.t0)) problem.fail("T_max", "must exceed t0");
      if (problem.has("cost")) {
        const Node cost = problem.object("cost");
        cost.allow_only({"c1", "c2", "c3"});
        out.cost.lateness_scheduled = cost.number_or("c1", out.cost.lateness_scheduled);
        out.cost.lateness_actual = cost.number_or("c2", out.cost.lateness_actual);
        out.cost.waiting = cost.number_or("c3", out.cost.waiting);
        for (const char* key : {"c1", "c2", "c3"}) {
          if (cost.has(key) && cost.number(key) < 0.0) cost.fail(key, "must be nonnegative");
        }
      }
      parse_initial_mass(problem.object("initial_mass"), out, out.initial_mass);
    }

    void parse_numerics(const Node& numerics, RunConfig& out) {
      numerics.allow_only({"h", "cfl_factor", "tol", "T_init", "max_iters", "mass_quadrature"});
      auto& n = out.numerics;
      n.h = numerics.number_or("h", n.h);
      if (!(n.h > 0.0)) numerics.fail("h", "must be positive");
      n.cfl_factor = numerics.number_or("cfl_factor", n.cfl_factor);
      if (!(n.cfl_factor > 0.0 && n.cfl_factor < 0.5)) numerics.fail("cfl_factor", "must lie in (0, 0.5)");
      n.tol = numerics.number_or("tol", n.tol);
      if (!(n.tol > 0.0)) numerics.fail("tol", "must be positive");
      if (numerics.has("T_init")) {
        n.t_init = numerics.number("T_init");
        if (*n.t_init < out.cost.t0 || *n.t_init > out.cost.t_max) {
          numerics.fail("T_init", "must lie in [t0, T_max]");
        }
      }
      if (numerics.has("max_iters")) {
        n.max_iters = numerics.unsigned_integer("max_iters");
        if (n.max_iters == 0) numerics.fail("max_iters", "must be at least 1");
      }
      if (numerics.has("mass_quadrature")) {
        const std::string rule = numerics.string("mass_quadrature");
        if (rule == "interior") {
          n.mass_quadrature = Quadrature::InteriorNodes;
        } else if (rule == "left") {
          n.mass_quadrature = Quadrature::LeftRectangle;
        } else {
          numerics.fail("mass_quadrature", "expected interior or left");
        }
      }
    }

    void parse_run(const Node& run, RunConfig& out) {
      run.allow_only({"mode", "output_dir", "seed", "agents", "mc_dt_ratio", "snapshots", "h_ladder"});
      auto& r = out.run;
      if (run.has("mode")) {
        auto mode = parse_run_mode(run.string("mode"));
        if (!mode) run.fail("mode", "expected solve, oracle or refine-study");
        r.mode = *mode;
      }
      if (run.has("output_dir")) r.output_dir = run.string("output_dir");
      if (run.has("seed")) r.seed = run.unsigned_integer("seed");
      if (run.has("agents")) {
        r.agents = run.unsigned_integer("agents");
        if (r.agents == 0) run.fail("agents", "must be at least 1");
      }
      r.mc_dt_ratio = run.number_or("mc_dt_ratio", r.mc_dt_ratio);
      if (!(r.mc_dt_ratio > 0.0)) run.fail("mc_dt_ratio", "must be positive");
      if (run.has("snapshots")) r.snapshots = run.unsigned_integer("snapshots");
      if (run.has("h_ladder")) {
        r.h_ladder = run.numbers("h_ladder");
        if (r.h_ladder.empty()) run.fail("h_ladder", "must not be empty");
        for (double h : r.h_ladder) {
          if (!(h > 0.0)) run.fail("h_ladder", "steps must be positive");
        }
      }
    }
  }  // namespace

  RunConfig parse_config(std::string_view text) {
    json doc;
    try {
      doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
      const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
      std::string what = e.what();
      if (auto pos = what.find("syntax error"); pos != std::string::npos) what = what.substr(pos);
      throw ParseError(line, column, what);
    }
    Node root(doc, "");
    root.require_object("config");
    root.allow_only({"version", "name", "geometry", "network", "problem", "numerics", "run"});
    if (root.unsigned_integer("version") != 1) root.fail("version", "unsupported schema version");

    RunConfig out;
    if (root.has("name")) out.name = root.string("name");
    if (root.has("geometry")) out.geometry = root.string("geometry");
    parse_network(root.object("network"), out);
    parse_problem(root.object("problem"), out);
    if (root.has("numerics")) {
      parse_numerics(root.object("numerics"), out);
    } else {
      parse_numerics(Node(json::object(), "numerics"), out);
    }
    if (root.has("run")) parse_run(root.object("run"), out);
    return out;
  }

  RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("config", "config", "cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
  }

  std::string emit_config(const RunConfig& c) {
    nlohmann::ordered_json doc;
    doc["version"] = 1;
    doc["name"] = c.name;
    doc["geometry"] = c.geometry;

    auto& net = doc["network"];
    net["vertices"] = nlohmann::ordered_json::array();
    for (const auto& v : c.vertices) {
      net["vertices"].push_back({{"id", v.id}, {"x", v.position.x}, {"y", v.position.y}});
    }
    net["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : c.edges) {
      nlohmann::ordered_json edge{{"id", e.id}, {"tail", e.tail}, {"head", e.head}};
      if (e.length) edge["length"] = *e.length;
      net["edges"].push_back(edge);
    }
    net["exit_vertex"] = c.exit_vertex;

    auto& problem = doc["problem"];
    problem["t0"] = c.cost.t0;
    problem["T_max"] = c.cost.t_max;
    problem["theta"] = c.theta;
    problem["cost"] = {{"c1", c.cost.lateness_scheduled}, {"c2", c.cost.lateness_actual}, {"c3", c.cost.waiting}};
    auto& mass = problem["initial_mass"];
    mass["kind"] = to_string(c.initial_mass.kind);
    if (c.initial_mass.kind == InitialMassConfig::Kind::Bumps) {
      mass["bumps"] = nlohmann::ordered_json::array();
      for (const auto& b : c.initial_mass.bumps) {
        mass["bumps"].push_back({{"center", {b.center.x, b.center.y}}, {"radius", b.radius}});
      }
    } else if (c.initial_mass.kind == InitialMassConfig::Kind::Tabulated) {
      mass["edges"] = nlohmann::ordered_json::array();
      for (const auto& t : c.initial_mass.tables) mass["edges"].push_back({{"edge", t.edge}, {"values", t.values}});
    }

    auto& numerics = doc["numerics"];
    numerics["h"] = c.numerics.h;
    numerics["cfl_factor"] = c.numerics.cfl_factor;
    numerics["tol"] = c.numerics.tol;
    if (c.numerics.t_init) numerics["T_init"] = *c.numerics.t_init;
    numerics["max_iters"] = c.numerics.max_iters;
    numerics["mass_quadrature"] = to_string(c.numerics.mass_quadrature);

    auto& run = doc["run"];
    run["mode"] = to_string(c.run.mode);
    run["output_dir"] = c.run.output_dir;
    run["seed"] = c.run.seed;
    run["agents"] = c.run.agents;
    run["mc_dt_ratio"] = c.run.mc_dt_ratio;
    run["snapshots"] = c.run.snapshots;
    run["h_ladder"] = c.run.h_ladder;
    return doc.dump(2) + "\n";
  }

  std::shared_ptr<const Network> build_network(const RunConfig& config) {
    try {
      return std::make_shared<const Network>(Network::build(config.vertices, config.edges, config.exit_vertex));
    } catch (const NetworkError& e) {
      throw ValidationError("network", "network", e.what());
    }
  }

  SpatialFunction initial_density(const RunConfig& config) {
    const auto& mass = config.initial_mass;
    switch (mass.kind) {
      case InitialMassConfig::Kind::Abs:
        return [](const NetworkPoint& p) { return std::hypot(p.position.x, p.position.y); };
      case InitialMassConfig::Kind::Bumps:
        return [bumps = mass.bumps](const NetworkPoint& p) {
          double g = 0.0;
          for (const auto& b : bumps) {
            const double dx = p.position.x - b.center.x;
            const double dy = p.position.y - b.center.y;
            g += std::max(b.radius * b.radius - dx * dx - dy * dy, 0.0);
          }
          return g;
        };
      case InitialMassConfig::Kind::Tabulated:
        break;
    }
    auto network = build_network(config);
    return [tables = mass.tables, network](const NetworkPoint& p) {
      for (const auto& t : tables) {
        if (t.edge != p.edge) continue;
        const double length = network->edge(p.edge).length;
        const double pos = std::clamp(p.arc / length, 0.0, 1.0) * static_cast<double>(t.values.size() - 1);
        const auto k = std::min(static_cast<std::size_t>(pos), t.values.size() - 2);
        const double w = pos - static_cast<double>(k);
        return (1.0 - w) * t.values[k] + w * t.values[k + 1];
      }
      return 0.0;
    };
  }

  ProblemSpec make_problem(const RunConfig& config, std::optional<double> h) {
    ProblemSpec spec;
    spec.network = build_network(config);
    spec.cost = config.cost;
    spec.theta = config.theta;
    spec.initial_density = initial_density(config);
    spec.h_target = h.value_or(config.numerics.h);
    spec.cfl_factor = config.numerics.cfl_factor;
    spec.tolerance = config.numerics.tol;
    spec.start_guess = config.numerics.t_init;
    spec.max_iters = config.numerics.max_iters;
    spec.mass_rule = config.numerics.mass_quadrature;
    try {
      spec.validate();
    } catch (const NumericalError& e) {
      throw ValidationError("problem", "problem", e.what());
    }
    return spec;
  }

}  // namespace mfgnet
