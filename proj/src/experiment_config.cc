#include "resilience/experiment_config.h"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <toml.hpp>

namespace resilience {

ConfigError::ConfigError(std::string field, const std::string& message)
    : std::runtime_error(fmt::format("{}: {}", field, message)),
      field_(std::move(field)) {}

double GridAxis::At(int i) const {
  if (points == 1) return min;
  return min + (max - min) * static_cast<double>(i) / (points - 1);
}

std::vector<Eigen::VectorXd> GridSpec::Points() const {
  std::vector<Eigen::VectorXd> out;
  out.reserve(size());
  for (int j = 0; j < y.points; ++j) {
    for (int i = 0; i < x.points; ++i) {
      Eigen::VectorXd p = base;
      p(dims[0]) = x.At(i);
      p(dims[1]) = y.At(j);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::vector<SpecPtr> ExperimentConfig::ComponentSpecs() const {
  std::vector<SpecPtr> out;
  if (!compose) return out;
  for (const auto& text : compose->components) out.push_back(ParseSpec(text, sets));
  return out;
}

namespace {

std::string Index(const std::string& path, std::size_t i) {
  return fmt::format("{}[{}]", path, i);
}

std::string Join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : fmt::format("{}.{}", path, key);
}

void CheckKeys(const toml::table& table, const std::string& path,
               std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, node] : table) {
    bool known = false;
    for (auto a : allowed) known = known || key.str() == a;
    if (!known) throw ConfigError(Join(path, key.str()), "unknown key");
  }
}

const toml::table& Table(const toml::table& parent, std::string_view key,
                         const std::string& path) {
  const toml::node* node = parent.get(key);
  if (node == nullptr) throw ConfigError(Join(path, key), "missing table");
  if (!node->is_table()) throw ConfigError(Join(path, key), "expected a table");
  return *node->as_table();
}

double Number(const toml::node& node, const std::string& path) {
  if (auto v = node.value<double>()) {
    if (!std::isfinite(*v)) throw ConfigError(path, "expected a finite number");
    return *v;
  }
  throw ConfigError(path, "expected a number");
}

std::int64_t Integer(const toml::node& node, const std::string& path) {
  if (!node.is_integer()) throw ConfigError(path, "expected an integer");
  return node.as_integer()->get();
}

std::string String(const toml::node& node, const std::string& path) {
  if (!node.is_string()) throw ConfigError(path, "expected a string");
  return node.as_string()->get();
}

const toml::array& Array(const toml::node& node, const std::string& path) {
  if (!node.is_array()) throw ConfigError(path, "expected an array");
  return *node.as_array();
}

Eigen::VectorXd Vector(const toml::node& node, const std::string& path) {
  const toml::array& arr = Array(node, path);
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(i) = Number(arr[i], Index(path, i));
  return v;
}

// Nested arrays, one inner array per row.
Eigen::MatrixXd Matrix(const toml::node& node, const std::string& path) {
  const toml::array& rows = Array(node, path);
  if (rows.empty()) throw ConfigError(path, "expected at least one row");
  Eigen::MatrixXd M;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::string row_path = Index(path, i);
    if (!rows[i].is_array()) {
      throw ConfigError(row_path, "expected a row array (matrices are nested arrays)");
    }
    const Eigen::VectorXd row = Vector(rows[i], row_path);
    if (i == 0) {
      if (row.size() == 0) throw ConfigError(row_path, "empty row");
      M.resize(rows.size(), row.size());
    } else if (row.size() != M.cols()) {
      throw ConfigError(row_path, fmt::format("expected {} columns, got {}", M.cols(),
                                              row.size()));
    }
    M.row(i) = row.transpose();
  }
  return M;
}

const toml::node& Required(const toml::table& table, std::string_view key,
                           const std::string& path) {
  const toml::node* node = table.get(key);
  if (node == nullptr) throw ConfigError(Join(path, key), "missing required field");
  return *node;
}

// Either {H, h} or {lower, upper}.
Polytope ReadPolytope(const toml::table& table, const std::string& name,
                      const std::string& path) {
  CheckKeys(table, path, {"H", "h", "lower", "upper"});
  const bool has_h = table.contains("H") || table.contains("h");
  const bool has_box = table.contains("lower") || table.contains("upper");
  if (has_h == has_box) {
    throw ConfigError(path, "give either H and h, or lower and upper");
  }
  try {
    if (has_h) {
      const Eigen::MatrixXd H = Matrix(Required(table, "H", path), Join(path, "H"));
      const Eigen::VectorXd h = Vector(Required(table, "h", path), Join(path, "h"));
      if (h.size() != H.rows()) {
        throw ConfigError(Join(path, "h"), fmt::format("expected {} entries to match H, got {}",
                                                       H.rows(), h.size()));
      }
      return Polytope(name, H, h);
    }
    const Eigen::VectorXd lo = Vector(Required(table, "lower", path), Join(path, "lower"));
    const Eigen::VectorXd hi = Vector(Required(table, "upper", path), Join(path, "upper"));
    if (lo.size() != hi.size()) {
      throw ConfigError(Join(path, "upper"), "lower and upper differ in length");
    }
    return Polytope::Box(name, lo, hi);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path, e.what());
  }
}

void CheckDim(const Polytope& p, int dim, const std::string& path) {
  if (p.dim() != dim) {
    throw ConfigError(path, fmt::format("set has dimension {}, expected {}", p.dim(), dim));
  }
}

GridAxis ReadAxis(const toml::table& grid, std::string_view key, const std::string& path) {
  const std::string axis_path = Join(path, key);
  const toml::node& node = Required(grid, key, path);
  if (!node.is_table()) throw ConfigError(axis_path, "expected {min, max, points}");
  const toml::table& t = *node.as_table();
  CheckKeys(t, axis_path, {"min", "max", "points"});
  GridAxis axis;
  axis.min = Number(Required(t, "min", axis_path), Join(axis_path, "min"));
  axis.max = Number(Required(t, "max", axis_path), Join(axis_path, "max"));
  const std::int64_t points = Integer(Required(t, "points", axis_path), Join(axis_path, "points"));
  if (points < 1 || points > 100000) {
    throw ConfigError(Join(axis_path, "points"), "expected 1..100000");
  }
  if (axis.max < axis.min) throw ConfigError(Join(axis_path, "max"), "max below min");
  axis.points = static_cast<int>(points);
  return axis;
}

GridSpec ReadGrid(const toml::table& grid, int state_dim) {
  const std::string path = "grid";
  CheckKeys(grid, path, {"x", "y", "dims", "base"});
  GridSpec spec;
  spec.x = ReadAxis(grid, "x", path);
  spec.y = ReadAxis(grid, "y", path);
  if (const toml::node* dims = grid.get("dims")) {
    const toml::array& arr = Array(*dims, "grid.dims");
    if (arr.size() != 2) throw ConfigError("grid.dims", "expected two state indices");
    for (int k = 0; k < 2; ++k) {
      const std::int64_t d = Integer(arr[k], Index("grid.dims", k));
      if (d < 0 || d >= state_dim) {
        throw ConfigError(Index("grid.dims", k),
                          fmt::format("state index out of range [0, {})", state_dim));
      }
      spec.dims[k] = static_cast<int>(d);
    }
    if (spec.dims[0] == spec.dims[1]) throw ConfigError("grid.dims", "indices must differ");
  } else if (state_dim != 2) {
    throw ConfigError("grid", fmt::format(
        "state has dimension {}; a planar grid needs dims = [i, j]", state_dim));
  }
  spec.base = Eigen::VectorXd::Zero(state_dim);
  if (const toml::node* base = grid.get("base")) {
    spec.base = Vector(*base, "grid.base");
    if (spec.base.size() != state_dim) {
      throw ConfigError("grid.base", fmt::format("expected {} entries", state_dim));
    }
  }
  return spec;
}

SpecPtr ParseSpecField(const std::string& text, const SetTable& sets,
                       const std::string& path) {
  try {
    return ParseSpec(text, sets);
  } catch (const SpecSyntaxError& e) {
    throw ConfigError(path, e.what());
  }
}

}  // namespace

ExperimentConfig ParseConfig(std::string_view text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw ConfigError(fmt::format("{}:{}:{}", source, where.line, where.column),
                      std::string(e.description()));
  }
  CheckKeys(root, "", {"name", "description", "spec", "horizon", "x0", "system", "sets",
                       "grid", "sweep", "validation", "compose", "output"});

  const toml::table& sys_table = Table(root, "system", "");
  CheckKeys(sys_table, "system", {"A", "Bu", "Bw", "wbar", "input_set"});
  const Eigen::MatrixXd A = Matrix(Required(sys_table, "A", "system"), "system.A");
  const Eigen::MatrixXd Bu = Matrix(Required(sys_table, "Bu", "system"), "system.Bu");
  const Eigen::MatrixXd Bw = Matrix(Required(sys_table, "Bw", "system"), "system.Bw");
  const double wbar = Number(Required(sys_table, "wbar", "system"), "system.wbar");
  if (A.rows() != A.cols()) throw ConfigError("system.A", "must be square");
  if (Bu.rows() != A.rows()) throw ConfigError("system.Bu", "row count differs from A");
  if (Bw.rows() != A.rows()) throw ConfigError("system.Bw", "row count differs from A");
  if (wbar < 0) throw ConfigError("system.wbar", "must be nonnegative");
  const Polytope input_set =
      ReadPolytope(Table(sys_table, "input_set", "system"), "U", "system.input_set");
  CheckDim(input_set, static_cast<int>(Bu.cols()), "system.input_set");
  const int n = static_cast<int>(A.rows());

  SetTable sets;
  if (const toml::node* node = root.get("sets")) {
    if (!node->is_table()) throw ConfigError("sets", "expected a table");
    for (const auto& [key, value] : *node->as_table()) {
      const std::string path = Join("sets", key.str());
      if (!value.is_table()) throw ConfigError(path, "expected a table");
      Polytope p = ReadPolytope(*value.as_table(), std::string(key.str()), path);
      CheckDim(p, n, path);
      sets.emplace(std::string(key.str()), std::move(p));
    }
  }

  const std::string spec_text = String(Required(root, "spec", ""), "spec");
  SpecPtr spec = ParseSpecField(spec_text, sets, "spec");
  const std::int64_t horizon = Integer(Required(root, "horizon", ""), "horizon");
  if (horizon < 1) throw ConfigError("horizon", "must be at least 1");
  if (RequiredHorizon(*spec) > horizon) {
    throw ConfigError("horizon", fmt::format("spec needs horizon {}, got {}",
                                             RequiredHorizon(*spec), horizon));
  }

  std::optional<Eigen::VectorXd> x0;
  if (const toml::node* node = root.get("x0")) {
    x0 = Vector(*node, "x0");
    if (x0->size() != n) throw ConfigError("x0", fmt::format("expected {} entries", n));
  }
  std::optional<GridSpec> grid;
  if (const toml::node* node = root.get("grid")) {
    if (x0) throw ConfigError("grid", "x0 and grid are mutually exclusive");
    if (!node->is_table()) throw ConfigError("grid", "expected a table");
    grid = ReadGrid(*node->as_table(), n);
  }
  if (!x0 && !grid) throw ConfigError("x0", "give an initial state x0 or a [grid] table");

  std::vector<double> sweep;
  if (const toml::node* node = root.get("sweep")) {
    if (!node->is_table()) throw ConfigError("sweep", "expected a table");
    CheckKeys(*node->as_table(), "sweep", {"wbar"});
    const Eigen::VectorXd w = Vector(Required(*node->as_table(), "wbar", "sweep"), "sweep.wbar");
    for (int i = 0; i < w.size(); ++i) {
      if (w(i) < 0) throw ConfigError(Index("sweep.wbar", i), "must be nonnegative");
      if (i > 0 && w(i) < w(i - 1)) throw ConfigError(Index("sweep.wbar", i), "list must be sorted");
      sweep.push_back(w(i));
    }
  }

  int samples = 0;
  std::uint64_t seed = 0;
  if (const toml::node* node = root.get("validation")) {
    if (!node->is_table()) throw ConfigError("validation", "expected a table");
    const toml::table& t = *node->as_table();
    CheckKeys(t, "validation", {"samples", "seed"});
    if (const toml::node* s = t.get("samples")) {
      const std::int64_t v = Integer(*s, "validation.samples");
      if (v < 0 || v > 100000000) throw ConfigError("validation.samples", "out of range");
      samples = static_cast<int>(v);
    }
    if (const toml::node* s = t.get("seed")) {
      const std::int64_t v = Integer(*s, "validation.seed");
      if (v < 0) throw ConfigError("validation.seed", "must be nonnegative");
      seed = static_cast<std::uint64_t>(v);
    }
  }

  std::optional<ComposeConfig> compose;
  if (const toml::node* node = root.get("compose")) {
    if (!node->is_table()) throw ConfigError("compose", "expected a table");
    const toml::table& t = *node->as_table();
    CheckKeys(t, "compose", {"mode", "components"});
    ComposeConfig c;
    if (const toml::node* m = t.get("mode")) {
      const std::string mode = String(*m, "compose.mode");
      if (mode == "conjunction") {
        c.mode = CompositionMode::kConjunction;
      } else if (mode == "disjunction") {
        c.mode = CompositionMode::kDisjunction;
      } else {
        throw ConfigError("compose.mode", "expected \"conjunction\" or \"disjunction\"");
      }
    }
    const toml::array& comps = Array(Required(t, "components", "compose"), "compose.components");
    if (comps.empty()) throw ConfigError("compose.components", "expected at least one component");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      const std::string path = Index("compose.components", i);
      c.components.push_back(String(comps[i], path));
      ParseSpecField(c.components.back(), sets, path);
    }
    compose = std::move(c);
  }

  std::string output_dir;
  std::optional<double> reference;
  if (const toml::node* node = root.get("output")) {
    if (!node->is_table()) throw ConfigError("output", "expected a table");
    const toml::table& t = *node->as_table();
    CheckKeys(t, "output", {"dir", "reference_resilience"});
    if (const toml::node* d = t.get("dir")) output_dir = String(*d, "output.dir");
    if (const toml::node* r = t.get("reference_resilience")) {
      reference = Number(*r, "output.reference_resilience");
    }
  }

  std::string name = "experiment";
  if (const toml::node* node = root.get("name")) name = String(*node, "name");
  std::string description;
  if (const toml::node* node = root.get("description")) {
    description = String(*node, "description");
  }
  if (output_dir.empty()) output_dir = "results/" + name;

  try {
    return ExperimentConfig{
        .name = std::move(name),
        .description = std::move(description),
        .system = LtiSystem(A, Bu, Bw, input_set, wbar),
        .sets = std::move(sets),
        .spec_text = spec_text,
        .spec = std::move(spec),
        .horizon = static_cast<int>(horizon),
        .x0 = std::move(x0),
        .grid = std::move(grid),
        .sweep_wbar = std::move(sweep),
        .samples = samples,
        .seed = seed,
        .compose = std::move(compose),
        .output_dir = std::move(output_dir),
        .reference_resilience = reference,
    };
  } catch (const std::invalid_argument& e) {
    throw ConfigError("system", e.what());
  }
}

ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open file");
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), path.string());
}

}  // namespace resilience
