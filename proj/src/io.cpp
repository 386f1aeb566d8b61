#include "sccm/io.hpp"

#include <fstream>
#include <sstream>

#include "sccm/errors.hpp"

namespace sccm {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end())
    throw DataError(std::string(what) + ": missing field \"" + key + "\"");
  return *it;
}

std::string edge_key(const Partition& part, const Edge& e) {
  return part.var_name(e.a) + "--" + part.var_name(e.b);
}

}  // namespace

std::shared_ptr<const Partition> partition_from_json(const json& j) {
  if (!j.is_object()) throw DataError("partition: expected a JSON object");
  const json& groups = require(j, "groups", "partition");
  if (!groups.is_array() || groups.empty())
    throw DataError("partition: \"groups\" must be a non-empty array");
  std::vector<Partition::Group> gs;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const json& g = groups[gi];
    Partition::Group out;
    out.name = require(g, "name", "partition group").get<std::string>();
    const json& items = require(g, "items", "partition group");
    if (!items.is_array() || items.empty())
      throw DataError("partition: group \"" + out.name + "\" has no items");
    for (const json& it : items) {
      if (!it.is_string())
        throw DataError("partition: group \"" + out.name + "\" has a non-string item");
      out.items.push_back(it.get<std::string>());
    }
    gs.push_back(std::move(out));
  }
  return std::make_shared<Partition>(std::move(gs));
}

json partition_to_json(const Partition& part) {
  json groups = json::array();
  for (int m = 0; m < part.n_groups(); ++m) {
    json items = json::array();
    for (int v : part.group_members(m)) items.push_back(part.var_name(v));
    groups.push_back({{"name", part.group_name(m)}, {"items", std::move(items)}});
  }
  return json{{"schema_version", kPartitionSchemaVersion}, {"groups", std::move(groups)}};
}

ModelFile model_from_json(const json& j) {
  if (!j.is_object()) throw DataError("model: expected a JSON object");
  auto part = partition_from_json(j);
  MixedGraph g(part);

  const json& edges = require(j, "edges", "model");
  if (!edges.is_array()) throw DataError("model: \"edges\" must be an array");
  for (const json& e : edges) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string())
      throw DataError("model: each edge must be a pair of variable names");
    int a = part->var_index(e[0].get<std::string>());
    int b = part->var_index(e[1].get<std::string>());
    if (g.has_edge(a, b))
      throw DataError("model: duplicate edge " + e[0].get<std::string>() + "--" +
                      e[1].get<std::string>());
    g.add_edge(a, b);
  }

  ModelFile m(std::move(g));
  const int p = part->n_vars();
  const int G = part->n_groups();
  m.params.slopes.resize(p);
  m.params.intercepts.resize(p);
  const json& beta = require(j, "beta", "model");
  for (int v = 0; v < p; ++v) {
    const std::string& name = part->var_name(v);
    auto it = beta.find(name);
    if (it == beta.end()) throw DataError("model: beta missing variable \"" + name + "\"");
    m.params.slopes[v] = require(*it, "slope", "model beta").get<double>();
    m.params.intercepts[v] = require(*it, "intercept", "model beta").get<double>();
  }

  const json& sig = require(j, "sigma", "model");
  if (!sig.is_array() || sig.size() != static_cast<std::size_t>(G))
    throw DataError("model: sigma must be a " + std::to_string(G) + "x" + std::to_string(G) +
                    " matrix");
  m.params.sigma.assign(static_cast<std::size_t>(G) * G, 0.0);
  for (int r = 0; r < G; ++r) {
    const json& row = sig[r];
    if (!row.is_array() || row.size() != static_cast<std::size_t>(G))
      throw DataError("model: sigma row " + std::to_string(r) + " has wrong length");
    for (int c = 0; c < G; ++c) m.params.sigma[r * G + c] = row[c].get<double>();
  }

  const json& theta = require(j, "theta", "model");
  for (const Edge& e : m.graph.edges()) {
    std::string key = edge_key(*part, e);
    auto it = theta.find(key);
    if (it == theta.end()) throw DataError("model: theta missing edge \"" + key + "\"");
    m.params.thetas[e] = it->get<double>();
  }
  if (theta.size() != m.graph.edges().size())
    throw DataError("model: theta has entries for non-edges");

  if (auto it = j.find("sigma_raw"); it != j.end()) {
    m.sigma_raw.assign(static_cast<std::size_t>(G) * G, 0.0);
    for (int r = 0; r < G; ++r)
      for (int c = 0; c < G; ++c) m.sigma_raw[r * G + c] = (*it)[r][c].get<double>();
  }

  m.params.validate(m.graph);
  return m;
}

json model_to_json(const ModelFile& m) {
  const Partition& part = *m.partition;
  const int G = part.n_groups();
  json j = partition_to_json(part);
  j["schema_version"] = kModelSchemaVersion;

  json edges = json::array();
  for (const Edge& e : m.graph.edges())
    edges.push_back({part.var_name(e.a), part.var_name(e.b)});
  j["edges"] = std::move(edges);

  json beta = json::object();
  for (int v = 0; v < part.n_vars(); ++v)
    beta[part.var_name(v)] = {{"slope", m.params.slopes[v]},
                              {"intercept", m.params.intercepts[v]}};
  j["beta"] = std::move(beta);

  json sig = json::array();
  for (int r = 0; r < G; ++r) {
    json row = json::array();
    for (int c = 0; c < G; ++c) row.push_back(m.params.sigma[r * G + c]);
    sig.push_back(std::move(row));
  }
  j["sigma"] = std::move(sig);

  json theta = json::object();
  for (const auto& [e, v] : m.params.thetas) theta[edge_key(part, e)] = v;
  j["theta"] = std::move(theta);

  if (!m.sigma_raw.empty()) {
    json raw = json::array();
    for (int r = 0; r < G; ++r) {
      json row = json::array();
      for (int c = 0; c < G; ++c) row.push_back(m.sigma_raw[r * G + c]);
      raw.push_back(std::move(row));
    }
    j["sigma_raw"] = std::move(raw);
  }
  return j;
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
  return j;
}

void save_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("write failed: " + path);
}

std::shared_ptr<const Partition> load_partition(const std::string& path) {
  try {
    return partition_from_json(load_json(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

ModelFile load_model(const std::string& path) {
  try {
    return model_from_json(load_json(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void save_model(const std::string& path, const ModelFile& m) {
  save_json(path, model_to_json(m));
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  Dataset d;
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      if (cell.empty()) throw DataError(path + ": empty column name in header");
      d.names.push_back(cell);
    }
  }
  d.p = d.names.size();
  if (d.p == 0) throw DataError(path + ": no columns");

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      if (col > d.p)
        throw DataError(path + ": row " + std::to_string(row) + " has more than " +
                        std::to_string(d.p) + " columns");
      if (cell == "0") {
        d.values.push_back(0);
      } else if (cell == "1") {
        d.values.push_back(1);
      } else {
        throw DataError(path + ": row " + std::to_string(row) + ", column \"" +
                        d.names[col - 1] + "\": expected 0 or 1, got \"" + cell + "\"");
      }
    }
    if (col != d.p)
      throw DataError(path + ": row " + std::to_string(row) + " has " + std::to_string(col) +
                      " columns, expected " + std::to_string(d.p));
  }
  d.n = row;
  return d;
}

void save_csv(const std::string& path, const Dataset& d) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  for (std::size_t c = 0; c < d.p; ++c) out << (c ? "," : "") << d.names[c];
  out << '\n';
  for (std::size_t r = 0; r < d.n; ++r) {
    for (std::size_t c = 0; c < d.p; ++c)
      out << (c ? "," : "") << static_cast<int>(d.at(r, c));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace sccm
