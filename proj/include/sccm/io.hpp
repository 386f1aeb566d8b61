#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "sccm/model.hpp"

namespace sccm {

inline constexpr int kPartitionSchemaVersion = 1;
inline constexpr int kModelSchemaVersion = 1;
inline constexpr int kMetricsSchemaVersion = 1;
inline constexpr int kSummarySchemaVersion = 1;

// A self-contained model artifact: partition, graph, parameters, and (for
// simulated ground truth) the unsnapped latent correlations.
struct ModelFile {
  std::shared_ptr<const Partition> partition;
  MixedGraph graph;
  ModelParams params;
  std::vector<double> sigma_raw;  // empty unless this is simulator output

  explicit ModelFile(MixedGraph g) : partition(g.partition_ptr()), graph(std::move(g)) {}
};

std::shared_ptr<const Partition> partition_from_json(const nlohmann::json& j);
nlohmann::json partition_to_json(const Partition& part);

ModelFile model_from_json(const nlohmann::json& j);
nlohmann::json model_to_json(const ModelFile& m);

std::shared_ptr<const Partition> load_partition(const std::string& path);
ModelFile load_model(const std::string& path);
void save_model(const std::string& path, const ModelFile& m);

Dataset load_csv(const std::string& path);
void save_csv(const std::string& path, const Dataset& d);

nlohmann::json load_json(const std::string& path);
void save_json(const std::string& path, const nlohmann::json& j);

}  // namespace sccm
