#include "mongegap/checkpoint.hpp"

#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "mongegap/io.hpp"

namespace mongegap {

namespace {
constexpr int kFormatVersion = 1;
}

void save_checkpoint(const std::string& path, const MapModel& model) {
  const Vector theta = model.net.flatten();
  nlohmann::json doc;
  doc["format_version"] = kFormatVersion;
  doc["parameterization"] = to_string(model.parameterization);
  doc["cost"] = model.cost.to_string();
  doc["layer_dims"] = model.net.layer_dims;
  doc["activation"] = to_string(model.net.activation);
  doc["has_residual"] = model.net.residual.has_value();
  doc["params"] = std::vector<double>(theta.data(), theta.data() + theta.size());
  atomic_write_text(path, doc.dump(2) + "\n");
}

MapModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  nlohmann::json doc;
  in >> doc;
  if (doc.at("format_version").get<int>() != kFormatVersion)
    throw std::runtime_error("load_checkpoint: unsupported format version");

  MapModel model;
  model.parameterization = parse_parameterization(doc.at("parameterization").get<std::string>());
  model.cost = CostSpec::parse(doc.at("cost").get<std::string>());
  const auto layer_dims = doc.at("layer_dims").get<std::vector<int>>();
  const auto activation = parse_activation(doc.at("activation").get<std::string>());
  model.net = make_mlp(layer_dims, activation, doc.at("has_residual").get<bool>());
  const auto params = doc.at("params").get<std::vector<double>>();
  if (static_cast<Index>(params.size()) != model.net.parameter_count())
    throw std::runtime_error("load_checkpoint: parameter count mismatch");
  model.net.unflatten(Eigen::Map<const Vector>(params.data(), static_cast<Index>(params.size())));
  return model;
}

}  // namespace mongegap
