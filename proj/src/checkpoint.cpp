// Model checkpoints as versioned JSON. Doubles are written with 17 significant
// digits, so save/load round-trips bit-exactly.

#include <fstream>

#include "json.hpp"
#include "muxlink/gnn.hpp"

namespace muxlink {

namespace {

constexpr const char* kFormat = "muxlink-dgcnn";
constexpr int kVersion = 1;

}  // namespace

void save_model(const Model& model, std::ostream& out) {
  const auto& hp = model.hyperparams();
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["hyperparams"] = {
      {"conv_channels", hp.conv_channels},
      {"conv1d_channels", hp.conv1d_channels},
      {"conv1d_kernel2", hp.conv1d_kernel2},
      {"dense_units", hp.dense_units},
      {"dropout", hp.dropout},
      {"epochs", hp.epochs},
      {"learning_rate", hp.learning_rate},
      {"sortpool_fraction", hp.sortpool_fraction},
      {"batch_size", hp.batch_size},
      {"seed", hp.seed},
  };
  j["max_label"] = model.max_label();
  j["k"] = model.k();
  j["feature_width"] = model.feature_width();
  auto& blocks = j["blocks"] = nlohmann::json::array();
  for (std::size_t i = 0; i < model.blocks().size(); ++i) {
    const auto& b = model.blocks()[i];
    auto m = model.block(i);
    std::vector<double> values(m.data(), m.data() + m.size());
    blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"values", values}});
  }
  out << j.dump() << "\n";
}

void save_model_file(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  save_model(model, out);
}

Model load_model(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != kFormat) throw Error("not a muxlink checkpoint");
  if (j.value("version", 0) != kVersion)
    throw Error("unsupported checkpoint version " + std::to_string(j.value("version", 0)));
  try {
    const auto& h = j.at("hyperparams");
    Hyperparams hp;
    hp.conv_channels = h.at("conv_channels").get<std::vector<int>>();
    hp.conv1d_channels = h.at("conv1d_channels").get<std::array<int, 2>>();
    hp.conv1d_kernel2 = h.at("conv1d_kernel2").get<int>();
    hp.dense_units = h.at("dense_units").get<int>();
    hp.dropout = h.at("dropout").get<double>();
    hp.epochs = h.at("epochs").get<int>();
    hp.learning_rate = h.at("learning_rate").get<double>();
    hp.sortpool_fraction = h.at("sortpool_fraction").get<double>();
    hp.batch_size = h.at("batch_size").get<int>();
    hp.seed = h.at("seed").get<std::uint64_t>();

    Model model(hp, j.at("max_label").get<int>(), j.at("k").get<int>());
    if (j.at("feature_width").get<int>() != model.feature_width())
      throw Error("checkpoint feature width disagrees with its max_label");
    const auto& blocks = j.at("blocks");
    if (blocks.size() != model.blocks().size()) throw Error("checkpoint has wrong number of blocks");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      const auto& b = model.blocks()[i];
      if (blocks[i].at("name").get<std::string>() != b.name ||
          blocks[i].at("rows").get<Eigen::Index>() != b.rows ||
          blocks[i].at("cols").get<Eigen::Index>() != b.cols)
        throw Error("checkpoint block '" + b.name + "' has the wrong shape");
      auto values = blocks[i].at("values").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(values.size()) != b.rows * b.cols)
        throw Error("checkpoint block '" + b.name + "' has the wrong size");
      std::copy(values.begin(), values.end(), model.block(i).data());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed checkpoint: ") + e.what());
  }
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace muxlink
