#include "viewrank/io/checkpoint.hpp"

#include <filesystem>

#include "viewrank/io/container.hpp"
#include "viewrank/io/errors.hpp"
#include "viewrank/io/json_io.hpp"

namespace viewrank::io {

std::string manifest_path(const std::string& checkpoint_path) {
  return std::filesystem::path(checkpoint_path).replace_extension(".json").string();
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::vector<TensorEntry> entries;
  json tensors = json::array();
  for (const auto& t : ckpt.params.tensors) {
    entries.push_back({t.name, {t.dims.begin(), t.dims.end()}, t.values});
    tensors.push_back({{"name", t.name}, {"dims", t.dims}});
  }
  toy::TrainConfig holder;
  holder.model = ckpt.params.config;
  json manifest;
  manifest["format"] = "viewrank-checkpoint";
  manifest["version"] = 1;
  manifest["tensor_file"] = std::filesystem::path(path).filename().string();
  manifest["sampler"] = std::string(toy::to_string(ckpt.sampler));
  manifest["model"] = train_config_to_json(holder)["model"];
  manifest["tensors"] = tensors;
  save_container(path, entries);
  write_json_file(manifest_path(path), manifest);
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string mpath = manifest_path(path);
  const json m = read_json_file(mpath);
  if (!m.is_object() || m.value("format", "") != "viewrank-checkpoint") {
    throw ConfigError(mpath, "not a checkpoint manifest");
  }
  Checkpoint ckpt;
  json wrapper;
  wrapper["train"]["model"] = m.at("model");
  try {
    ckpt.params.config = toy_config_from_json(wrapper).train.model;
  } catch (const ConfigError& e) {
    throw ConfigError(mpath + ":" + e.path(), e.what());
  }
  const auto sampler = toy::parse_sampler_kind(m.value("sampler", ""));
  if (!sampler) throw ConfigError(mpath + ":sampler", "unknown sampler");
  ckpt.sampler = *sampler;

  const auto entries = load_container(path);
  // Layout comes from the config; names and dims must match it exactly.
  const toy::ModelParams layout = toy::init_model(ckpt.params.config, 0);
  if (entries.size() != layout.tensors.size()) {
    throw DataError(path + ": has " + std::to_string(entries.size()) + " tensors, model needs " +
                    std::to_string(layout.tensors.size()));
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& want = layout.tensors[i];
    const auto& got = entries[i];
    const std::vector<std::size_t> dims(got.dims.begin(), got.dims.end());
    if (got.name != want.name || dims != want.dims) {
      throw DataError(path + ": tensor " + std::to_string(i) + " is '" + got.name + "', expected '" + want.name +
                      "' with matching dims");
    }
    ckpt.params.tensors.push_back({got.name, dims, got.values});
  }
  return ckpt;
}

}  // namespace viewrank::io
