#pragma once

#include <string>

#include "viewrank/toy/model.hpp"

namespace viewrank::io {

struct Checkpoint {
  toy::ModelParams params;
  toy::SamplerKind sampler = toy::SamplerKind::Refine;
};

/// Writes the parameter tensors to `path` (tensor container, one entry per
/// tensor) and a JSON manifest next to it, `path` with extension ".json",
/// holding the model config, sampler and tensor list.
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
/// Reads both files back and checks that they agree with each other.
Checkpoint load_checkpoint(const std::string& path);

std::string manifest_path(const std::string& checkpoint_path);

}  // namespace viewrank::io
