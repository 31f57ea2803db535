#pragma once

#include <cstdint>
#include <filesystem>

#include <json.hpp>

#include "zsd/model.hpp"

namespace zsd {

struct Checkpoint {
  std::uint64_t rng_seed = 0;
  ModelConfig config;
  ClassVocabulary vocab;
  ModelParams params;
};

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

nlohmann::json model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig defaults = {});

nlohmann::json vocab_to_json(const ClassVocabulary& vocab);
ClassVocabulary vocab_from_json(const nlohmann::json& j);

void save_vocab_json(const std::filesystem::path& path, const ClassVocabulary& vocab);
ClassVocabulary load_vocab_json(const std::filesystem::path& path);

/// Versioned JSON record of every parameter matrix with shape headers plus
/// the training seed. Doubles are written in shortest round-trip form, so a
/// save/load cycle reproduces parameters bit for bit.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace zsd
