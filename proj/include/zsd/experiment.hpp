#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "zsd/eval.hpp"
#include "zsd/model.hpp"
#include "zsd/synthdata.hpp"
#include "zsd/trainer.hpp"

namespace zsd {

struct EvalConfig {
  double score_threshold = 0.05;
  double nms_threshold = 0.5;
  std::vector<double> iou_thresholds = {0.4, 0.5, 0.6};
  double ap_iou_threshold = 0.5;
  std::size_t recall_k = 100;
};

/// One experiment = data generation + model + training + evaluation settings.
/// Every field has a default, so a config file only names what it changes.
/// The model's input widths always follow the data section.
struct ExperimentConfig {
  SynthConfig data;
  ModelConfig model;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "out";
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace zsd
