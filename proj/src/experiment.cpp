#include "zsd/experiment.hpp"

#include <fstream>

#include "zsd/checkpoint.hpp"
#include "zsd/error.hpp"

namespace zsd {

namespace {

SynthConfig synth_config_from_json(const nlohmann::json& j, SynthConfig c = {}) {
  c.seen_classes = j.value("seen_classes", c.seen_classes);
  c.unseen_classes = j.value("unseen_classes", c.unseen_classes);
  c.semantic_dim = j.value("semantic_dim", c.semantic_dim);
  c.region_dim = j.value("region_dim", c.region_dim);
  c.train_images = j.value("train_images", c.train_images);
  c.test_images = j.value("test_images", c.test_images);
  c.min_objects = j.value("min_objects", c.min_objects);
  c.max_objects = j.value("max_objects", c.max_objects);
  c.proposals_per_image = j.value("proposals_per_image", c.proposals_per_image);
  c.feature_noise = j.value("feature_noise", c.feature_noise);
  c.embedding_mix_noise = j.value("embedding_mix_noise", c.embedding_mix_noise);
  c.min_mix_parents = j.value("min_mix_parents", c.min_mix_parents);
  c.max_mix_parents = j.value("max_mix_parents", c.max_mix_parents);
  c.proposal_jitter = j.value("proposal_jitter", c.proposal_jitter);
  c.background_proposal_fraction =
      j.value("background_proposal_fraction", c.background_proposal_fraction);
  c.iou_label_threshold = j.value("iou_label_threshold", c.iou_label_threshold);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json synth_config_to_json(const SynthConfig& c) {
  return {{"seen_classes", c.seen_classes},
          {"unseen_classes", c.unseen_classes},
          {"semantic_dim", c.semantic_dim},
          {"region_dim", c.region_dim},
          {"train_images", c.train_images},
          {"test_images", c.test_images},
          {"min_objects", c.min_objects},
          {"max_objects", c.max_objects},
          {"proposals_per_image", c.proposals_per_image},
          {"feature_noise", c.feature_noise},
          {"embedding_mix_noise", c.embedding_mix_noise},
          {"min_mix_parents", c.min_mix_parents},
          {"max_mix_parents", c.max_mix_parents},
          {"proposal_jitter", c.proposal_jitter},
          {"background_proposal_fraction", c.background_proposal_fraction},
          {"iou_label_threshold", c.iou_label_threshold},
          {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c = {}) {
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.momentum = j.value("momentum", c.momentum);
  c.seed = j.value("seed", c.seed);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  return c;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.learning_rate},
          {"momentum", c.momentum},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every}};
}

EvalConfig eval_config_from_json(const nlohmann::json& j, EvalConfig c = {}) {
  c.score_threshold = j.value("score_threshold", c.score_threshold);
  c.nms_threshold = j.value("nms_threshold", c.nms_threshold);
  c.iou_thresholds = j.value("iou_thresholds", c.iou_thresholds);
  c.ap_iou_threshold = j.value("ap_iou_threshold", c.ap_iou_threshold);
  c.recall_k = j.value("recall_k", c.recall_k);
  return c;
}

nlohmann::json eval_config_to_json(const EvalConfig& c) {
  return {{"score_threshold", c.score_threshold},
          {"nms_threshold", c.nms_threshold},
          {"iou_thresholds", c.iou_thresholds},
          {"ap_iou_threshold", c.ap_iou_threshold},
          {"recall_k", c.recall_k}};
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  if (j.contains("data")) config.data = synth_config_from_json(j.at("data"));
  if (j.contains("model")) config.model = model_config_from_json(j.at("model"));
  if (j.contains("train")) config.train = train_config_from_json(j.at("train"));
  if (j.contains("eval")) config.eval = eval_config_from_json(j.at("eval"));
  config.data_dir = j.value("data_dir", config.data_dir.string());
  config.out_dir = j.value("out_dir", config.out_dir.string());

  // the model consumes whatever the generator produces
  config.model.region_dim = config.data.region_dim;
  config.model.semantic_dim = config.data.semantic_dim;
  return config;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& config) {
  return {{"data", synth_config_to_json(config.data)},
          {"model", model_config_to_json(config.model)},
          {"train", train_config_to_json(config.train)},
          {"eval", eval_config_to_json(config.eval)},
          {"data_dir", config.data_dir.string()},
          {"out_dir", config.out_dir.string()}};
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::io_error, "malformed config " + path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j);
}

}  // namespace zsd
