#include "zsd/commands.hpp"

#include <fstream>
#include <iostream>

#include "zsd/checkpoint.hpp"
#include "zsd/error.hpp"
#include "zsd/semantics.hpp"

namespace zsd {

namespace files {

std::string dataset(Split split) {
  switch (split) {
    case Split::train: return "train.jsonl";
    case Split::test_seen: return "test_seen.jsonl";
    case Split::test_zsd: return "test_zsd.jsonl";
    case Split::test_gzsd: return "test_gzsd.jsonl";
  }
  fail(ErrorCode::invalid_argument, "invalid split");
}

std::string detections(DetectMode mode) {
  return "detections_" + detect_mode_name(mode) + ".jsonl";
}
std::string report(DetectMode mode) {
  return "report_" + detect_mode_name(mode) + ".json";
}
std::string per_class(DetectMode mode) {
  return "per_class_" + detect_mode_name(mode) + ".csv";
}

}  // namespace files

namespace {

constexpr Split kAllSplits[] = {Split::train, Split::test_seen, Split::test_zsd,
                                Split::test_gzsd};

Split split_for_mode(DetectMode mode) {
  switch (mode) {
    case DetectMode::seen: return Split::test_seen;
    case DetectMode::zsd: return Split::test_zsd;
    case DetectMode::gzsd: return Split::test_gzsd;
  }
  fail(ErrorCode::invalid_argument, "invalid mode");
}

struct LoadedData {
  ClassVocabulary vocab;
  SemanticTable table;
};

LoadedData load_data_dir(const ExperimentConfig& config) {
  const auto vocab = load_vocab_json(config.data_dir / files::vocab);
  auto table = load_embeddings(config.data_dir / files::embeddings, vocab);
  return {vocab, std::move(table)};
}

}  // namespace

void cmd_gen_data(const ExperimentConfig& config, bool force) {
  require(config.data.unseen_classes > 0, ErrorCode::invalid_argument,
          "zero-shot detection needs at least one unseen class");

  std::filesystem::create_directories(config.data_dir);
  if (!force) {
    for (const char* name : {files::vocab, files::embeddings})
      require(!std::filesystem::exists(config.data_dir / name), ErrorCode::io_error,
              std::string(name) + " already exists; pass force to overwrite");
    for (Split split : kAllSplits)
      require(!std::filesystem::exists(config.data_dir / files::dataset(split)),
              ErrorCode::io_error,
              files::dataset(split) + " already exists; pass force to overwrite");
  }

  const ClassVocabulary vocab = make_vocabulary(config.data);
  const GeneratedEmbeddings generated =
      generate_embeddings(config.data, config.data.seed);

  save_vocab_json(config.data_dir / files::vocab, vocab);
  save_embeddings_csv(config.data_dir / files::embeddings, generated.table, vocab);
  for (Split split : kAllSplits) {
    const SynthDataset dataset = generate_scene(
        config.data, generated.table, vocab, split,
        mix_seed(config.data.seed, 0x50 + static_cast<std::uint64_t>(split)));
    save_dataset_jsonl(config.data_dir / files::dataset(split), dataset);
  }
}

void cmd_train(const ExperimentConfig& config) {
  const LoadedData data = load_data_dir(config);
  const SynthDataset train_split =
      load_dataset_jsonl(config.data_dir / files::dataset(Split::train));

  std::filesystem::create_directories(config.out_dir);
  std::ofstream log(config.out_dir / files::train_log);
  require(log.good(), ErrorCode::io_error, "cannot write training log");

  ModelConfig model_config = config.model;
  model_config.region_dim = train_split.region_dim;
  model_config.semantic_dim = data.table.dim();

  const auto write_checkpoint = [&](const std::filesystem::path& path,
                                    const ModelParams& params) {
    save_checkpoint(path, {config.train.seed, model_config, data.vocab, params});
  };

  const StepCallback on_step = [&](const TrainStep& step) {
    nlohmann::json j;
    j["epoch"] = step.epoch;
    j["step"] = step.step;
    j["l_reg"] = step.losses.regression;
    j["l_cls_s"] = step.losses.seen_classification;
    j["l_cls_u"] = step.losses.unseen_alignment;
    j["l_con_r"] = step.losses.region_contrastive;
    j["l_total"] = step.losses.total;
    log << j.dump() << '\n';
  };
  const EpochCallback on_epoch = [&](std::size_t epoch, const ModelParams& params) {
    if (config.train.checkpoint_every == 0) return;
    if ((epoch + 1) % config.train.checkpoint_every != 0) return;
    char name[48];
    std::snprintf(name, sizeof(name), "checkpoint_epoch%03zu.json", epoch + 1);
    write_checkpoint(config.out_dir / name, params);
  };

  const TrainResult result = train_model(train_split, data.table, data.vocab,
                                         model_config, config.train, on_step, on_epoch);
  write_checkpoint(config.out_dir / files::checkpoint, result.params);
}

EvalReport cmd_eval(const ExperimentConfig& config,
                    const std::filesystem::path& checkpoint_path, DetectMode mode) {
  const Checkpoint checkpoint = load_checkpoint(checkpoint_path);
  const LoadedData data = load_data_dir(config);
  require(checkpoint.vocab == data.vocab, ErrorCode::vocabulary_mismatch,
          "checkpoint vocabulary does not match the dataset");

  const SynthDataset test_split =
      load_dataset_jsonl(config.data_dir / files::dataset(split_for_mode(mode)));

  std::vector<std::vector<Detection>> detections;
  std::vector<std::vector<GtObject>> ground_truth;
  std::vector<DetectionRecord> records;
  detections.reserve(test_split.images.size());
  for (const auto& image : test_split.images) {
    auto dets = detect(checkpoint.params, checkpoint.config, image.proposals, data.table,
                       data.vocab, mode,
                       {config.eval.score_threshold, config.eval.nms_threshold});
    for (const auto& det : dets)
      records.push_back({image.image_id,
                         data.vocab.name(static_cast<std::size_t>(det.class_index)),
                         det.score, det.box});
    detections.push_back(std::move(dets));
    ground_truth.push_back(image.ground_truth);
  }

  std::filesystem::create_directories(config.out_dir);
  save_detections_jsonl(config.out_dir / files::detections(mode), records);

  const EvalReport report =
      build_report(detections, ground_truth, data.vocab, config.eval.iou_thresholds,
                   config.eval.ap_iou_threshold, mode, config.eval.recall_k);
  save_report_json(config.out_dir / files::report(mode), report);
  save_per_class_csv(config.out_dir / files::per_class(mode), report);
  return report;
}

void cmd_sweep(const ExperimentConfig& config, const std::string& parameter,
               std::span<const double> values) {
  require(parameter == "lambda" || parameter == "beta", ErrorCode::invalid_argument,
          "sweep parameter must be 'lambda' or 'beta'");
  require(!values.empty(), ErrorCode::invalid_argument, "sweep needs at least one value");

  std::filesystem::create_directories(config.out_dir);
  std::ofstream zsd_csv(config.out_dir / ("sweep_" + parameter + "_zsd.csv"));
  std::ofstream gzsd_csv(config.out_dir / ("sweep_" + parameter + "_gzsd.csv"));
  require(zsd_csv.good() && gzsd_csv.good(), ErrorCode::io_error,
          "cannot write sweep outputs");
  zsd_csv << parameter << ",map\n";
  gzsd_csv << parameter << ",map_seen,map_unseen,harmonic_mean\n";

  for (double value : values) {
    ExperimentConfig arm = config;
    if (parameter == "lambda") arm.model.lambda = value;
    else arm.model.beta = value;
    arm.out_dir = config.out_dir / ("sweep_" + parameter + "_" + format_double(value));

    cmd_train(arm);
    const EvalReport zsd_report =
        cmd_eval(arm, arm.out_dir / files::checkpoint, DetectMode::zsd);
    const EvalReport gzsd_report =
        cmd_eval(arm, arm.out_dir / files::checkpoint, DetectMode::gzsd);

    zsd_csv << format_double(value) << ',' << format_double(zsd_report.map) << '\n';
    gzsd_csv << format_double(value) << ',' << format_double(gzsd_report.map_seen) << ','
             << format_double(gzsd_report.map_unseen) << ','
             << format_double(gzsd_report.harmonic_mean) << '\n';
  }
  require(zsd_csv.good() && gzsd_csv.good(), ErrorCode::io_error,
          "write failed for sweep outputs");
}

void cmd_inspect_sim(const ExperimentConfig& config, std::ostream& out) {
  const LoadedData data = load_data_dir(config);
  const SimilarityMatrix sim =
      build_similarity_matrix(data.table, data.vocab, config.model.similarity_temperature);
  out << similarity_to_json(sim, data.vocab).dump(2) << '\n';
}

}  // namespace zsd
