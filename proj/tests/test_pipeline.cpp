#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "zsd/checkpoint.hpp"
#include "zsd/commands.hpp"
#include "zsd/error.hpp"
#include "zsd/trainer.hpp"

using namespace zsd;

namespace {

ExperimentConfig tiny_experiment(const std::string& tag) {
  ExperimentConfig config;
  config.data.seen_classes = 5;
  config.data.unseen_classes = 2;
  config.data.semantic_dim = 6;
  config.data.region_dim = 10;
  config.data.train_images = 24;
  config.data.test_images = 10;
  config.data.proposals_per_image = 6;
  config.data.seed = 12;
  config.model.region_dim = 10;
  config.model.semantic_dim = 6;
  config.model.common_dim = 16;
  config.model.consistency_hidden = 8;
  config.model.contrast_dim = 8;
  config.train.epochs = 4;
  config.train.batch_size = 24;
  config.train.seed = 5;
  const auto root = std::filesystem::temp_directory_path() / ("zsd_pipe_" + tag);
  std::filesystem::remove_all(root);
  config.data_dir = root / "data";
  config.out_dir = root / "out";
  return config;
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("training reduces the total loss on a small dataset") {
  const ExperimentConfig config = tiny_experiment("loss");
  const ClassVocabulary vocab = make_vocabulary(config.data);
  const GeneratedEmbeddings generated = generate_embeddings(config.data, config.data.seed);
  const SynthDataset train_split =
      generate_scene(config.data, generated.table, vocab, Split::train, 1);

  double first_loss = 0.0, last_loss = 0.0;
  std::size_t steps = 0;
  TrainConfig train_config = config.train;
  train_config.epochs = 6;
  train_model(train_split, generated.table, vocab, config.model, train_config,
              [&](const TrainStep& step) {
                if (steps == 0) first_loss = step.losses.total;
                last_loss = step.losses.total;
                ++steps;
                CHECK(std::abs(step.losses.total -
                               (step.losses.regression + step.losses.seen_classification +
                                config.model.lambda * step.losses.unseen_alignment +
                                config.model.beta * step.losses.region_contrastive)) < 1e-12);
              });
  CHECK(steps > 0);
  CHECK(last_loss < first_loss);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const ExperimentConfig config = tiny_experiment("det");
  const ClassVocabulary vocab = make_vocabulary(config.data);
  const GeneratedEmbeddings generated = generate_embeddings(config.data, config.data.seed);
  const SynthDataset train_split =
      generate_scene(config.data, generated.table, vocab, Split::train, 1);

  const TrainResult a =
      train_model(train_split, generated.table, vocab, config.model, config.train);
  const TrainResult b =
      train_model(train_split, generated.table, vocab, config.model, config.train);
  CHECK(a.last_losses.total == b.last_losses.total);
  ModelParams pa = a.params, pb = b.params;
  const auto la = trainable_parameters(pa);
  const auto lb = trainable_parameters(pb);
  for (std::size_t i = 0; i < la.size(); ++i) CHECK(*la[i].value == *lb[i].value);
}

TEST_CASE("gen-data writes byte-identical files for the same config") {
  ExperimentConfig config = tiny_experiment("gen");
  cmd_gen_data(config);

  const auto first = file_bytes(config.data_dir / files::dataset(Split::train));
  const auto first_emb = file_bytes(config.data_dir / files::embeddings);
  CHECK(!first.empty());

  SUBCASE("overwrite requires force") {
    CHECK_THROWS_AS(cmd_gen_data(config), Error);
    cmd_gen_data(config, true);
    CHECK(file_bytes(config.data_dir / files::dataset(Split::train)) == first);
    CHECK(file_bytes(config.data_dir / files::embeddings) == first_emb);
  }
  SUBCASE("missing output directory is created") {
    config.data_dir = config.data_dir.parent_path() / "nested" / "deeper" / "data";
    cmd_gen_data(config);
    CHECK(std::filesystem::exists(config.data_dir / files::vocab));
  }
}

TEST_CASE("gen-data rejects configs without unseen classes") {
  ExperimentConfig config = tiny_experiment("nou");
  config.data.unseen_classes = 0;
  CHECK_THROWS_AS(cmd_gen_data(config), Error);
}

TEST_CASE("train command writes a log and a loadable checkpoint") {
  ExperimentConfig config = tiny_experiment("train");
  config.train.checkpoint_every = 2;
  cmd_gen_data(config);
  cmd_train(config);

  CHECK(std::filesystem::exists(config.out_dir / "checkpoint_epoch002.json"));
  CHECK(std::filesystem::exists(config.out_dir / "checkpoint_epoch004.json"));
  const Checkpoint checkpoint = load_checkpoint(config.out_dir / files::checkpoint);
  CHECK(checkpoint.vocab == make_vocabulary(config.data));

  // every log line carries the four loss terms and the total
  std::ifstream log(config.out_dir / files::train_log);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(log, line)) {
    const auto j = nlohmann::json::parse(line);
    for (const char* key : {"epoch", "step", "l_reg", "l_cls_s", "l_cls_u", "l_con_r", "l_total"})
      CHECK(j.contains(key));
    ++lines;
  }
  CHECK(lines > 0);
}

TEST_CASE("eval command writes reports and respects the mode") {
  ExperimentConfig config = tiny_experiment("eval");
  cmd_gen_data(config);
  cmd_train(config);

  const EvalReport zsd_report =
      cmd_eval(config, config.out_dir / files::checkpoint, DetectMode::zsd);
  for (const auto& entry : zsd_report.per_class)
    CHECK(make_vocabulary(config.data).is_unseen(entry.class_index));
  CHECK(std::filesystem::exists(config.out_dir / files::report(DetectMode::zsd)));
  CHECK(std::filesystem::exists(config.out_dir / files::per_class(DetectMode::zsd)));
  CHECK(std::filesystem::exists(config.out_dir / files::detections(DetectMode::zsd)));

  const EvalReport gzsd_report =
      cmd_eval(config, config.out_dir / files::checkpoint, DetectMode::gzsd);
  CHECK(gzsd_report.per_class.size() ==
        config.data.seen_classes + config.data.unseen_classes);

  SUBCASE("vocabulary mismatch is detected") {
    ExperimentConfig other = tiny_experiment("eval_mismatch");
    other.data.seen_classes = 4;
    cmd_gen_data(other);
    CHECK_THROWS_AS(cmd_eval(other, config.out_dir / files::checkpoint, DetectMode::zsd),
                    Error);
  }
}

TEST_CASE("checkpoint save, load and re-eval gives identical reports") {
  ExperimentConfig config = tiny_experiment("ckpt");
  cmd_gen_data(config);
  cmd_train(config);

  const EvalReport a = cmd_eval(config, config.out_dir / files::checkpoint, DetectMode::gzsd);
  // reload and save under a new name; evaluation must not change
  const Checkpoint checkpoint = load_checkpoint(config.out_dir / files::checkpoint);
  const auto copy_path = config.out_dir / "checkpoint_copy.json";
  save_checkpoint(copy_path, checkpoint);
  const EvalReport b = cmd_eval(config, copy_path, DetectMode::gzsd);

  CHECK(a.map == b.map);
  CHECK(a.map_seen == b.map_seen);
  CHECK(a.map_unseen == b.map_unseen);
  CHECK(a.harmonic_mean == b.harmonic_mean);
  for (const auto& [iou_thr, recall] : a.recall_at_k_by_iou)
    CHECK(recall == b.recall_at_k_by_iou.at(iou_thr));
}

TEST_CASE("full pipeline rerun reproduces the report exactly") {
  ExperimentConfig config = tiny_experiment("repro");
  cmd_gen_data(config);
  cmd_train(config);
  const EvalReport a = cmd_eval(config, config.out_dir / files::checkpoint, DetectMode::gzsd);

  std::filesystem::remove_all(config.out_dir);
  cmd_gen_data(config, true);
  cmd_train(config);
  const EvalReport b = cmd_eval(config, config.out_dir / files::checkpoint, DetectMode::gzsd);

  CHECK(a.map == b.map);
  CHECK(a.map_seen == b.map_seen);
  CHECK(a.map_unseen == b.map_unseen);
  CHECK(a.harmonic_mean == b.harmonic_mean);
  for (std::size_t i = 0; i < a.per_class.size(); ++i)
    CHECK(a.per_class[i].ap == b.per_class[i].ap);
}

TEST_CASE("sweep emits one csv row per value and mode") {
  ExperimentConfig config = tiny_experiment("sweep");
  config.train.epochs = 2;
  cmd_gen_data(config);
  const double values[] = {0.0, 0.4};
  cmd_sweep(config, "lambda", values);

  std::size_t zsd_rows = 0, gzsd_rows = 0;
  std::string line;
  std::ifstream zsd_csv(config.out_dir / "sweep_lambda_zsd.csv");
  std::getline(zsd_csv, line);
  CHECK(line == "lambda,map");
  while (std::getline(zsd_csv, line))
    if (!line.empty()) ++zsd_rows;
  std::ifstream gzsd_csv(config.out_dir / "sweep_lambda_gzsd.csv");
  std::getline(gzsd_csv, line);
  CHECK(line == "lambda,map_seen,map_unseen,harmonic_mean");
  while (std::getline(gzsd_csv, line))
    if (!line.empty()) ++gzsd_rows;
  CHECK(zsd_rows == 2);
  CHECK(gzsd_rows == 2);

  SUBCASE("empty value list is rejected") {
    CHECK_THROWS_AS(cmd_sweep(config, "lambda", {}), Error);
  }
  SUBCASE("unknown parameter is rejected") {
    const double one[] = {0.5};
    CHECK_THROWS_AS(cmd_sweep(config, "gamma", one), Error);
  }
}

TEST_CASE("inspect-sim dumps a similarity matrix with the right structure") {
  ExperimentConfig config = tiny_experiment("sim");
  cmd_gen_data(config);
  std::ostringstream out;
  cmd_inspect_sim(config, out);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j.at("unseen_classes").size() == config.data.unseen_classes);
  CHECK(j.at("rows").size() == 1 + config.data.seen_classes + config.data.unseen_classes);
  // background row is all zeros
  for (const auto& v : j.at("rows")[0].at("distribution")) CHECK(v.get<double>() == 0.0);
}

TEST_CASE("a non-finite loss aborts training without a final checkpoint") {
  ExperimentConfig config = tiny_experiment("poison");
  cmd_gen_data(config);

  // poison one proposal so the forward pass overflows
  const auto train_path = config.data_dir / files::dataset(Split::train);
  SynthDataset data = load_dataset_jsonl(train_path);
  data.images[0].proposals[0].feature[0] = 1e200;
  save_dataset_jsonl(train_path, data);

  CHECK_THROWS_AS(cmd_train(config), Error);
  CHECK(!std::filesystem::exists(config.out_dir / files::checkpoint));
  CHECK(std::filesystem::exists(config.out_dir / files::train_log));
}

TEST_CASE("untrained models evaluate worse than trained ones") {
  ExperimentConfig config = tiny_experiment("untrained");
  config.train.epochs = 8;
  cmd_gen_data(config);
  cmd_train(config);
  const EvalReport trained =
      cmd_eval(config, config.out_dir / files::checkpoint, DetectMode::seen);

  // zero-epoch run: initialization only
  ExperimentConfig fresh = config;
  fresh.train.epochs = 0;
  fresh.out_dir = config.out_dir.parent_path() / "out_untrained";
  cmd_train(fresh);
  const EvalReport untrained =
      cmd_eval(fresh, fresh.out_dir / files::checkpoint, DetectMode::seen);

  CHECK(untrained.map < trained.map);
}
