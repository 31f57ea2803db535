#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>

#include "zsd/eval.hpp"
#include "zsd/experiment.hpp"

namespace zsd {

/// File names written under data_dir / out_dir.
namespace files {
inline constexpr const char* vocab = "vocab.json";
inline constexpr const char* embeddings = "embeddings.csv";
inline constexpr const char* checkpoint = "checkpoint.json";
inline constexpr const char* train_log = "train_log.jsonl";
std::string dataset(Split split);
std::string detections(DetectMode mode);
std::string report(DetectMode mode);
std::string per_class(DetectMode mode);
}  // namespace files

/// Writes vocab.json, embeddings.csv and the four dataset splits under
/// data_dir. Refuses to overwrite existing outputs unless force is set.
void cmd_gen_data(const ExperimentConfig& config, bool force = false);

/// Trains on the train split; streams per-step loss breakdowns to
/// train_log.jsonl, writes periodic checkpoints when configured, and always
/// writes the final checkpoint. The last periodic checkpoint survives a
/// non-finite-loss abort.
void cmd_train(const ExperimentConfig& config);

/// Runs detection over the split matching `mode`, writes the detections
/// interchange file, the report JSON and the per-class CSV, and returns the
/// report. Fails when the checkpoint vocabulary does not match the dataset.
EvalReport cmd_eval(const ExperimentConfig& config,
                    const std::filesystem::path& checkpoint_path, DetectMode mode);

/// Trains one model per value of "lambda" or "beta" on the shared dataset and
/// writes plot-ready CSVs (one per test configuration) of mAP versus value.
void cmd_sweep(const ExperimentConfig& config, const std::string& parameter,
               std::span<const double> values);

/// Dumps the similarity matrix built from the generated embeddings as JSON.
void cmd_inspect_sim(const ExperimentConfig& config, std::ostream& out);

}  // namespace zsd
