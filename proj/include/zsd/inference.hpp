#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "zsd/model.hpp"
#include "zsd/synthdata.hpp"

namespace zsd {

enum class DetectMode { seen, zsd, gzsd };

std::string detect_mode_name(DetectMode mode);
DetectMode detect_mode_from_name(const std::string& name);

struct Detection {
  Box box;
  int class_index = 0;
  double score = 0.0;
};

/// Final per-class scores: fused[c] = (sum_j unseen_probs[j] * S[c][j]) * class_scores[c].
/// Row 0 of the similarity matrix is zero, so the background score is
/// structurally zero.
std::vector<double> fuse_scores(std::span<const double> class_scores,
                                std::span<const double> unseen_probs,
                                const SimilarityMatrix& sim);

struct DetectOptions {
  double score_threshold = 0.05;
  double nms_threshold = 0.5;
};

/// Test-time pipeline for one image: two-path scoring, score fusion, label
/// space restriction by mode, argmax class per proposal, score filtering,
/// offset decoding, class-wise NMS. Background is never emitted. Results are
/// sorted by descending score.
std::vector<Detection> detect(const ModelParams& params, const ModelConfig& config,
                              std::span<const Proposal> proposals,
                              const SemanticTable& table, const ClassVocabulary& vocab,
                              DetectMode mode, const DetectOptions& options = {});

/// Mapping-transfer baseline: project each region feature with a seen-trained
/// projector and pick the unseen class with the highest cosine compatibility.
/// Ties resolve to the lower class index. Returns vocabulary indices.
std::vector<int> conse_baseline_predict(const Mlp& projector, const Matrix& features,
                                        const SemanticTable& table,
                                        const ClassVocabulary& vocab);

/// Interchange format consumed by the evaluator:
/// {"image_id":., "class_name":"...", "score":., "box":[x,y,w,h]}
struct DetectionRecord {
  int image_id = 0;
  std::string class_name;
  double score = 0.0;
  Box box;
};

void save_detections_jsonl(const std::filesystem::path& path,
                           std::span<const DetectionRecord> records);
std::vector<DetectionRecord> load_detections_jsonl(const std::filesystem::path& path);

}  // namespace zsd
