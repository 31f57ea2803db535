#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "zsd/inference.hpp"
#include "zsd/synthdata.hpp"
#include "zsd/vocab.hpp"

namespace zsd {

/// PASCAL-style greedy matching for one image. Detections must be sorted by
/// descending score. Each detection matches the highest-IoU not-yet-matched
/// ground-truth object of the same class with IoU >= threshold (ties keep the
/// lower ground-truth index); everything else is a false positive.
struct MatchResult {
  std::vector<bool> is_true_positive;  // aligned with the input detections
  std::size_t matched_ground_truth = 0;
};

MatchResult match_detections(std::span<const Detection> detections,
                             std::span<const GtObject> ground_truth,
                             double iou_threshold);

/// Fraction of all ground-truth objects matched when each image keeps only
/// its top-k detections by score. Returns 0 when there is no ground truth.
double recall_at_k(std::span<const std::vector<Detection>> detections_per_image,
                   std::span<const std::vector<GtObject>> ground_truth_per_image,
                   std::size_t k, double iou_threshold);

/// 11-point interpolated average precision: mean over recall levels
/// 0, 0.1, ..., 1 of the maximum precision among score-ranked prefixes whose
/// recall reaches the level; a level never reached contributes 0.
struct ApResult {
  double value = 0.0;
  bool no_ground_truth = false;
};

ApResult average_precision_11pt(std::span<const double> scores,
                                const std::vector<bool>& is_true_positive,
                                std::size_t ground_truth_count);

struct ClassApEntry {
  std::size_t class_index = 0;
  std::string class_name;
  double ap = 0.0;
  std::size_t ground_truth_count = 0;
  std::size_t detection_count = 0;
  bool no_ground_truth = false;
};

struct EvalReport {
  DetectMode mode = DetectMode::gzsd;
  double ap_iou_threshold = 0.5;
  std::size_t recall_k = 100;
  std::map<double, double> recall_at_k_by_iou;
  std::vector<ClassApEntry> per_class;
  double map = 0.0;         // over the mode's class set
  double map_seen = 0.0;    // gzsd only
  double map_unseen = 0.0;  // gzsd only
  double harmonic_mean = 0.0;
  std::size_t total_ground_truth = 0;
  std::size_t total_detections = 0;
};

/// 2su/(s+u), 0 when s + u is not positive.
double harmonic_mean(double seen, double unseen);

/// Detections and ground truth are parallel per-image lists. Ground-truth
/// objects outside the mode's class set are ignored; detections outside it
/// raise unknown_class. Classes without ground truth get a flagged zero AP
/// and are left out of the subset means.
EvalReport build_report(std::span<const std::vector<Detection>> detections_per_image,
                        std::span<const std::vector<GtObject>> ground_truth_per_image,
                        const ClassVocabulary& vocab,
                        std::span<const double> iou_thresholds, double ap_iou_threshold,
                        DetectMode mode, std::size_t recall_k = 100);

nlohmann::json report_to_json(const EvalReport& report);
void save_report_json(const std::filesystem::path& path, const EvalReport& report);
void save_per_class_csv(const std::filesystem::path& path, const EvalReport& report);

/// Groups detection records by image id (images listed in `image_ids` order)
/// and resolves class names through the vocabulary.
std::vector<std::vector<Detection>> detections_from_records(
    std::span<const DetectionRecord> records, std::span<const int> image_ids,
    const ClassVocabulary& vocab);

}  // namespace zsd
