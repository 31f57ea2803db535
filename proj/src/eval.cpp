#include "zsd/eval.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "zsd/error.hpp"
#include "zsd/semantics.hpp"

namespace zsd {

MatchResult match_detections(std::span<const Detection> detections,
                             std::span<const GtObject> ground_truth,
                             double iou_threshold) {
  for (std::size_t i = 1; i < detections.size(); ++i)
    require(detections[i - 1].score >= detections[i].score, ErrorCode::invalid_argument,
            "match_detections: detections must be sorted by descending score");

  MatchResult result;
  result.is_true_positive.assign(detections.size(), false);
  std::vector<bool> taken(ground_truth.size(), false);

  for (std::size_t d = 0; d < detections.size(); ++d) {
    double best_iou = 0.0;
    std::size_t best_gt = ground_truth.size();
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      if (taken[g] || ground_truth[g].label != detections[d].class_index) continue;
      const double overlap = iou(detections[d].box, ground_truth[g].box);
      if (overlap > best_iou) {
        best_iou = overlap;
        best_gt = g;
      }
    }
    if (best_gt < ground_truth.size() && best_iou >= iou_threshold) {
      taken[best_gt] = true;
      result.is_true_positive[d] = true;
      ++result.matched_ground_truth;
    }
  }
  return result;
}

namespace {

std::vector<Detection> top_k_by_score(const std::vector<Detection>& detections,
                                      std::size_t k) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });
  if (order.size() > k) order.resize(k);
  std::vector<Detection> out;
  out.reserve(order.size());
  for (std::size_t idx : order) out.push_back(detections[idx]);
  return out;
}

}  // namespace

double recall_at_k(std::span<const std::vector<Detection>> detections_per_image,
                   std::span<const std::vector<GtObject>> ground_truth_per_image,
                   std::size_t k, double iou_threshold) {
  require(detections_per_image.size() == ground_truth_per_image.size(),
          ErrorCode::shape_mismatch, "recall_at_k: per-image lists must align");
  std::size_t matched = 0;
  std::size_t total = 0;
  for (std::size_t img = 0; img < detections_per_image.size(); ++img) {
    total += ground_truth_per_image[img].size();
    const auto top = top_k_by_score(detections_per_image[img], k);
    matched +=
        match_detections(top, ground_truth_per_image[img], iou_threshold).matched_ground_truth;
  }
  if (total == 0) return 0.0;
  return static_cast<double>(matched) / static_cast<double>(total);
}

ApResult average_precision_11pt(std::span<const double> scores,
                                const std::vector<bool>& is_true_positive,
                                std::size_t ground_truth_count) {
  require(scores.size() == is_true_positive.size(), ErrorCode::shape_mismatch,
          "average_precision_11pt: scores/flags must align");
  if (ground_truth_count == 0) return {0.0, true};

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const std::size_t n = order.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (is_true_positive[order[k]]) ++tp;
    recall[k] = static_cast<double>(tp) / static_cast<double>(ground_truth_count);
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
  }

  // max precision over the suffix starting at each prefix index; recall is
  // non-decreasing, so every level maps to a suffix
  std::vector<double> suffix_max(n);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    running = std::max(running, precision[k]);
    suffix_max[k] = running;
  }

  double ap = 0.0;
  for (int level = 0; level <= 10; ++level) {
    const double target = static_cast<double>(level) / 10.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), target);
    if (it != recall.end()) ap += suffix_max[static_cast<std::size_t>(it - recall.begin())];
  }
  return {ap / 11.0, false};
}

double harmonic_mean(double seen, double unseen) {
  const double denom = seen + unseen;
  return denom > 0.0 ? 2.0 * seen * unseen / denom : 0.0;
}

namespace {

bool class_in_mode(const ClassVocabulary& vocab, DetectMode mode, std::size_t c) {
  switch (mode) {
    case DetectMode::seen: return vocab.is_seen(c);
    case DetectMode::zsd: return vocab.is_unseen(c);
    case DetectMode::gzsd: return !vocab.is_background(c);
  }
  return false;
}

struct RankedDetection {
  double score = 0.0;
  bool is_true_positive = false;
  std::size_t image = 0;
  std::size_t rank = 0;  // position within the image's sorted detections
};

}  // namespace

EvalReport build_report(std::span<const std::vector<Detection>> detections_per_image,
                        std::span<const std::vector<GtObject>> ground_truth_per_image,
                        const ClassVocabulary& vocab,
                        std::span<const double> iou_thresholds, double ap_iou_threshold,
                        DetectMode mode, std::size_t recall_k) {
  require(detections_per_image.size() == ground_truth_per_image.size(),
          ErrorCode::shape_mismatch, "build_report: per-image lists must align");

  EvalReport report;
  report.mode = mode;
  report.ap_iou_threshold = ap_iou_threshold;
  report.recall_k = recall_k;

  const std::size_t n_images = detections_per_image.size();

  // restrict ground truth to the mode's class set; validate detections
  std::vector<std::vector<GtObject>> mode_gts(n_images);
  std::vector<std::vector<Detection>> sorted_dets(n_images);
  for (std::size_t img = 0; img < n_images; ++img) {
    for (const auto& gt : ground_truth_per_image[img]) {
      require(gt.label > 0 && static_cast<std::size_t>(gt.label) < vocab.size(),
              ErrorCode::unknown_class, "build_report: ground-truth label out of range");
      if (class_in_mode(vocab, mode, static_cast<std::size_t>(gt.label)))
        mode_gts[img].push_back(gt);
    }
    report.total_ground_truth += mode_gts[img].size();

    sorted_dets[img] = detections_per_image[img];
    std::stable_sort(sorted_dets[img].begin(), sorted_dets[img].end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    for (const auto& det : sorted_dets[img]) {
      require(det.class_index > 0 &&
                  static_cast<std::size_t>(det.class_index) < vocab.size() &&
                  class_in_mode(vocab, mode, static_cast<std::size_t>(det.class_index)),
              ErrorCode::unknown_class,
              "build_report: detection class outside the evaluated set");
    }
    report.total_detections += sorted_dets[img].size();
  }

  for (double threshold : iou_thresholds)
    report.recall_at_k_by_iou[threshold] =
        recall_at_k(sorted_dets, mode_gts, recall_k, threshold);

  // per-class AP at the primary threshold
  std::vector<std::vector<RankedDetection>> per_class(vocab.size());
  for (std::size_t img = 0; img < n_images; ++img) {
    const MatchResult match =
        match_detections(sorted_dets[img], mode_gts[img], ap_iou_threshold);
    for (std::size_t d = 0; d < sorted_dets[img].size(); ++d) {
      const auto c = static_cast<std::size_t>(sorted_dets[img][d].class_index);
      per_class[c].push_back(
          {sorted_dets[img][d].score, match.is_true_positive[d], img, d});
    }
  }

  double sum_all = 0.0, sum_seen = 0.0, sum_unseen = 0.0;
  std::size_t n_all = 0, n_seen = 0, n_unseen = 0;
  for (std::size_t c = 1; c < vocab.size(); ++c) {
    if (!class_in_mode(vocab, mode, c)) continue;

    std::size_t gt_count = 0;
    for (const auto& gts : mode_gts)
      for (const auto& gt : gts)
        if (static_cast<std::size_t>(gt.label) == c) ++gt_count;

    auto& ranked = per_class[c];
    // deterministic global order regardless of image processing order
    std::sort(ranked.begin(), ranked.end(),
              [](const RankedDetection& a, const RankedDetection& b) {
                if (a.score != b.score) return a.score > b.score;
                if (a.image != b.image) return a.image < b.image;
                return a.rank < b.rank;
              });
    std::vector<double> scores(ranked.size());
    std::vector<bool> flags(ranked.size());
    for (std::size_t k = 0; k < ranked.size(); ++k) {
      scores[k] = ranked[k].score;
      flags[k] = ranked[k].is_true_positive;
    }
    const ApResult ap = average_precision_11pt(scores, flags, gt_count);

    ClassApEntry entry;
    entry.class_index = c;
    entry.class_name = vocab.name(c);
    entry.ap = ap.value;
    entry.ground_truth_count = gt_count;
    entry.detection_count = ranked.size();
    entry.no_ground_truth = ap.no_ground_truth;
    report.per_class.push_back(std::move(entry));

    if (ap.no_ground_truth) continue;  // flagged classes stay out of the means
    sum_all += ap.value;
    ++n_all;
    if (vocab.is_seen(c)) {
      sum_seen += ap.value;
      ++n_seen;
    } else {
      sum_unseen += ap.value;
      ++n_unseen;
    }
  }

  report.map = n_all ? sum_all / static_cast<double>(n_all) : 0.0;
  report.map_seen = n_seen ? sum_seen / static_cast<double>(n_seen) : 0.0;
  report.map_unseen = n_unseen ? sum_unseen / static_cast<double>(n_unseen) : 0.0;
  report.harmonic_mean = harmonic_mean(report.map_seen, report.map_unseen);
  return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["mode"] = detect_mode_name(report.mode);
  j["ap_iou_threshold"] = report.ap_iou_threshold;
  j["recall_k"] = report.recall_k;
  auto recall = nlohmann::json::array();
  for (const auto& [threshold, value] : report.recall_at_k_by_iou)
    recall.push_back({{"iou_threshold", threshold}, {"recall", value}});
  j["recall_at_k"] = std::move(recall);
  auto per_class = nlohmann::json::array();
  for (const auto& entry : report.per_class)
    per_class.push_back({{"class", entry.class_name},
                         {"ap", entry.ap},
                         {"ground_truth", entry.ground_truth_count},
                         {"detections", entry.detection_count},
                         {"no_ground_truth", entry.no_ground_truth}});
  j["per_class"] = std::move(per_class);
  j["map"] = report.map;
  if (report.mode == DetectMode::gzsd) {
    j["map_seen"] = report.map_seen;
    j["map_unseen"] = report.map_unseen;
    j["harmonic_mean"] = report.harmonic_mean;
  }
  j["total_ground_truth"] = report.total_ground_truth;
  j["total_detections"] = report.total_detections;
  return j;
}

void save_report_json(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write report " + path.string());
  out << report_to_json(report).dump(2) << '\n';
  require(out.good(), ErrorCode::io_error, "write failed for " + path.string());
}

void save_per_class_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write csv " + path.string());
  out << "class,ap,ground_truth,detections,no_ground_truth\n";
  for (const auto& entry : report.per_class)
    out << entry.class_name << ',' << format_double(entry.ap) << ','
        << entry.ground_truth_count << ',' << entry.detection_count << ','
        << (entry.no_ground_truth ? 1 : 0) << '\n';
  require(out.good(), ErrorCode::io_error, "write failed for " + path.string());
}

std::vector<std::vector<Detection>> detections_from_records(
    std::span<const DetectionRecord> records, std::span<const int> image_ids,
    const ClassVocabulary& vocab) {
  std::unordered_map<int, std::size_t> image_slot;
  for (std::size_t i = 0; i < image_ids.size(); ++i) image_slot.emplace(image_ids[i], i);

  std::vector<std::vector<Detection>> out(image_ids.size());
  for (const auto& record : records) {
    const auto slot = image_slot.find(record.image_id);
    require(slot != image_slot.end(), ErrorCode::invalid_argument,
            "detection references unknown image id " + std::to_string(record.image_id));
    const auto class_index = vocab.index_of(record.class_name);
    require(class_index.has_value(), ErrorCode::unknown_class,
            "detection names unknown class '" + record.class_name + "'");
    out[slot->second].push_back(
        {record.box, static_cast<int>(*class_index), record.score});
  }
  return out;
}

}  // namespace zsd
