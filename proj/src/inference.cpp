#include "zsd/inference.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "zsd/error.hpp"

namespace zsd {

std::string detect_mode_name(DetectMode mode) {
  switch (mode) {
    case DetectMode::seen: return "seen";
    case DetectMode::zsd: return "zsd";
    case DetectMode::gzsd: return "gzsd";
  }
  return "gzsd";
}

DetectMode detect_mode_from_name(const std::string& name) {
  if (name == "seen") return DetectMode::seen;
  if (name == "zsd") return DetectMode::zsd;
  if (name == "gzsd") return DetectMode::gzsd;
  fail(ErrorCode::invalid_argument, "unknown mode '" + name + "'");
}

std::vector<double> fuse_scores(std::span<const double> class_scores,
                                std::span<const double> unseen_probs,
                                const SimilarityMatrix& sim) {
  require(sim.values.rows() == class_scores.size() &&
              sim.values.cols() == unseen_probs.size(),
          ErrorCode::shape_mismatch, "fuse_scores: similarity matrix shape mismatch");
  std::vector<double> fused(class_scores.size());
  for (std::size_t c = 0; c < fused.size(); ++c)
    fused[c] = dot(sim.values.row(c), unseen_probs) * class_scores[c];
  return fused;
}

namespace {

bool class_allowed(const ClassVocabulary& vocab, DetectMode mode, std::size_t c) {
  switch (mode) {
    case DetectMode::seen: return vocab.is_seen(c);
    case DetectMode::zsd: return vocab.is_unseen(c);
    case DetectMode::gzsd: return !vocab.is_background(c);
  }
  return false;
}

}  // namespace

std::vector<Detection> detect(const ModelParams& params, const ModelConfig& config,
                              std::span<const Proposal> proposals,
                              const SemanticTable& table, const ClassVocabulary& vocab,
                              DetectMode mode, const DetectOptions& options) {
  if (proposals.empty()) return {};

  Matrix features(proposals.size(), config.region_dim);
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    require(proposals[i].feature.size() == config.region_dim, ErrorCode::shape_mismatch,
            "detect: proposal feature width mismatch");
    std::copy(proposals[i].feature.begin(), proposals[i].feature.end(),
              features.row(i).begin());
  }

  const Matrix class_matrix = assemble_class_matrix(table, params.background_embedding);
  const SimilarityMatrix sim =
      build_similarity_matrix(table, vocab, config.similarity_temperature);
  const InferForwardOutput scores =
      forward_infer(params, config, features, class_matrix, vocab);

  struct Candidate {
    Detection detection;
    std::size_t proposal_index;
  };
  std::vector<Candidate> candidates;

  for (std::size_t i = 0; i < proposals.size(); ++i) {
    const std::vector<double> fused =
        fuse_scores(scores.class_scores.row(i), scores.unseen_probs.row(i), sim);

    int best_class = -1;
    double best_score = 0.0;
    for (std::size_t c = 1; c < vocab.size(); ++c) {
      if (!class_allowed(vocab, mode, c)) continue;
      if (best_class < 0 || fused[c] > best_score) {
        best_class = static_cast<int>(c);
        best_score = fused[c];
      }
    }
    if (best_class < 0 || best_score < options.score_threshold) continue;

    const Offsets offsets{scores.offsets(i, 0), scores.offsets(i, 1),
                          scores.offsets(i, 2), scores.offsets(i, 3)};
    candidates.push_back(
        {{decode_offsets(proposals[i].box, offsets), best_class, best_score}, i});
  }

  // class-wise NMS
  std::vector<Detection> kept;
  for (std::size_t c = 1; c < vocab.size(); ++c) {
    std::vector<ScoredBox> class_boxes;
    std::vector<std::size_t> candidate_index;
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      if (candidates[k].detection.class_index != static_cast<int>(c)) continue;
      class_boxes.push_back({candidates[k].detection.box, candidates[k].detection.score});
      candidate_index.push_back(k);
    }
    for (std::size_t keep : nms(class_boxes, options.nms_threshold))
      kept.push_back(candidates[candidate_index[keep]].detection);
  }

  std::stable_sort(kept.begin(), kept.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
  return kept;
}

std::vector<int> conse_baseline_predict(const Mlp& projector, const Matrix& features,
                                        const SemanticTable& table,
                                        const ClassVocabulary& vocab) {
  require(projector.out_dim() == table.dim(), ErrorCode::dimension_mismatch,
          "conse baseline projector must land in semantic space");
  const Matrix projected = mlp_forward(projector, features, nullptr);

  std::vector<int> predictions(features.rows());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    int best = -1;
    double best_score = 0.0;
    for (std::size_t u = 0; u < vocab.unseen_count(); ++u) {
      const std::size_t c = vocab.unseen_class_index(u);
      const double norm = l2_norm(projected.row(i));
      // a zero projection matches nothing; score it below any real cosine
      const double score =
          norm > 0.0 ? cosine_similarity(projected.row(i), table.class_embedding(vocab, c))
                     : -2.0;
      if (best < 0 || score > best_score) {
        best = static_cast<int>(c);
        best_score = score;
      }
    }
    predictions[i] = best;
  }
  return predictions;
}

void save_detections_jsonl(const std::filesystem::path& path,
                           std::span<const DetectionRecord> records) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write detections " + path.string());
  for (const auto& r : records) {
    nlohmann::json j;
    j["image_id"] = r.image_id;
    j["class_name"] = r.class_name;
    j["score"] = r.score;
    j["box"] = nlohmann::json::array({r.box.x, r.box.y, r.box.w, r.box.h});
    out << j.dump() << '\n';
  }
  require(out.good(), ErrorCode::io_error, "write failed for " + path.string());
}

std::vector<DetectionRecord> load_detections_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open detections " + path.string());
  std::vector<DetectionRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::io_error, "malformed detections line: " + std::string(e.what()));
    }
    DetectionRecord r;
    r.image_id = j.at("image_id").get<int>();
    r.class_name = j.at("class_name").get<std::string>();
    r.score = j.at("score").get<double>();
    const auto& b = j.at("box");
    require(b.is_array() && b.size() == 4, ErrorCode::io_error, "box must be [x,y,w,h]");
    r.box = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace zsd
