#include "zsd/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "zsd/error.hpp"
#include "zsd/rng.hpp"

namespace zsd {

namespace {

// World geometry: a 128x128 plane, object sizes well inside it.
constexpr double kPlane = 128.0;
constexpr double kMinExtent = 10.0;
constexpr double kMaxExtent = 40.0;

std::string padded_index(std::size_t i) {
  std::string s = std::to_string(i);
  while (s.size() < 2) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

ClassVocabulary make_vocabulary(const SynthConfig& config) {
  require(config.seen_classes > 0, ErrorCode::invalid_argument,
          "at least one seen class required");
  require(config.unseen_classes > 0, ErrorCode::invalid_argument,
          "zero-shot detection requires unseen classes");
  std::vector<std::string> seen, unseen;
  for (std::size_t i = 0; i < config.seen_classes; ++i)
    seen.push_back("seen_" + padded_index(i));
  for (std::size_t i = 0; i < config.unseen_classes; ++i)
    unseen.push_back("unseen_" + padded_index(i));
  return ClassVocabulary::from_parts("background", std::move(seen), std::move(unseen));
}

GeneratedEmbeddings generate_embeddings(const SynthConfig& config, std::uint64_t seed) {
  require(config.semantic_dim >= 2, ErrorCode::invalid_argument,
          "semantic_dim must be at least 2");
  const ClassVocabulary vocab = make_vocabulary(config);

  Rng rng(mix_seed(seed, 0xe3));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Matrix rows(vocab.foreground_count(), config.semantic_dim);
  for (std::size_t s = 0; s < config.seen_classes; ++s)
    for (std::size_t d = 0; d < config.semantic_dim; ++d) rows(s, d) = normal(rng);

  require(config.min_mix_parents >= 1 &&
              config.max_mix_parents >= config.min_mix_parents,
          ErrorCode::invalid_argument, "invalid mix-parents range");
  const std::size_t lo = std::min(config.min_mix_parents, config.seen_classes);
  const std::size_t hi = std::min(config.max_mix_parents, config.seen_classes);

  GeneratedEmbeddings out;
  out.mixes.resize(config.unseen_classes);
  for (std::size_t u = 0; u < config.unseen_classes; ++u) {
    const std::size_t n_parents = lo + rng() % (hi - lo + 1);
    std::vector<std::size_t> pool(config.seen_classes);
    std::iota(pool.begin(), pool.end(), 0);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(n_parents);

    // the weight floor keeps any single parent from dominating outright
    std::vector<double> weights(n_parents);
    double total = 0.0;
    for (double& w : weights) {
      w = 0.4 + uniform(rng);
      total += w;
    }
    for (double& w : weights) w /= total;

    const std::size_t row = config.seen_classes + u;
    for (std::size_t p = 0; p < n_parents; ++p)
      for (std::size_t d = 0; d < config.semantic_dim; ++d)
        rows(row, d) += weights[p] * rows(pool[p], d);
    for (std::size_t d = 0; d < config.semantic_dim; ++d)
      rows(row, d) += config.embedding_mix_noise * normal(rng);

    out.mixes[u] = {std::move(pool), std::move(weights)};
  }

  out.table = make_semantic_table(std::move(rows), vocab);
  return out;
}

std::size_t SynthDataset::proposal_count() const {
  std::size_t n = 0;
  for (const auto& image : images) n += image.proposals.size();
  return n;
}

namespace {

/// Fixed semantic-to-feature map shared across splits; this is what makes the
/// class semantics predictive of region features.
Matrix make_prototype_map(const SynthConfig& config) {
  Rng rng(mix_seed(config.seed, 0x9f));
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix map(config.region_dim, config.semantic_dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.semantic_dim));
  for (std::size_t i = 0; i < map.size(); ++i) map[i] = normal(rng) * scale;
  return map;
}

std::vector<double> class_prototype(const Matrix& prototype_map,
                                    const SemanticTable& table,
                                    const ClassVocabulary& vocab, int label) {
  std::vector<double> proto(prototype_map.rows(), 0.0);
  if (label <= 0) return proto;  // background has no prototype
  auto embedding = table.class_embedding(vocab, static_cast<std::size_t>(label));
  for (std::size_t r = 0; r < prototype_map.rows(); ++r)
    proto[r] = dot(prototype_map.row(r), embedding);
  return proto;
}

Box sample_gt_box(Rng& rng) {
  std::uniform_real_distribution<double> extent(kMinExtent, kMaxExtent);
  const double w = extent(rng);
  const double h = extent(rng);
  std::uniform_real_distribution<double> cx(w / 2.0, kPlane - w / 2.0);
  std::uniform_real_distribution<double> cy(h / 2.0, kPlane - h / 2.0);
  return {cx(rng), cy(rng), w, h};
}

Box jitter_box(const Box& box, double jitter, Rng& rng) {
  if (jitter <= 0.0) return box;
  std::normal_distribution<double> normal(0.0, 1.0);
  return {box.x + jitter * box.w * normal(rng), box.y + jitter * box.h * normal(rng),
          box.w * std::exp(jitter * normal(rng)),
          box.h * std::exp(jitter * normal(rng))};
}

int sample_object_label(const ClassVocabulary& vocab, Split split, Rng& rng) {
  switch (split) {
    case Split::train:
    case Split::test_seen:
      return static_cast<int>(1 + rng() % vocab.seen_count());
    case Split::test_zsd:
      return static_cast<int>(vocab.first_unseen_index() + rng() % vocab.unseen_count());
    case Split::test_gzsd:
      return static_cast<int>(1 + rng() % vocab.foreground_count());
  }
  fail(ErrorCode::invalid_argument, "invalid split");
}

/// Max-IoU label assignment; ties on IoU keep the lower object index.
std::pair<int, std::size_t> assign_label(const Box& proposal,
                                         const std::vector<GtObject>& gts,
                                         double threshold) {
  double best = 0.0;
  std::size_t best_index = 0;
  for (std::size_t g = 0; g < gts.size(); ++g) {
    const double overlap = iou(proposal, gts[g].box);
    if (overlap > best) {
      best = overlap;
      best_index = g;
    }
  }
  if (best >= threshold && !gts.empty()) return {gts[best_index].label, best_index};
  return {0, gts.size()};
}

}  // namespace

SynthDataset generate_scene(const SynthConfig& config, const SemanticTable& table,
                            const ClassVocabulary& vocab, Split split,
                            std::uint64_t seed) {
  require(config.min_objects >= 1 && config.max_objects >= config.min_objects,
          ErrorCode::invalid_argument, "invalid objects-per-image range");
  require(config.proposals_per_image > 0, ErrorCode::invalid_argument,
          "proposals_per_image must be positive");
  require(config.feature_noise >= 0.0, ErrorCode::invalid_argument,
          "feature_noise must be non-negative");
  require(table.dim() == config.semantic_dim, ErrorCode::dimension_mismatch,
          "semantic table does not match config");

  const Matrix prototype_map = make_prototype_map(config);
  const std::size_t n_images =
      split == Split::train ? config.train_images : config.test_images;
  const std::uint64_t split_seed = mix_seed(seed, 0x100 + static_cast<int>(split));

  SynthDataset dataset;
  dataset.region_dim = config.region_dim;
  dataset.images.reserve(n_images);

  const std::size_t n_background = std::min<std::size_t>(
      config.proposals_per_image - 1,
      static_cast<std::size_t>(std::lround(config.background_proposal_fraction *
                                           static_cast<double>(config.proposals_per_image))));
  const std::size_t n_jittered = config.proposals_per_image - n_background;

  for (std::size_t img = 0; img < n_images; ++img) {
    Rng rng(mix_seed(split_seed, img));
    std::normal_distribution<double> normal(0.0, 1.0);

    SynthImage image;
    image.image_id = static_cast<int>(img);

    const std::size_t n_objects =
        config.min_objects + rng() % (config.max_objects - config.min_objects + 1);
    for (std::size_t o = 0; o < n_objects; ++o)
      image.ground_truth.push_back({sample_gt_box(rng), sample_object_label(vocab, split, rng)});

    std::vector<Box> proposal_boxes;
    proposal_boxes.reserve(config.proposals_per_image);
    for (std::size_t p = 0; p < n_jittered; ++p)
      proposal_boxes.push_back(
          jitter_box(image.ground_truth[p % n_objects].box, config.proposal_jitter, rng));
    for (std::size_t p = 0; p < n_background; ++p) proposal_boxes.push_back(sample_gt_box(rng));

    for (const Box& box : proposal_boxes) {
      Proposal proposal;
      proposal.box = box;
      const auto [label, gt_index] =
          assign_label(box, image.ground_truth, config.iou_label_threshold);
      proposal.label = label;

      auto proto = class_prototype(prototype_map, table, vocab, label);
      double quality = 0.0;
      if (label > 0) {
        quality = iou(box, image.ground_truth[gt_index].box);
        proposal.target = encode_offsets(box, image.ground_truth[gt_index].box);
      }
      proposal.feature.resize(config.region_dim);
      for (std::size_t d = 0; d < config.region_dim; ++d)
        proposal.feature[d] = quality * proto[d] + config.feature_noise * normal(rng);

      image.proposals.push_back(std::move(proposal));
    }
    dataset.images.push_back(std::move(image));
  }
  return dataset;
}

namespace {

nlohmann::json box_to_json(const Box& b) {
  return nlohmann::json::array({b.x, b.y, b.w, b.h});
}

Box box_from_json(const nlohmann::json& j) {
  require(j.is_array() && j.size() == 4, ErrorCode::io_error, "box must be [x,y,w,h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

}  // namespace

void save_dataset_jsonl(const std::filesystem::path& path, const SynthDataset& dataset) {
  std::ofstream out(path);
  require(out.good(), ErrorCode::io_error, "cannot write dataset " + path.string());
  for (const auto& image : dataset.images) {
    nlohmann::json j;
    j["image_id"] = image.image_id;
    auto gts = nlohmann::json::array();
    for (const auto& gt : image.ground_truth)
      gts.push_back({{"box", box_to_json(gt.box)}, {"label", gt.label}});
    j["gts"] = std::move(gts);
    auto proposals = nlohmann::json::array();
    for (const auto& p : image.proposals) {
      nlohmann::json pj;
      pj["box"] = box_to_json(p.box);
      pj["feature"] = p.feature;
      pj["label"] = p.label;
      pj["target"] = nlohmann::json::array({p.target.tx, p.target.ty, p.target.tw, p.target.th});
      proposals.push_back(std::move(pj));
    }
    j["proposals"] = std::move(proposals);
    out << j.dump() << '\n';
  }
  require(out.good(), ErrorCode::io_error, "write failed for " + path.string());
}

SynthDataset load_dataset_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io_error, "cannot open dataset " + path.string());

  SynthDataset dataset;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::io_error, "malformed dataset line: " + std::string(e.what()));
    }
    SynthImage image;
    image.image_id = j.at("image_id").get<int>();
    for (const auto& gt : j.at("gts"))
      image.ground_truth.push_back(
          {box_from_json(gt.at("box")), gt.at("label").get<int>()});
    for (const auto& pj : j.at("proposals")) {
      Proposal p;
      p.box = box_from_json(pj.at("box"));
      p.feature = pj.at("feature").get<std::vector<double>>();
      p.label = pj.at("label").get<int>();
      const auto& t = pj.at("target");
      require(t.is_array() && t.size() == 4, ErrorCode::io_error,
              "proposal target must have four entries");
      p.target = {t[0].get<double>(), t[1].get<double>(), t[2].get<double>(),
                  t[3].get<double>()};
      if (dataset.region_dim == 0) dataset.region_dim = p.feature.size();
      require(p.feature.size() == dataset.region_dim, ErrorCode::dimension_mismatch,
              "inconsistent feature width in dataset");
      image.proposals.push_back(std::move(p));
    }
    dataset.images.push_back(std::move(image));
  }
  return dataset;
}

BatchIterator::BatchIterator(const SynthDataset& dataset, std::size_t batch_size,
                             std::uint64_t seed)
    : dataset_(&dataset), batch_size_(batch_size), seed_(seed) {
  require(batch_size_ > 0, ErrorCode::invalid_argument, "batch size must be positive");
  for (std::size_t i = 0; i < dataset.images.size(); ++i)
    for (std::size_t p = 0; p < dataset.images[i].proposals.size(); ++p)
      order_.emplace_back(i, p);
  start_epoch(0);
}

void BatchIterator::start_epoch(std::size_t epoch) {
  Rng rng(mix_seed(seed_, 0xb0 + epoch));
  std::shuffle(order_.begin(), order_.end(), rng);
  cursor_ = 0;
}

std::size_t BatchIterator::batches_per_epoch() const {
  return (order_.size() + batch_size_ - 1) / batch_size_;
}

std::optional<RegionBatch> BatchIterator::next() {
  if (cursor_ >= order_.size()) return std::nullopt;
  const std::size_t count = std::min(batch_size_, order_.size() - cursor_);

  RegionBatch batch;
  batch.features = Matrix(count, dataset_->region_dim);
  batch.targets = Matrix(count, 4);
  batch.labels.resize(count);
  batch.boxes.resize(count);

  for (std::size_t k = 0; k < count; ++k) {
    const auto [img, idx] = order_[cursor_ + k];
    const Proposal& p = dataset_->images[img].proposals[idx];
    std::copy(p.feature.begin(), p.feature.end(), batch.features.row(k).begin());
    batch.labels[k] = p.label;
    batch.boxes[k] = p.box;
    batch.targets(k, 0) = p.target.tx;
    batch.targets(k, 1) = p.target.ty;
    batch.targets(k, 2) = p.target.tw;
    batch.targets(k, 3) = p.target.th;
  }
  cursor_ += count;
  return batch;
}

}  // namespace zsd
